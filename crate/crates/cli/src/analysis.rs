//! Trend, saturation and collapse statistics computed from result rows.

use std::collections::{BTreeMap, BTreeSet};

use plateau_core::analytics::DEEP_BASE;
use plateau_core::estimator::{fit_exponential, fit_through_origin, ExponentialFit, KMode, OriginFit};
use serde::{Deserialize, Serialize};

use crate::rows::ResultRow;

pub fn rows_with_mode(rows: &[ResultRow], k_mode: KMode) -> Vec<&ResultRow> {
    rows.iter().filter(|r| r.k_mode == k_mode).collect()
}

/// Distinct k-modes in first-appearance order.
pub fn k_modes(rows: &[ResultRow]) -> Vec<KMode> {
    let mut out: Vec<KMode> = Vec::new();
    for r in rows {
        if !out.contains(&r.k_mode) {
            out.push(r.k_mode);
        }
    }
    out
}

fn var(r: &ResultRow) -> f64 {
    r.var_est.unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrend {
    /// Every variance is below the previous one, in row order.
    pub strictly_decreasing: bool,
    /// `ln var` against `N_eff`; `None` when some variance is not positive.
    pub fit: Option<ExponentialFit>,
}

pub fn decay_trend(rows: &[&ResultRow]) -> DecayTrend {
    let strictly_decreasing = rows.windows(2).all(|w| var(w[1]) < var(w[0]));
    let xs: Vec<f64> = rows.iter().map(|r| r.n_eff as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| var(r)).collect();
    DecayTrend { strictly_decreasing, fit: fit_exponential(&xs, &ys).ok() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    /// `n → |var(l_b) − var(l_a)| / var(l_a)`.
    pub relative_change: BTreeMap<usize, f64>,
    pub max_relative_change: f64,
}

/// Relative change of each `n` series between depths `l_a` and `l_b`.
pub fn saturation(rows: &[&ResultRow], l_a: usize, l_b: usize) -> Saturation {
    let at = |n: usize, l: usize| rows.iter().find(|r| r.n == n && r.l == l).map(|r| var(r));
    let mut relative_change = BTreeMap::new();
    let ns: BTreeSet<usize> = rows.iter().map(|r| r.n).collect();
    for n in ns {
        let change = match (at(n, l_a), at(n, l_b)) {
            (Some(a), Some(b)) => (b - a).abs() / a,
            _ => f64::NAN,
        };
        relative_change.insert(n, change);
    }
    let max_relative_change = relative_change.values().fold(0.0f64, |m, &v| if v.is_nan() { f64::NAN } else { m.max(v) });
    Saturation { relative_change, max_relative_change }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthDecay {
    pub l: usize,
    pub fit: Option<ExponentialFit>,
    /// `|ln(base / (9/32))|`.
    pub log_mismatch: f64,
}

/// Exponential fit of variance against `n` at depth `l`.
pub fn decay_in_n(rows: &[&ResultRow], l: usize) -> DepthDecay {
    let pts: Vec<&&ResultRow> = rows.iter().filter(|r| r.l == l).collect();
    let xs: Vec<f64> = pts.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|r| var(r)).collect();
    let fit = fit_exponential(&xs, &ys).ok();
    let log_mismatch = fit.map_or(f64::INFINITY, |f| (f.base / DEEP_BASE).ln().abs());
    DepthDecay { l, fit, log_mismatch }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub fit: Option<OriginFit>,
    /// Every row with `N_eff = 0` has variance exactly 0.
    pub zero_point_exact: bool,
    pub zero_points: usize,
}

/// Regression of variance on `s·N_eff/l` through the origin.
pub fn collapse(rows: &[&ResultRow]) -> Collapse {
    let xs: Vec<f64> = rows.iter().map(|r| (r.s * r.n_eff) as f64 / r.l as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| var(r)).collect();
    let zeros: Vec<&&ResultRow> = rows.iter().filter(|r| r.n_eff == 0).collect();
    Collapse {
        fit: fit_through_origin(&xs, &ys).ok(),
        zero_point_exact: zeros.iter().all(|r| r.var_est == Some(0.0)),
        zero_points: zeros.len(),
    }
}

/// Least-squares amplitude `c` of `y ≈ c·f`.
pub fn fit_amplitude(pairs: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = pairs.fold((0.0, 0.0), |(a, b), (f, y)| (a + f * y, b + f * f));
    (den > 0.0).then(|| num / den)
}
