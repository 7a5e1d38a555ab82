use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// `E_θ[cos^a(θ/2) sin^b(θ/2)]` for `θ` uniform on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrigMoment {
    pub cos_power: u32,
    pub sin_power: u32,
    pub value: Rational,
}

fn double_factorial(k: i64) -> i64 {
    (1..=k).rev().step_by(2).product::<i64>().max(1)
}

/// Exact value, or `None` when the moment is irrational (even cosine power
/// with odd sine power).
pub fn trig_moment(cos_power: u32, sin_power: u32) -> Option<TrigMoment> {
    let value = if cos_power % 2 == 1 {
        Rational::zero()
    } else if sin_power % 2 == 1 {
        return None;
    } else {
        let (a, b) = (cos_power as i64, sin_power as i64);
        Rational::new(double_factorial(a - 1) * double_factorial(b - 1), double_factorial(a + b))
    };
    Some(TrigMoment { cos_power, sin_power, value })
}

/// Single-layer variance constants for block width `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FGEntry {
    pub s: usize,
    pub f: Rational,
    pub g: Rational,
}

impl FGEntry {
    pub fn f64_pair(&self) -> (f64, f64) {
        (self.f.to_f64().unwrap_or(f64::NAN), self.g.to_f64().unwrap_or(f64::NAN))
    }
}

pub const FG_MAX_WIDTH: usize = 4;

const FG_TABLE: [(i64, i64, i64, i64); FG_MAX_WIDTH] =
    [(1, 4, 5, 12), (5, 96, 1, 3), (25, 1728, 17, 126), (125, 27648, 37, 510)];

pub fn fg_lookup(s: usize) -> Result<FGEntry> {
    if !(1..=FG_MAX_WIDTH).contains(&s) {
        return Err(Error::UnsupportedWidth(s));
    }
    let (fn_, fd, gn, gd) = FG_TABLE[s - 1];
    Ok(FGEntry { s, f: Rational::new(fn_, fd), g: Rational::new(gn, gd) })
}

/// `F(s) = (1/(4s))·(5/12)^{s−1}`, defined for every width.
pub fn f_closed_form(s: usize) -> Rational {
    let mut f = Rational::new(1, 4 * s as i64);
    for _ in 1..s {
        f *= Rational::new(5, 12);
    }
    f
}

/// How the block-count prefactor of the single-layer law is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorMode {
    /// `(s·N_eff/n)·F·G^{N_eff−1}`.
    #[default]
    SlotFraction,
    /// `s·F·G^{N_eff−1}`.
    BlockWidth,
}

impl PrefactorMode {
    pub const ALL: [PrefactorMode; 2] = [PrefactorMode::SlotFraction, PrefactorMode::BlockWidth];

    pub fn name(self) -> &'static str {
        match self {
            PrefactorMode::SlotFraction => "slot_fraction",
            PrefactorMode::BlockWidth => "block_width",
        }
    }
}

pub fn predict_single_layer_variance(
    n: usize,
    s: usize,
    n_eff: usize,
    mode: PrefactorMode,
) -> Result<f64> {
    let entry = fg_lookup(s)?;
    if n_eff == 0 {
        return Ok(0.0);
    }
    let (f, g) = entry.f64_pair();
    let prefactor = match mode {
        PrefactorMode::SlotFraction => (s * n_eff) as f64 / n as f64,
        PrefactorMode::BlockWidth => s as f64,
    };
    Ok(prefactor * f * g.powi(n_eff as i32 - 1))
}

pub const DEEP_BASE: f64 = 9.0 / 32.0;

/// `c0·(9/32)^n·s·N_eff/(n·l)`.
pub fn predict_deep_variance(n: usize, s: usize, n_eff: usize, l: usize, c0: f64) -> f64 {
    c0 * DEEP_BASE.powi(n as i32) * (s * n_eff) as f64 / (n * l.max(1)) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn trig_moment_values() {
        assert_eq!(trig_moment(2, 0).unwrap().value, r(1, 2));
        assert_eq!(trig_moment(0, 2).unwrap().value, r(1, 2));
        assert_eq!(trig_moment(4, 0).unwrap().value, r(3, 8));
        assert_eq!(trig_moment(0, 4).unwrap().value, r(3, 8));
        assert_eq!(trig_moment(2, 2).unwrap().value, r(1, 8));
        assert_eq!(trig_moment(3, 1).unwrap().value, r(0, 1));
        assert_eq!(trig_moment(0, 0).unwrap().value, r(1, 1));
        assert!(trig_moment(0, 1).is_none());
    }

    #[test]
    fn trig_moments_match_quadrature() {
        let m = 200_000;
        for (a, b) in [(2, 0), (4, 0), (2, 2), (6, 2), (1, 1), (3, 2)] {
            let q: f64 = (0..m)
                .map(|i| {
                    let h = (i as f64 + 0.5) / m as f64 * std::f64::consts::PI;
                    h.cos().powi(a) * h.sin().powi(b)
                })
                .sum::<f64>()
                / m as f64;
            let exact = trig_moment(a as u32, b as u32).unwrap().value.to_f64().unwrap();
            assert!((q - exact).abs() < 1e-9, "({a},{b}) {q} vs {exact}");
        }
    }

    #[test]
    fn table_entries() {
        assert_eq!(fg_lookup(1).unwrap().f, r(1, 4));
        assert_eq!(fg_lookup(1).unwrap().g, r(5, 12));
        assert_eq!(fg_lookup(3).unwrap().f, r(25, 1728));
        assert_eq!(fg_lookup(3).unwrap().g, r(17, 126));
        assert_eq!(fg_lookup(4).unwrap().g, r(37, 510));
        assert!(matches!(fg_lookup(5), Err(Error::UnsupportedWidth(5))));
        assert!(fg_lookup(0).is_err());
    }

    #[test]
    fn f_column_matches_closed_form() {
        for s in 1..=FG_MAX_WIDTH {
            assert_eq!(fg_lookup(s).unwrap().f, f_closed_form(s));
        }
        assert_eq!(f_closed_form(2), r(5, 96));
    }

    #[test]
    fn single_layer_predictions() {
        let v = predict_single_layer_variance(6, 1, 6, PrefactorMode::SlotFraction).unwrap();
        assert!((v - 0.25 * (5.0f64 / 12.0).powi(5)).abs() < 1e-17);
        assert!((v - 3.139e-3).abs() < 1e-6);
        let v = predict_single_layer_variance(8, 2, 4, PrefactorMode::BlockWidth).unwrap();
        assert!((v - 5.0 / 48.0 / 27.0).abs() < 1e-17);
        assert!((v - 3.858e-3).abs() < 1e-6);
        for mode in PrefactorMode::ALL {
            assert_eq!(predict_single_layer_variance(4, 2, 0, mode).unwrap(), 0.0);
        }
        assert!(predict_single_layer_variance(10, 5, 2, PrefactorMode::SlotFraction).is_err());
    }

    #[test]
    fn deep_prediction_ratios() {
        let base = predict_deep_variance(6, 1, 6, 10, 2.0);
        assert!((predict_deep_variance(6, 1, 6, 20, 2.0) / base - 0.5).abs() < 1e-15);
        let next = predict_deep_variance(7, 1, 6, 10, 2.0);
        assert!((next / base - DEEP_BASE * 6.0 / 7.0).abs() < 1e-14);
        assert_eq!(predict_deep_variance(6, 1, 0, 10, 2.0), 0.0);
    }
}
