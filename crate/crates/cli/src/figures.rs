//! Figure sweeps: single-layer settings, support sweep, depth saturation and
//! pruning collapse.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use plateau_core::analytics::{
    fg_lookup, predict_deep_variance, predict_single_layer_variance, PrefactorMode, Setting, FG_MAX_WIDTH,
};
use plateau_core::estimator::{run_ensemble, KMode, VarianceEstimate};
use plateau_core::{effective_parameters, prune, CircuitSpec, PauliString, RandomStream};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, fit_amplitude};
use crate::config::content_hash;
use crate::error::{CliError, Result};
use crate::rows::ResultRow;
use crate::svg::{Plot, Series, Style};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureTag {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl FigureTag {
    pub const ALL: [FigureTag; 4] = [FigureTag::Fig1, FigureTag::Fig2, FigureTag::Fig3, FigureTag::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            FigureTag::Fig1 => "fig1",
            FigureTag::Fig2 => "fig2",
            FigureTag::Fig3 => "fig3",
            FigureTag::Fig4 => "fig4",
        }
    }

    /// Whether the sweep reads its circuit setting from a calibration report.
    pub fn needs_calibration(self) -> bool {
        matches!(self, FigureTag::Fig1 | FigureTag::Fig2)
    }
}

impl fmt::Display for FigureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureTag {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        FigureTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown figure {s:?}; expected fig1, fig2, fig3 or fig4")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Sizes that finish in minutes on one machine.
    #[default]
    Desk,
    /// Larger sizes closer to the published plots.
    Paper,
}

/// Everything a figure sweep depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePlan {
    pub tag: FigureTag,
    pub scale: Scale,
    pub n_values: Vec<usize>,
    pub layers: Vec<usize>,
    pub widths: Vec<usize>,
    pub prune_fractions: Vec<f64>,
    /// Observable support sizes; empty means `Z` on every qubit.
    pub supports: Vec<usize>,
    pub k_modes: Vec<KMode>,
    pub samples: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub prefactor_mode: PrefactorMode,
    pub setting: Setting,
    /// Deep-circuit amplitude; fitted to the sweep when absent.
    pub c0: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl FigurePlan {
    pub fn new(tag: FigureTag, scale: Scale, setting: Setting) -> Self {
        let paper = scale == Scale::Paper;
        let (n_values, layers, widths, prune_fractions, supports, k_modes, samples) = match tag {
            FigureTag::Fig1 => (
                (2..=if paper { 16 } else { 10 }).collect(),
                vec![1],
                (1..=FG_MAX_WIDTH).collect(),
                vec![0.0],
                vec![],
                vec![KMode::RandomEffective],
                20_000,
            ),
            FigureTag::Fig2 => (
                vec![18],
                vec![1],
                vec![1],
                vec![0.0],
                (1..=18).collect(),
                vec![KMode::FixedSlot(0), KMode::RandomEffective, KMode::RandomAll],
                10_000,
            ),
            FigureTag::Fig3 => (
                if paper { (2..=12).collect() } else { vec![2, 4, 6, 8, 10] },
                vec![5, 10, 25, 50, 100, 150],
                vec![1],
                vec![0.0],
                vec![],
                vec![KMode::RandomEffective, KMode::RandomAll],
                10_000,
            ),
            FigureTag::Fig4 => (
                vec![if paper { 12 } else { 8 }],
                if paper { vec![50, 100, 150] } else { vec![50, 100] },
                vec![1, 2, 4],
                vec![0.0, 0.25, 0.5, 0.75, 1.0],
                vec![],
                vec![KMode::RandomAll],
                10_000,
            ),
        };
        Self {
            tag,
            scale,
            n_values,
            layers,
            widths,
            prune_fractions,
            supports,
            k_modes,
            samples,
            master_seed: DEFAULT_SEED,
            workers: 1,
            prefactor_mode: PrefactorMode::default(),
            setting,
            c0: None,
        }
    }

    /// Hash of the plan with the worker count excluded.
    pub fn hash(&self) -> Result<String> {
        let mut p = self.clone();
        p.workers = 0;
        content_hash(&p)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("n_values", self.n_values.is_empty()),
            ("layers", self.layers.is_empty()),
            ("widths", self.widths.is_empty()),
            ("prune_fractions", self.prune_fractions.is_empty()),
            ("k_modes", self.k_modes.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(CliError::config(format!("{name}: axis is empty")));
        }
        if self.samples < 2 {
            return Err(CliError::config("samples: at least 2 samples are required"));
        }
        if self.workers == 0 {
            return Err(CliError::config("workers: must be at least 1"));
        }
        if let Some(w) = self.widths.iter().find(|&&s| !self.setting.supports_width(s)) {
            return Err(CliError::config(format!(
                "widths: setting {} does not support block width {w}",
                self.setting.id()
            )));
        }
        if let Some(f) = self.prune_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CliError::config(format!("prune_fractions: {f} is outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub rows: Vec<ResultRow>,
    pub plot: Plot,
    pub notes: BTreeMap<String, serde_json::Value>,
}

struct Runner<'a> {
    plan: &'a FigurePlan,
    rows: Vec<ResultRow>,
    notes: BTreeMap<String, serde_json::Value>,
}

impl Runner<'_> {
    fn estimate(&self, spec: &CircuitSpec, o: &PauliString, k: KMode) -> Result<VarianceEstimate> {
        let n_eff = effective_parameters(spec, o)?.len();
        if n_eff == 0 {
            // The gradient is identically zero; there is nothing to sample.
            return Ok(VarianceEstimate {
                n_samples: self.plan.samples,
                mean: 0.0,
                mean_std_error: 0.0,
                variance: 0.0,
                ci_low: 0.0,
                ci_high: 0.0,
                std_error: 0.0,
                master_seed: self.plan.master_seed,
                k_mode: k,
                n_eff: 0,
            });
        }
        Ok(run_ensemble(spec, o, k, self.plan.samples, self.plan.master_seed, self.plan.workers)?)
    }

    fn push(&mut self, spec: &CircuitSpec, est: &VarianceEstimate, k_mode: KMode, predicted: Option<f64>) {
        self.rows.push(ResultRow {
            figure_tag: self.plan.tag.name().into(),
            n: spec.n,
            s: spec.block_width,
            l: spec.layers,
            n_eff: est.n_eff,
            k_mode,
            n_samples: est.n_samples,
            master_seed: est.master_seed,
            var_est: Some(est.variance),
            ci_low: Some(est.ci_low),
            ci_high: Some(est.ci_high),
            predicted,
            prefactor_mode: self.plan.prefactor_mode,
            setting_id: self.plan.setting.id(),
        });
    }

    fn single_layer_prediction(&self, n: usize, s: usize, n_eff: usize) -> Option<f64> {
        predict_single_layer_variance(n, s, n_eff, self.plan.prefactor_mode).ok()
    }

    /// Fills `predicted` from the deep-circuit law, with one amplitude per
    /// k-mode fitted to that mode's rows unless the plan fixes it.
    fn fill_deep_predictions(&mut self) -> Result<()> {
        for k in analysis::k_modes(&self.rows) {
            let shape = |r: &ResultRow| predict_deep_variance(r.n, r.s, r.n_eff, r.l, 1.0);
            let c0 = match self.plan.c0 {
                Some(c) => Some(c),
                None => fit_amplitude(
                    self.rows.iter().filter(|r| r.k_mode == k).map(|r| (shape(r), r.var_est.unwrap_or(0.0))),
                ),
            };
            for r in self.rows.iter_mut().filter(|r| r.k_mode == k) {
                r.predicted = c0.map(|c| c * shape(r));
            }
            note(&mut self.notes, format!("c0[{k}]"), c0)?;
        }
        Ok(())
    }
}

fn note<V: Serialize>(notes: &mut BTreeMap<String, serde_json::Value>, key: impl Into<String>, value: V) -> Result<()> {
    notes.insert(key.into(), serde_json::to_value(value)?);
    Ok(())
}

fn description(plan: &FigurePlan) -> Result<String> {
    Ok(format!("{} master_seed={} config_hash={}", plan.tag, plan.master_seed, plan.hash()?))
}

fn markers(label: String, points: Vec<(f64, f64)>, color: usize) -> Series {
    Series { label, points, style: Style::Markers, color }
}

fn dashed(label: String, points: Vec<(f64, f64)>, color: usize) -> Series {
    Series { label, points, style: Style::Dashed, color }
}

fn var_of(r: &ResultRow) -> f64 {
    r.var_est.unwrap_or(f64::NAN)
}

fn fig1(run: &mut Runner) -> Result<Plot> {
    let plan = run.plan;
    for &s in &plan.widths {
        for &n in plan.n_values.iter().filter(|&&n| n >= s && n % s == 0) {
            let spec = plan.setting.spec(n, 1, s)?;
            let o = PauliString::z_prefix(n, n)?;
            for &k in &plan.k_modes {
                let est = run.estimate(&spec, &o, k)?;
                let predicted = run.single_layer_prediction(n, s, est.n_eff);
                run.push(&spec, &est, k, predicted);
            }
        }
    }
    let mut series = Vec::new();
    let k0 = plan.k_modes[0];
    for (i, &s) in plan.widths.iter().enumerate() {
        let rows: Vec<&ResultRow> = run.rows.iter().filter(|r| r.s == s && r.k_mode == k0).collect();
        let trend = analysis::decay_trend(&rows);
        if let (Some(fit), Ok(entry)) = (trend.fit, fg_lookup(s)) {
            let (f, g) = entry.f64_pair();
            note(&mut run.notes, 
                format!("fit[s={s}]"),
                serde_json::json!({"F_hat": fit.amplitude * fit.base / s as f64, "G_hat": fit.base, "r2": fit.r2, "F": f, "G": g}),
            )?;
        }
        series.push(markers(format!("s={s}"), rows.iter().map(|r| (r.n as f64, var_of(r))).collect(), i));
        let pred: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.predicted.map(|p| (r.n as f64, p))).collect();
        series.push(dashed(format!("s={s} law"), pred, i));
    }
    Ok(Plot {
        title: format!("Single-layer gradient variance ({})", plan.setting.id()),
        x_label: "n".into(),
        y_label: "Var[∂L]".into(),
        log_y: true,
        series,
        description: description(plan)?,
    })
}

fn fig2(run: &mut Runner) -> Result<Plot> {
    let plan = run.plan;
    for &n in &plan.n_values {
        for &s in plan.widths.iter().filter(|&&s| n % s == 0) {
            let spec = plan.setting.spec(n, 1, s)?;
            for &k in &plan.k_modes {
                for &m in plan.supports.iter().filter(|&&m| m <= n) {
                    let o = PauliString::z_prefix(n, m)?;
                    let est = run.estimate(&spec, &o, k)?;
                    let predicted = run.single_layer_prediction(n, s, est.n_eff);
                    run.push(&spec, &est, k, predicted);
                }
            }
        }
    }
    let mut series = Vec::new();
    for (i, &k) in plan.k_modes.iter().enumerate() {
        let rows = analysis::rows_with_mode(&run.rows, k);
        let trend = analysis::decay_trend(&rows);
        note(&mut run.notes, format!("trend[{k}]"), &trend)?;
        series.push(markers(k.to_string(), rows.iter().map(|r| (r.n_eff as f64, var_of(r))).collect(), i));
    }
    let mut law: Vec<(f64, f64)> = run.rows.iter().filter_map(|r| r.predicted.map(|p| (r.n_eff as f64, p))).collect();
    law.sort_by(|a, b| a.0.total_cmp(&b.0));
    law.dedup();
    series.push(dashed(format!("law ({})", plan.prefactor_mode.name()), law, plan.k_modes.len()));
    Ok(Plot {
        title: format!("Single-layer variance against effective parameters ({})", plan.setting.id()),
        x_label: "N_eff".into(),
        y_label: "Var[∂L]".into(),
        log_y: true,
        series,
        description: description(plan)?,
    })
}

fn fig3(run: &mut Runner) -> Result<Plot> {
    let plan = run.plan;
    for &n in &plan.n_values {
        for &l in &plan.layers {
            for &s in plan.widths.iter().filter(|&&s| n % s == 0) {
                let spec = plan.setting.spec(n, l, s)?;
                let o = PauliString::z_prefix(n, n)?;
                let mut shared: Option<VarianceEstimate> = None;
                for &k in &plan.k_modes {
                    // When every slot is effective the two random modes draw
                    // identical streams, so one run serves both.
                    let random = matches!(k, KMode::RandomAll | KMode::RandomEffective);
                    let est = match (&shared, random) {
                        (Some(est), true) if est.n_eff == spec.parameter_count() => est.clone(),
                        _ => run.estimate(&spec, &o, k)?,
                    };
                    if random {
                        shared = Some(est.clone());
                    }
                    run.push(&spec, &est, k, None);
                }
            }
        }
    }
    run.fill_deep_predictions()?;
    let l_max = *plan.layers.iter().max().unwrap_or(&1);
    let l_prev = plan.layers.iter().copied().filter(|&l| l < l_max).max();
    let mut best: Option<(f64, KMode)> = None;
    for k in plan.k_modes.clone() {
        let rows = analysis::rows_with_mode(&run.rows, k);
        let decay = analysis::decay_in_n(&rows, l_max);
        if best.map_or(true, |(m, _)| decay.log_mismatch < m) {
            best = Some((decay.log_mismatch, k));
        }
        note(&mut run.notes, format!("decay[{k}]"), &decay)?;
        if let Some(lp) = l_prev {
            note(&mut run.notes, format!("saturation[{k}]"), analysis::saturation(&rows, lp, l_max))?;
        }
    }
    if let Some((_, k)) = best {
        note(&mut run.notes, "best_k_mode", k.to_string())?;
    }
    let k0 = plan.k_modes[0];
    let mut series = Vec::new();
    for (i, &n) in plan.n_values.iter().enumerate() {
        let rows: Vec<&ResultRow> = run.rows.iter().filter(|r| r.n == n && r.k_mode == k0).collect();
        series.push(markers(format!("n={n}"), rows.iter().map(|r| (r.l as f64, var_of(r))).collect(), i));
        series.push(dashed(
            format!("n={n} law"),
            rows.iter().filter_map(|r| r.predicted.map(|p| (r.l as f64, p))).collect(),
            i,
        ));
    }
    Ok(Plot {
        title: format!("Gradient variance against depth ({k0})"),
        x_label: "l".into(),
        y_label: "Var[∂L]".into(),
        log_y: true,
        series,
        description: description(plan)?,
    })
}

fn fig4(run: &mut Runner) -> Result<Plot> {
    let plan = run.plan;
    let mut index = 0u64;
    for &n in &plan.n_values {
        for &s in plan.widths.iter().filter(|&&s| n % s == 0) {
            for &f in &plan.prune_fractions {
                for &l in &plan.layers {
                    let spec = prune(&plan.setting.spec(n, l, s)?, f, &mut RandomStream::pruning(plan.master_seed, index));
                    index += 1;
                    let o = PauliString::z_prefix(n, n)?;
                    for &k in &plan.k_modes {
                        let est = run.estimate(&spec, &o, k)?;
                        run.push(&spec, &est, k, None);
                    }
                }
            }
        }
    }
    run.fill_deep_predictions()?;
    let mut series = Vec::new();
    for k in plan.k_modes.clone() {
        let rows = analysis::rows_with_mode(&run.rows, k);
        note(&mut run.notes, format!("collapse[{k}]"), analysis::collapse(&rows))?;
    }
    let k0 = plan.k_modes[0];
    let rows0 = analysis::rows_with_mode(&run.rows, k0);
    let x = |r: &ResultRow| (r.s * r.n_eff) as f64 / r.l as f64;
    for (i, &s) in plan.widths.iter().enumerate() {
        let pts = rows0.iter().filter(|r| r.s == s).map(|r| (x(r), var_of(r))).collect();
        series.push(markers(format!("s={s}"), pts, i));
    }
    if let Some(fit) = analysis::collapse(&rows0).fit {
        let x_max = rows0.iter().map(|r| x(r)).fold(0.0, f64::max);
        series.push(Series {
            label: format!("slope {:.3e}, R²={:.3}", fit.slope, fit.r2),
            points: vec![(0.0, 0.0), (x_max, fit.slope * x_max)],
            style: Style::Line,
            color: 7,
        });
    }
    Ok(Plot {
        title: format!("Variance against s·N_eff/l ({k0})"),
        x_label: "s·N_eff/l".into(),
        y_label: "Var[∂L]".into(),
        log_y: false,
        series,
        description: description(plan)?,
    })
}

pub fn run_figure(plan: &FigurePlan) -> Result<FigureOutput> {
    plan.validate()?;
    let mut run = Runner { plan, rows: Vec::new(), notes: BTreeMap::new() };
    let plot = match plan.tag {
        FigureTag::Fig1 => fig1(&mut run)?,
        FigureTag::Fig2 => fig2(&mut run)?,
        FigureTag::Fig3 => fig3(&mut run)?,
        FigureTag::Fig4 => fig4(&mut run)?,
    };
    Ok(FigureOutput { rows: run.rows, plot, notes: run.notes })
}
