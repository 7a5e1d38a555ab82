//! Subcommand bodies. Each computes its rows first and then writes files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use plateau_core::analytics::{
    calibrate_single_layer, predict_deep_variance, predict_single_layer_variance, CalibrationGrid, CalibrationReport,
    PrefactorMode,
};
use plateau_core::estimator::run_ensemble;
use plateau_core::{effective_parameters, Error as CoreError};

use crate::config::{content_hash, ExperimentConfig};
use crate::error::{io_err, CliError, Result};
use crate::figures::{run_figure, FigureOutput, FigurePlan};
use crate::manifest::Manifest;
use crate::rows::{write_csv, ResultRow};

pub const CALIBRATION_FILE: &str = "calibration.json";

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn row(cfg: &ExperimentConfig, tag: &str, n: usize, s: usize, l: usize, n_eff: usize) -> ResultRow {
    ResultRow {
        figure_tag: tag.into(),
        n,
        s,
        l,
        n_eff,
        k_mode: cfg.k_mode,
        n_samples: cfg.n_samples,
        master_seed: cfg.master_seed,
        var_est: None,
        ci_low: None,
        ci_high: None,
        predicted: None,
        prefactor_mode: cfg.prefactor_mode,
        setting_id: cfg.setting_id(),
    }
}

/// One variance estimate per sweep point.
pub fn sample_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let points = cfg.resolve_points()?;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let est = match run_ensemble(&p.spec, &p.observable, cfg.k_mode, cfg.n_samples, cfg.master_seed, cfg.workers) {
            Err(CoreError::NoActiveSlots) => None,
            other => Some(other?),
        };
        let n_eff = effective_parameters(&p.spec, &p.observable)?.len();
        let (n, s, l) = (p.point.n, p.point.s, p.point.l);
        let mut r = row(cfg, &cfg.tag, n, s, l, n_eff);
        // With no effective slot the gradient is identically zero.
        r.var_est = Some(est.as_ref().map_or(0.0, |e| e.variance));
        r.ci_low = Some(est.as_ref().map_or(0.0, |e| e.ci_low));
        r.ci_high = Some(est.as_ref().map_or(0.0, |e| e.ci_high));
        r.predicted = if l == 1 {
            predict_single_layer_variance(n, s, n_eff, cfg.prefactor_mode).ok()
        } else {
            cfg.c0.map(|c0| predict_deep_variance(n, s, n_eff, l, c0))
        };
        rows.push(r);
    }
    Ok(rows)
}

/// Closed-form predictions for every sweep point: both prefactor modes for
/// single-layer points, the deep law with amplitude `c0` otherwise.
pub fn predict_rows(cfg: &ExperimentConfig, c0: Option<f64>) -> Result<Vec<ResultRow>> {
    let c0 = c0.or(cfg.c0);
    let tag = format!("{}-predicted", cfg.tag);
    let mut rows = Vec::new();
    for p in cfg.resolve_points()? {
        let n_eff = effective_parameters(&p.spec, &p.observable)?.len();
        let (n, s, l) = (p.point.n, p.point.s, p.point.l);
        if l == 1 {
            for mode in PrefactorMode::ALL {
                let predicted = predict_single_layer_variance(n, s, n_eff, mode).map_err(|e| match e {
                    CoreError::UnsupportedWidth(_) => {
                        CliError::config(format!("circuit.block_width: {e}; single-layer constants exist for s ≤ 4"))
                    }
                    other => other.into(),
                })?;
                let mut r = row(cfg, &tag, n, s, l, n_eff);
                r.prefactor_mode = mode;
                r.predicted = Some(predicted);
                rows.push(r);
            }
        } else {
            let c0 = c0.ok_or_else(|| {
                CliError::config(format!("c0: deep predictions at l = {l} need c0 (config field or --c0)"))
            })?;
            let mut r = row(cfg, &tag, n, s, l, n_eff);
            r.predicted = Some(predict_deep_variance(n, s, n_eff, l, c0));
            rows.push(r);
        }
    }
    Ok(rows)
}

pub struct Written {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn write_sample(cfg: &ExperimentConfig, out: &Path, predict_only: Option<Option<f64>>) -> Result<(Vec<ResultRow>, Written)> {
    let start = Instant::now();
    let (command, rows) = match predict_only {
        Some(c0) => ("predict", predict_rows(cfg, c0)?),
        None => ("sample", sample_rows(cfg)?),
    };
    let tag = rows.first().map_or_else(|| cfg.tag.clone(), |r| r.figure_tag.clone());
    ensure_dir(out)?;
    let csv = out.join(format!("{tag}.csv"));
    write_csv(&csv, &rows)?;
    let mut m = Manifest::new(command, &tag, cfg.master_seed, cfg.hash()?, cfg.workers, cfg)?;
    m.wall_time_s = start.elapsed().as_secs_f64();
    let manifest = out.join(format!("{tag}.manifest.json"));
    m.write(&manifest)?;
    Ok((rows, Written { csv, manifest, svg: None }))
}

pub fn write_calibration(grid: &CalibrationGrid, out: &Path) -> Result<(CalibrationReport, PathBuf)> {
    if grid.settings.is_empty() || grid.widths.is_empty() {
        return Err(CliError::config("grid: settings and widths must be non-empty"));
    }
    let report = calibrate_single_layer(grid)?;
    ensure_dir(out)?;
    let path = out.join(CALIBRATION_FILE);
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    let mut m = Manifest::new("calibrate", "calibration", grid.master_seed, content_hash(grid)?, grid.workers, grid)?;
    m.note("selected", &report.selected_id)?;
    m.note("outcome", report.outcome)?;
    m.write(&out.join("calibration.manifest.json"))?;
    Ok((report, path))
}

pub fn load_calibration(path: &Path) -> Result<CalibrationReport> {
    if !path.exists() {
        return Err(CliError::config(format!(
            "no calibration report at {}; run `plateau calibrate --out {}` first or pass --calibration PATH",
            path.display(),
            path.parent().map_or(".".into(), |p| p.display().to_string())
        )));
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: not a calibration report: {e}", path.display())))
}

pub fn write_figure(plan: &FigurePlan, out: &Path) -> Result<(FigureOutput, Written)> {
    let start = Instant::now();
    let output = run_figure(plan)?;
    ensure_dir(out)?;
    let tag = plan.tag.name();
    let csv = out.join(format!("{tag}.csv"));
    write_csv(&csv, &output.rows)?;
    let svg = out.join(format!("{tag}.svg"));
    std::fs::write(&svg, output.plot.render()).map_err(io_err(&svg))?;
    let mut m = Manifest::new("figure", tag, plan.master_seed, plan.hash()?, plan.workers, plan)?;
    m.notes = output.notes.clone();
    m.wall_time_s = start.elapsed().as_secs_f64();
    let manifest = out.join(format!("{tag}.manifest.json"));
    m.write(&manifest)?;
    Ok((output, Written { csv, manifest, svg: Some(svg) }))
}
