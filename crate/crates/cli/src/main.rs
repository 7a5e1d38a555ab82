use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plateau_experiments::commands::{load_calibration, write_calibration, write_figure, write_sample, Written, CALIBRATION_FILE};
use plateau_experiments::config::read_json_config;
use plateau_experiments::verify::{run_checks, Level};
use plateau_experiments::{CliError, ExperimentConfig, FigurePlan, FigureTag, Result, Scale};
use plateau_core::analytics::{CalibrationGrid, PrefactorMode, Setting};

#[derive(Parser)]
#[command(name = "plateau", version, about = "Gradient-variance experiments on random Pauli-rotation circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Monte Carlo samples per point.
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrefactorArg {
    #[value(name = "slot_fraction")]
    SlotFraction,
    #[value(name = "block_width")]
    BlockWidth,
}

impl From<PrefactorArg> for PrefactorMode {
    fn from(p: PrefactorArg) -> Self {
        match p {
            PrefactorArg::SlotFraction => PrefactorMode::SlotFraction,
            PrefactorArg::BlockWidth => PrefactorMode::BlockWidth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum TagArg {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate gradient variance at every point of a config's sweep.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        prefactor: Option<PrefactorArg>,
    },
    /// Closed-form predictions over a config's sweep.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Amplitude of the deep-circuit law.
        #[arg(long)]
        c0: Option<f64>,
    },
    /// Compare single-layer variances with the closed form over a grid of
    /// circuit conventions and select one.
    Calibrate {
        /// Grid JSON; the standard grid when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the named consistency checks.
    Verify {
        #[arg(value_enum, default_value = "fast")]
        level: LevelArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Produce one figure's CSV, SVG and manifest.
    Figure {
        #[arg(value_enum)]
        tag: TagArg,
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        /// A figure plan or a previous figure manifest.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Calibration report; `<out>/calibration.json` by default.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        prefactor: Option<PrefactorArg>,
        #[arg(long)]
        c0: Option<f64>,
        /// Qubit counts replacing the figure's default list.
        #[arg(long = "n", num_args = 1..)]
        n_values: Option<Vec<usize>>,
    },
}

fn report(w: &Written) {
    println!("wrote {}", w.csv.display());
    if let Some(svg) = &w.svg {
        println!("wrote {}", svg.display());
    }
    println!("wrote {}", w.manifest.display());
}

fn apply_run(cfg: &mut ExperimentConfig, run: &RunArgs) {
    if let Some(s) = run.samples {
        cfg.n_samples = s;
    }
    if let Some(s) = run.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = run.workers {
        cfg.workers = w;
    }
}

fn figure_plan(
    tag: FigureTag,
    scale: Scale,
    config: Option<PathBuf>,
    calibration: Option<PathBuf>,
    run: &RunArgs,
) -> Result<FigurePlan> {
    if let Some(path) = config {
        let plan: FigurePlan = read_json_config(&path)?;
        if plan.tag != tag {
            return Err(CliError::config(format!("tag: {} holds a {} plan, not {tag}", path.display(), plan.tag)));
        }
        return Ok(plan);
    }
    let cal_path = calibration.unwrap_or_else(|| run.out.join(CALIBRATION_FILE));
    let setting = if tag.needs_calibration() || cal_path.exists() {
        load_calibration(&cal_path)?.selected
    } else {
        Setting::default()
    };
    Ok(FigurePlan::new(tag, scale, setting))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { config, run, prefactor } => {
            let mut cfg: ExperimentConfig = read_json_config(&config)?;
            apply_run(&mut cfg, &run);
            if let Some(p) = prefactor {
                cfg.prefactor_mode = p.into();
            }
            cfg.validate()?;
            let (rows, written) = write_sample(&cfg, &run.out, None)?;
            println!("{} rows", rows.len());
            report(&written);
        }
        Command::Predict { config, run, c0 } => {
            let mut cfg: ExperimentConfig = read_json_config(&config)?;
            apply_run(&mut cfg, &run);
            cfg.validate()?;
            let (rows, written) = write_sample(&cfg, &run.out, Some(c0))?;
            println!("{} rows", rows.len());
            report(&written);
        }
        Command::Calibrate { config, run } => {
            let mut grid = match config {
                Some(path) => read_json_config::<CalibrationGrid>(&path)?,
                None => CalibrationGrid::standard(20_000, plateau_experiments::figures::DEFAULT_SEED, 1),
            };
            if let Some(s) = run.samples {
                grid.samples = s;
            }
            if let Some(s) = run.seed {
                grid.master_seed = s;
            }
            if let Some(w) = run.workers {
                grid.workers = w;
            }
            let (report, path) = write_calibration(&grid, &run.out)?;
            println!("outcome: {:?}", report.outcome);
            println!("selected setting: {}", report.selected_id);
            println!(
                "exponential fits with R² ≥ {}: {}/{}",
                grid.min_r2, report.law_fits_passing, report.law_fits_total
            );
            println!("wrote {}", path.display());
        }
        Command::Verify { level, seed } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let results = run_checks(level, seed);
            for r in &results {
                let mark = if r.passed { "PASS" } else { "FAIL" };
                println!("[{mark}] {} ({:.1} s): {}", r.name, r.seconds, r.detail);
            }
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if !failed.is_empty() {
                return Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))));
            }
        }
        Command::Figure { tag, scale, config, calibration, run, prefactor, c0, n_values } => {
            let tag = match tag {
                TagArg::Fig1 => FigureTag::Fig1,
                TagArg::Fig2 => FigureTag::Fig2,
                TagArg::Fig3 => FigureTag::Fig3,
                TagArg::Fig4 => FigureTag::Fig4,
            };
            let scale = match scale {
                ScaleArg::Desk => Scale::Desk,
                ScaleArg::Paper => Scale::Paper,
            };
            let mut plan = figure_plan(tag, scale, config, calibration, &run)?;
            if let Some(s) = run.samples {
                plan.samples = s;
            }
            if let Some(s) = run.seed {
                plan.master_seed = s;
            }
            if let Some(w) = run.workers {
                plan.workers = w;
            }
            if let Some(p) = prefactor {
                plan.prefactor_mode = p.into();
            }
            if c0.is_some() {
                plan.c0 = c0;
            }
            if let Some(ns) = n_values {
                plan.n_values = ns;
            }
            let (output, written) = write_figure(&plan, &run.out)?;
            println!("{tag}: {} rows, setting {}", output.rows.len(), plan.setting.id());
            report(&written);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
