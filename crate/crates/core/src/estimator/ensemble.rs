use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{effective_parameters, CircuitInstance, CircuitSpec};
use crate::error::{Error, Result};
use crate::estimator::stats::{bootstrap_variance, chunked_summary, BOOTSTRAP_RESAMPLES};
use crate::estimator::RandomStream;
use crate::gradient::grad_reduced;
use crate::pauli::PauliString;

/// Which slot is differentiated in each sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KMode {
    FixedSlot(usize),
    /// Uniform over slots in the observable's light cone.
    RandomEffective,
    /// Uniform over every slot; slots outside the cone contribute 0.
    RandomAll,
}

impl fmt::Display for KMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KMode::FixedSlot(k) => write!(f, "fixed_slot({k})"),
            KMode::RandomEffective => f.write_str("random_effective"),
            KMode::RandomAll => f.write_str("random_all"),
        }
    }
}

impl FromStr for KMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random_effective" => Ok(KMode::RandomEffective),
            "random_all" => Ok(KMode::RandomAll),
            other => other
                .strip_prefix("fixed_slot(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.trim().parse().ok())
                .map(KMode::FixedSlot)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown k_mode {other:?}"))),
        }
    }
}

impl TryFrom<String> for KMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KMode> for String {
    fn from(k: KMode) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub n_samples: usize,
    pub mean: f64,
    pub mean_std_error: f64,
    /// Unbiased sample variance of the gradient.
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bootstrap standard error of `variance`.
    pub std_error: f64,
    pub master_seed: u64,
    pub k_mode: KMode,
    pub n_eff: usize,
}

/// Summary statistics and bootstrap interval for a gradient sample.
pub fn summarize(samples: &[f64], master_seed: u64, k_mode: KMode, n_eff: usize) -> VarianceEstimate {
    let w = chunked_summary(samples);
    let variance = w.variance();
    let boot = bootstrap_variance(samples, BOOTSTRAP_RESAMPLES, master_seed);
    VarianceEstimate {
        n_samples: samples.len(),
        mean: w.mean(),
        mean_std_error: (variance / samples.len() as f64).sqrt(),
        variance,
        ci_low: boot.low.min(variance),
        ci_high: boot.high.max(variance),
        std_error: boot.std_error,
        master_seed,
        k_mode,
        n_eff,
    }
}

struct Plan<'a> {
    spec: &'a CircuitSpec,
    observable: &'a PauliString,
    k_mode: KMode,
    master_seed: u64,
    effective: Vec<usize>,
    in_cone: Vec<bool>,
}

impl Plan<'_> {
    fn sample(&self, index: u64) -> Result<f64> {
        let mut stream = RandomStream::new(self.master_seed, index);
        let slot = match self.k_mode {
            KMode::FixedSlot(k) => k,
            KMode::RandomEffective => self.effective[stream.below(self.effective.len())],
            KMode::RandomAll => stream.below(self.spec.parameter_count()),
        };
        if !self.in_cone[slot] {
            return Ok(0.0);
        }
        let instance = CircuitInstance::sample(self.spec, &mut stream)?;
        grad_reduced(&instance, self.observable, slot)
    }
}

fn plan<'a>(
    spec: &'a CircuitSpec,
    observable: &'a PauliString,
    k_mode: KMode,
    master_seed: u64,
) -> Result<Plan<'a>> {
    spec.validate()?;
    let effective: Vec<usize> = effective_parameters(spec, observable)?.into_iter().collect();
    let mut in_cone = vec![false; spec.parameter_count()];
    effective.iter().for_each(|&s| in_cone[s] = true);
    match k_mode {
        KMode::FixedSlot(k) if !spec.is_active(k) => return Err(Error::InactiveSlot(k)),
        KMode::RandomEffective if effective.is_empty() => return Err(Error::NoActiveSlots),
        _ => {}
    }
    Ok(Plan { spec, observable, k_mode, master_seed, effective, in_cone })
}

/// One parameter-shift gradient per sample, in sample order. Sample `i`
/// draws everything from stream `(master_seed, i)`.
pub fn sample_gradients(
    spec: &CircuitSpec,
    observable: &PauliString,
    k_mode: KMode,
    n_samples: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let plan = plan(spec, observable, k_mode, master_seed)?;
    let run = || -> Result<Vec<f64>> {
        (0..n_samples as u64).into_par_iter().map(|i| plan.sample(i)).collect()
    };
    if workers <= 1 {
        return (0..n_samples as u64).map(|i| plan.sample(i)).collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?
        .install(run)
}

/// Gradient mean, unbiased variance and bootstrap interval over
/// `n_samples` random instances. Identical inputs give bit-identical
/// output for every worker count.
pub fn run_ensemble(
    spec: &CircuitSpec,
    observable: &PauliString,
    k_mode: KMode,
    n_samples: usize,
    master_seed: u64,
    workers: usize,
) -> Result<VarianceEstimate> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n_samples });
    }
    let n_eff = effective_parameters(spec, observable)?.len();
    let samples = sample_gradients(spec, observable, k_mode, n_samples, master_seed, workers)?;
    Ok(summarize(&samples, master_seed, k_mode, n_eff))
}
