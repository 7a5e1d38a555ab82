use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytics::{MAX_FIRST_MOMENT_QUBITS, MAX_SECOND_MOMENT_QUBITS};
use crate::circuit::{CircuitInstance, CircuitSpec};
use crate::error::{Error, Result};
use crate::estimator::RandomStream;
use crate::pauli::{check_dense, DenseOperator};

/// Sample mean of an operator-valued random variable with per-entry
/// standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub n_samples: usize,
    pub mean: DenseOperator,
    /// `sqrt((Var Re + Var Im) / N)` for every entry.
    pub std_error: Array2<f64>,
}

impl MomentEstimate {
    /// Largest `|mean − reference|` in units of the entry's standard
    /// error, with `floor` added to each standard error.
    pub fn max_deviation(&self, reference: &DenseOperator, floor: f64) -> f64 {
        let d = self.mean.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let diff = (self.mean.get(r, c) - reference.get(r, c)).norm();
                worst = worst.max(diff / (self.std_error[(r, c)] + floor));
            }
        }
        worst
    }

    /// Whether every entry is within `max(k·stderr, floor)` of `reference`.
    pub fn agrees_with(&self, reference: &DenseOperator, k: f64, floor: f64) -> bool {
        let d = self.mean.dim();
        (0..d).all(|r| {
            (0..d).all(|c| {
                let diff = (self.mean.get(r, c) - reference.get(r, c)).norm();
                diff <= (k * self.std_error[(r, c)]).max(floor)
            })
        })
    }
}

#[derive(Clone)]
struct Sums {
    sum: Array2<Complex64>,
    sq: Array2<f64>,
}

impl Sums {
    fn new(d: usize) -> Self {
        Self { sum: Array2::zeros((d, d)), sq: Array2::zeros((d, d)) }
    }

    fn add(&mut self, x: &DenseOperator) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sq.iter_mut()).zip(x.as_array().iter()) {
            *s += v;
            *q += v.norm_sqr();
        }
    }

    fn merge(mut self, other: &Sums) -> Sums {
        self.sum += &other.sum;
        self.sq += &other.sq;
        self
    }
}

const ORACLE_CHUNK: usize = 4096;

fn estimate<F>(n: usize, spec: &CircuitSpec, n_samples: usize, seed: u64, f: F) -> Result<MomentEstimate>
where
    F: Fn(&DenseOperator) -> DenseOperator + Sync,
{
    spec.validate()?;
    if spec.n != n {
        return Err(Error::SizeMismatch { expected: spec.n, got: n });
    }
    if n_samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n_samples });
    }
    let d = 1usize << n;
    let chunks = n_samples.div_ceil(ORACLE_CHUNK);
    let partials: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Sums> {
            let mut sums = Sums::new(d);
            for i in c * ORACLE_CHUNK..((c + 1) * ORACLE_CHUNK).min(n_samples) {
                let inst = CircuitInstance::sample(spec, &mut RandomStream::new(seed, i as u64))?;
                sums.add(&f(&inst.dense_unitary()?));
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;
    let total = partials.iter().fold(Sums::new(d), |acc, p| acc.merge(p));
    let m = n_samples as f64;
    let mean = total.sum.mapv(|v| v / m);
    let std_error = ndarray::Zip::from(&total.sq)
        .and(&mean)
        .map_collect(|&q, mu| ((q / m - mu.norm_sqr()).max(0.0) * m / (m - 1.0) / m).sqrt());
    Ok(MomentEstimate { n_samples, mean: DenseOperator::from_array(mean)?, std_error })
}

/// Monte Carlo average of `U†aU` over instances of `spec`.
pub fn mc_first_moment(
    a: &DenseOperator,
    spec: &CircuitSpec,
    n_samples: usize,
    master_seed: u64,
) -> Result<MomentEstimate> {
    check_dense(a.n_qubits(), MAX_FIRST_MOMENT_QUBITS)?;
    estimate(a.n_qubits(), spec, n_samples, master_seed, |u| {
        let ud = u.adjoint();
        &(&ud * a) * u
    })
}

/// Monte Carlo average of `U†aU · b · U†cU` over instances of `spec`.
pub fn mc_second_moment(
    a: &DenseOperator,
    b: &DenseOperator,
    c: &DenseOperator,
    spec: &CircuitSpec,
    n_samples: usize,
    master_seed: u64,
) -> Result<MomentEstimate> {
    let n = a.n_qubits();
    check_dense(n, MAX_SECOND_MOMENT_QUBITS)?;
    for op in [b, c] {
        if op.n_qubits() != n {
            return Err(Error::SizeMismatch { expected: n, got: op.n_qubits() });
        }
    }
    estimate(n, spec, n_samples, master_seed, |u| {
        let ud = u.adjoint();
        let left = &(&ud * a) * u;
        let right = &(&ud * c) * u;
        &(&left * b) * &right
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{exact_twirl_first_moment, single_gate_second_moment};
    use crate::circuit::GeneratorPolicy;
    use crate::pauli::BlockSupport;
    use crate::simulator::EntanglerKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_fixed_exactly() {
        let spec = CircuitSpec::new(2, 2, 1).unwrap();
        let id = DenseOperator::identity(2).unwrap();
        let est = mc_first_moment(&id, &spec, 500, 1).unwrap();
        assert!(est.mean.max_abs_diff(&id) < 1e-12);
        let est = mc_second_moment(&id, &id, &id, &spec, 500, 1).unwrap();
        assert!(est.mean.max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn first_moment_agrees_with_exact_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let spec = CircuitSpec::new(3, 2, 1).unwrap().with_entangler(EntanglerKind::CzBrick);
        let a = DenseOperator::random_hermitian(3, &mut rng).unwrap();
        let est = mc_first_moment(&a, &spec, 40_000, 4).unwrap();
        let exact = exact_twirl_first_moment(&a, &spec).unwrap();
        assert!(est.agrees_with(&exact, 5.0, 1e-12), "dev {}", est.max_deviation(&exact, 1e-12));
    }

    #[test]
    fn second_moment_single_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let spec = CircuitSpec::new(1, 1, 1).unwrap().with_policy(GeneratorPolicy::Full).unwrap();
        let a = DenseOperator::random_hermitian(1, &mut rng).unwrap();
        let b = DenseOperator::random_hermitian(1, &mut rng).unwrap();
        let c = DenseOperator::random_hermitian(1, &mut rng).unwrap();
        let est = mc_second_moment(&a, &b, &c, &spec, 40_000, 5).unwrap();
        let exact = single_gate_second_moment(&a, &b, &c, BlockSupport::new(0, 1), GeneratorPolicy::Full).unwrap();
        assert!(est.agrees_with(&exact, 5.0, 1e-12), "dev {}", est.max_deviation(&exact, 1e-12));
    }
}
