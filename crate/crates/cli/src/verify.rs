//! Named cross-module consistency checks.

use std::time::Instant;

use num_complex::Complex64;
use plateau_core::analytics::{
    exact_twirl_first_moment, f_closed_form, fg_lookup, pauli_operator, predict_single_layer_variance, single_gate_second_moment,
    subset_first_moment, subset_second_moment, Normalization, PrefactorMode, FG_MAX_WIDTH,
};
use plateau_core::estimator::{mc_first_moment, mc_second_moment, run_ensemble, KMode};
use plateau_core::gradient::{grad_commutator, grad_finite_difference, grad_parameter_shift};
use plateau_core::pauli::{twirl_closed_form, twirl_sum, twirl_sum_second};
use plateau_core::{
    effective_parameters, BlockSupport, CircuitInstance, CircuitSpec, DenseOperator, EntanglerKind, GeneratorPolicy,
    Letter, PauliString, RandomStream, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<(bool, String)>;

const FAST: [(&str, CheckFn); 12] = [
    ("pauli_products", pauli_products),
    ("twirl_first_order", twirl_first_order),
    ("twirl_second_order_trace", twirl_second_order_trace),
    ("rotation_kernel_vs_dense", rotation_kernel_vs_dense),
    ("gradient_three_way", gradient_three_way),
    ("light_cone_reference", light_cone_reference),
    ("twirl_unitality", twirl_unitality),
    ("first_moment_expansion", first_moment_expansion),
    ("first_moment_monte_carlo", first_moment_monte_carlo),
    ("single_layer_constants", single_layer_constants),
    ("worker_determinism", worker_determinism),
    ("product_circuit_variance", product_circuit_variance),
];

const FULL: [(&str, CheckFn); 2] = [
    ("second_moment_single_gate", second_moment_single_gate),
    ("second_moment_expansion", second_moment_expansion),
];

/// Runs every check of `level` in order; the seed fixes all random inputs.
pub fn run_checks(level: Level, seed: u64) -> Vec<CheckResult> {
    let mut checks: Vec<(&'static str, CheckFn)> = FAST.to_vec();
    if level == Level::Full {
        checks.extend(FULL);
    }
    checks
        .into_iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let start = Instant::now();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (passed, detail) = match f(&mut rng) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn random_pauli(n: usize, rng: &mut ChaCha8Rng) -> PauliString {
    let letters: Vec<Letter> = (0..n).map(|_| Letter::ALL[rng.gen_range(0..4)]).collect();
    PauliString::from_letters(&letters).expect("n within range")
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Result<StateVector> {
    let amps: Vec<Complex64> =
        (0..1usize << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ok(StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())?)
}

/// A random circuit whose generators are never the identity.
fn random_spec(max_n: usize, rng: &mut ChaCha8Rng) -> Result<CircuitSpec> {
    let s = rng.gen_range(1..=3usize);
    let n = s * rng.gen_range(1..=max_n / s);
    let l = rng.gen_range(1..=3usize);
    let kind = EntanglerKind::ALL[rng.gen_range(0..EntanglerKind::ALL.len())];
    let policy = if s == 1 && rng.gen_bool(0.5) { GeneratorPolicy::XyzOnly } else { GeneratorPolicy::FullMinusIdentity };
    Ok(CircuitSpec::new(n, l, s)?.with_entangler(kind).with_policy(policy)?)
}

fn verdict(worst: f64, tol: f64, what: &str) -> (bool, String) {
    (worst <= tol, format!("max {what} {worst:.3e} (tolerance {tol:.0e})"))
}

fn pauli_products(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let (p, q) = (random_pauli(n, rng), random_pauli(n, rng));
        let dense = &p.to_dense()? * &q.to_dense()?;
        worst = worst.max(p.mul(&q)?.to_dense()?.max_abs_diff(&dense));
        let comm = &dense - &(&q.to_dense()? * &p.to_dense()?);
        if p.commutes(&q)? != (comm.frobenius_norm() < 1e-12) {
            return Ok((false, format!("commutation of {p} and {q} misreported")));
        }
    }
    Ok(verdict(worst, 1e-14, "product deviation"))
}

fn twirl_first_order(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let width = rng.gen_range(1..=2.min(n));
        let block = BlockSupport::new(rng.gen_range(0..=n - width), width);
        let a = DenseOperator::random_hermitian(n, rng)?;
        worst = worst.max(twirl_sum(&a, block)?.max_abs_diff(&twirl_closed_form(&a, block)?));
    }
    Ok(verdict(worst, 1e-12, "entry deviation"))
}

/// The second-order remainder has trace `2^s·(conj(t) − t)` with
/// `t = Tr(a·c·(Tr_s(b) ⊗ I))`: zero for a full block or `a = c`.
fn twirl_second_order_trace(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = rng.gen_range(1..=4);
        let width = rng.gen_range(1..=2.min(n));
        let block = BlockSupport::new(rng.gen_range(0..=n - width), width);
        let a = DenseOperator::random_hermitian(n, rng)?;
        let b = DenseOperator::random_hermitian(n, rng)?;
        let c = if i % 4 == 0 { a.clone() } else { DenseOperator::random_hermitian(n, rng)? };
        let (_, eps) = twirl_sum_second(&a, &b, &c, block)?;
        let scale = (1u64 << width) as f64;
        let tb = twirl_closed_form(&b, block)?.scale_real(1.0 / scale);
        let t = (&(&a * &c) * &tb).trace();
        let predicted = (t.conj() - t) * scale;
        worst = worst.max((eps.trace() - predicted).norm()).max(eps.trace().re.abs());
    }
    Ok(verdict(worst, 1e-10, "trace deviation"))
}

fn rotation_kernel_vs_dense(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let p = random_pauli(n, rng);
        let theta = rng.gen_range(-7.0..7.0);
        let v = random_state(n, rng)?;
        let mut w = v.clone();
        w.rotate(&p, theta)?;
        let pd = p.to_dense()?;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        for r in 0..v.amplitudes().len() {
            let pv: Complex64 = (0..v.amplitudes().len()).map(|k| pd.get(r, k) * v.amplitudes()[k]).sum();
            let expected = v.amplitudes()[r] * c - Complex64::i() * s * pv;
            worst = worst.max((w.amplitudes()[r] - expected).norm());
        }
    }
    Ok(verdict(worst, 1e-12, "amplitude deviation"))
}

fn gradient_three_way(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (mut commutator, mut difference): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let spec = random_spec(8, rng)?;
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(rng.gen(), i))?;
        let o = random_pauli(spec.n, rng);
        let slot = rng.gen_range(0..spec.parameter_count());
        let ps = grad_parameter_shift(&inst, &o, slot)?;
        commutator = commutator.max((ps - grad_commutator(&inst, &o, slot)?).abs());
        difference = difference.max((ps - grad_finite_difference(&inst, &o, slot, 1e-4)?).abs());
    }
    let passed = commutator <= 1e-10 && difference <= 1e-6;
    Ok((passed, format!("commutator {commutator:.3e} (≤1e-10), central difference {difference:.3e} (≤1e-6)")))
}

fn light_cone_reference(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let spec = CircuitSpec::new(6, 3, 2)?.with_entangler(EntanglerKind::CzBrick);
    let o = PauliString::z_prefix(6, 1)?;
    let eff: Vec<usize> = effective_parameters(&spec, &o)?.into_iter().collect();
    if eff != [0, 1, 2, 3, 4, 6] {
        return Ok((false, format!("effective slots {eff:?}, expected [0, 1, 2, 3, 4, 6]")));
    }
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(rng.gen(), i))?;
        for slot in [5, 7, 8] {
            worst = worst.max(grad_parameter_shift(&inst, &o, slot)?.abs());
        }
    }
    Ok(verdict(worst, 1e-12, "ineffective gradient"))
}

fn twirl_grid() -> Result<Vec<CircuitSpec>> {
    let mut out = Vec::new();
    for n in 1..=4 {
        for s in [1, 2].into_iter().filter(|s| n % s == 0) {
            for l in 1..=3 {
                out.push(CircuitSpec::new(n, l, s)?.with_entangler(EntanglerKind::None).with_policy(GeneratorPolicy::Full)?);
            }
        }
    }
    Ok(out)
}

fn twirl_unitality(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for base in twirl_grid()? {
        for kind in EntanglerKind::ALL {
            let spec = base.clone().with_entangler(kind);
            let id = DenseOperator::identity(spec.n)?;
            worst = worst.max(exact_twirl_first_moment(&id, &spec)?.max_abs_diff(&id));
        }
    }
    Ok(verdict(worst, 1e-12, "deviation from identity"))
}

/// The block-normalized subset expansion equals the composed map for one
/// and two layers.
fn first_moment_expansion(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for spec in twirl_grid()?.into_iter().filter(|s| s.layers <= 2) {
        let a = DenseOperator::random_hermitian(spec.n, rng)?;
        let exact = exact_twirl_first_moment(&a, &spec)?;
        worst = worst.max(subset_first_moment(&a, &spec, Normalization::BlockNormalized)?.max_abs_diff(&exact));
    }
    Ok(verdict(worst, 1e-10, "entry deviation"))
}

fn first_moment_monte_carlo(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let spec = CircuitSpec::new(2, 2, 1)?.with_entangler(EntanglerKind::CzBrick);
    let a = DenseOperator::random_hermitian(2, rng)?;
    let est = mc_first_moment(&a, &spec, 20_000, rng.gen())?;
    let exact = exact_twirl_first_moment(&a, &spec)?;
    let dev = est.max_deviation(&exact, 1e-12);
    Ok((dev <= 5.0, format!("max deviation {dev:.2} standard errors (≤5)")))
}

fn single_layer_constants(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    for s in 1..=FG_MAX_WIDTH {
        if fg_lookup(s)?.f != f_closed_form(s) {
            return Ok((false, format!("tabulated F({s}) differs from its closed form")));
        }
    }
    let v = predict_single_layer_variance(9, 3, 3, PrefactorMode::BlockWidth)?;
    let expected = 25.0 / 576.0 * (17.0f64 / 126.0).powi(2);
    Ok(verdict((v - expected).abs(), 1e-15, "prediction deviation"))
}

fn worker_determinism(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let spec = CircuitSpec::new(6, 3, 2)?;
    let o = PauliString::z_prefix(6, 2)?;
    let seed = rng.gen();
    let a = run_ensemble(&spec, &o, KMode::RandomAll, 2_000, seed, 1)?;
    let b = run_ensemble(&spec, &o, KMode::RandomAll, 2_000, seed, 2)?;
    let same = serde_json::to_string(&a)? == serde_json::to_string(&b)?;
    Ok((same, format!("workers 1 and 2 {}", if same { "agree bitwise" } else { "differ" })))
}

/// X/Y/Z rotations on independent qubits measured with `Z^⊗n`:
/// `Var = (1/3)(2/3)^{n−1}`.
fn product_circuit_variance(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let n = 4;
    let spec = CircuitSpec::new(n, 1, 1)?.with_entangler(EntanglerKind::None).with_policy(GeneratorPolicy::XyzOnly)?;
    let est = run_ensemble(&spec, &PauliString::z_prefix(n, n)?, KMode::RandomEffective, 20_000, rng.gen(), 1)?;
    let exact = (1.0 / 3.0) * (2.0f64 / 3.0).powi(n as i32 - 1);
    let z = (est.variance - exact).abs() / est.std_error;
    Ok((z <= 4.0, format!("variance {:.5} vs {exact:.5} ({z:.2} standard errors, ≤4)", est.variance)))
}

fn second_moment_single_gate(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let spec = CircuitSpec::new(n, 1, n)?.with_entangler(EntanglerKind::None).with_policy(GeneratorPolicy::Full)?;
        let ops: Vec<DenseOperator> = (0..3).map(|_| DenseOperator::random_hermitian(n, rng)).collect::<std::result::Result<_, _>>()?;
        let est = mc_second_moment(&ops[0], &ops[1], &ops[2], &spec, 200_000, rng.gen())?;
        let exact = single_gate_second_moment(&ops[0], &ops[1], &ops[2], BlockSupport::new(0, n), GeneratorPolicy::Full)?;
        worst = worst.max(est.max_deviation(&exact, 1e-12));
    }
    Ok((worst <= 5.0, format!("max deviation {worst:.2} standard errors (≤5)")))
}

/// One operator triple compared against the sampled second moment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCase {
    pub n: usize,
    pub l: usize,
    pub operators: String,
    /// Largest entrywise `|sampled − leading term|`.
    pub max_abs_diff: f64,
    /// Largest entrywise ratio of the difference to `max(5·stderr, 10·8^{−n})`.
    pub worst_ratio: f64,
    pub passed: bool,
}

fn pauli_triples(n: usize) -> [(String, String, String); 4] {
    let all = |c: char| c.to_string().repeat(n);
    let first_z = format!("Z{}", "I".repeat(n - 1));
    [
        (all('I'), all('I'), all('I')),
        (all('Z'), all('Z'), all('Z')),
        (all('X'), all('I'), all('X')),
        (first_z.clone(), all('X'), first_z),
    ]
}

/// Leading subset term of the second moment against a sampled oracle on a
/// product circuit with the full generator set, at `n ∈ {1, 2}` and
/// `l ∈ {1, 2}`, for Pauli triples and two random Hermitian triples each.
pub fn second_moment_expansion_cases(samples: usize, seed: u64) -> Result<Vec<ExpansionCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=2usize {
        for l in 1..=2usize {
            let spec = CircuitSpec::new(n, l, 1)?.with_entangler(EntanglerKind::None).with_policy(GeneratorPolicy::Full)?;
            let mut triples: Vec<(String, [DenseOperator; 3])> = Vec::new();
            for (a, b, c) in pauli_triples(n) {
                let ops = [pauli_operator(&a)?, pauli_operator(&b)?, pauli_operator(&c)?];
                triples.push((format!("{a},{b},{c}"), ops));
            }
            for k in 0..2 {
                let mut h = || DenseOperator::random_hermitian(n, &mut rng);
                triples.push((format!("random#{k}"), [h()?, h()?, h()?]));
            }
            let floor = 10.0 * 8f64.powi(-(n as i32));
            for (i, (operators, [a, b, c])) in triples.into_iter().enumerate() {
                let case_seed = seed.wrapping_add((n * 100 + l * 10 + i) as u64);
                let est = mc_second_moment(&a, &b, &c, &spec, samples, case_seed)?;
                let lead = subset_second_moment(&a, &b, &c, &spec, Normalization::AsWritten)?;
                let (mut max_abs_diff, mut worst_ratio): (f64, f64) = (0.0, 0.0);
                for r in 0..lead.dim() {
                    for col in 0..lead.dim() {
                        let d = (est.mean.get(r, col) - lead.get(r, col)).norm();
                        max_abs_diff = max_abs_diff.max(d);
                        worst_ratio = worst_ratio.max(d / (5.0 * est.std_error[(r, col)]).max(floor));
                    }
                }
                out.push(ExpansionCase { n, l, operators, max_abs_diff, worst_ratio, passed: worst_ratio <= 1.0 });
            }
        }
    }
    Ok(out)
}

fn second_moment_expansion(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cases = second_moment_expansion_cases(200_000, rng.gen())?;
    let failed: Vec<String> = cases
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("n={} l={} [{}] diff {:.3}", c.n, c.l, c.operators, c.max_abs_diff))
        .collect();
    Ok((
        failed.is_empty(),
        if failed.is_empty() { format!("{} cases agree", cases.len()) } else { format!("disagree: {}", failed.join("; ")) },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_level_passes() {
        let results = run_checks(Level::Fast, 1);
        assert_eq!(results.len(), FAST.len());
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
