use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitSpec, GeneratorPolicy};
use crate::error::{Error, Result};
use crate::pauli::{check_dense, BlockSupport, DenseOperator, PauliString};
use crate::simulator::{EntanglerPattern, StateVector};

/// Largest register for the single-gate and whole-circuit first-moment maps.
pub const MAX_FIRST_MOMENT_QUBITS: usize = 6;
/// Largest register for the six-fold products of the second-moment maps.
pub const MAX_SECOND_MOMENT_QUBITS: usize = 5;

/// Overall prefactor of the subset expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Per-qubit factors: `(1/2)^n`, and `8^{−n}` per extra layer.
    #[default]
    AsWritten,
    /// Per-block factors: `(1/2)^{n/s}`, and `8^{−n/s}` per extra layer.
    BlockNormalized,
}

impl Normalization {
    pub const ALL: [Normalization; 2] = [Normalization::AsWritten, Normalization::BlockNormalized];

    pub fn name(self) -> &'static str {
        match self {
            Normalization::AsWritten => "as_written",
            Normalization::BlockNormalized => "block_normalized",
        }
    }
}

fn same_size(ops: &[&DenseOperator]) -> Result<usize> {
    let n = ops[0].n_qubits();
    for op in ops {
        if op.n_qubits() != n {
            return Err(Error::SizeMismatch { expected: n, got: op.n_qubits() });
        }
    }
    Ok(n)
}

/// `A/2 + (1/(2|P|))·Σ_P P·A·P` over the policy's generator set.
pub fn single_gate_first_moment(
    a: &DenseOperator,
    block: BlockSupport,
    policy: GeneratorPolicy,
) -> Result<DenseOperator> {
    let n = a.n_qubits();
    check_dense(n, MAX_FIRST_MOMENT_QUBITS)?;
    let gens = policy.generators(n, block)?;
    let mut acc = a.scale_real(0.5);
    let w = 0.5 / gens.len() as f64;
    for p in &gens {
        acc = &acc + &a.conjugate_by_pauli(p)?.scale_real(w);
    }
    Ok(acc)
}

/// `E[U†AU · B · U†CU]` for one random rotation on `block`, evaluated from
/// the fourth trigonometric moments.
pub fn single_gate_second_moment(
    a: &DenseOperator,
    b: &DenseOperator,
    c: &DenseOperator,
    block: BlockSupport,
    policy: GeneratorPolicy,
) -> Result<DenseOperator> {
    let n = same_size(&[a, b, c])?;
    check_dense(n, MAX_SECOND_MOMENT_QUBITS)?;
    let gens = policy.generators(n, block)?;
    let size = gens.len() as f64;
    let ab = a * b;
    let bc = b * c;
    let abc = &ab * c;
    let mut quartic = DenseOperator::zeros(n)?;
    let mut mixed = DenseOperator::zeros(n)?;
    for p in &gens {
        let pd = p.to_dense()?;
        let pap = a.conjugate_by_pauli(p)?;
        let pbp = b.conjugate_by_pauli(p)?;
        let pcp = c.conjugate_by_pauli(p)?;
        quartic = &quartic + &(&(&pap * b) * &pcp);
        let terms = [
            (&(&pap * b) * c, 1.0),
            (&ab * &pcp, 1.0),
            (&(a * &pbp) * c, 1.0),
            (abc.conjugate_by_pauli(p)?, 1.0),
            (&(&(&pd * &ab) * &pd) * c, -1.0),
            (&(a * &pd) * &(&bc * &pd), -1.0),
        ];
        for (t, sign) in terms {
            mixed = &mixed + &t.scale_real(sign);
        }
    }
    let out = &abc.scale_real(3.0 / 8.0) + &quartic.scale_real(3.0 / (8.0 * size));
    Ok(&out + &mixed.scale_real(1.0 / (8.0 * size)))
}

/// Dense matrix of one entangler layer.
pub fn entangler_unitary(pattern: &EntanglerPattern) -> Result<DenseOperator> {
    let n = pattern.n_qubits();
    check_dense(n, MAX_FIRST_MOMENT_QUBITS)?;
    let mut w = DenseOperator::zeros(n)?;
    for col in 0..1usize << n {
        let mut v = StateVector::basis(n, col)?;
        v.apply_entangler(pattern)?;
        for (row, amp) in v.amplitudes().iter().enumerate() {
            w.set(row, col, *amp);
        }
    }
    Ok(w)
}

/// `E[U†AU]` over every generator and angle draw of `spec`, composed layer
/// by layer in the Heisenberg picture. Inactive slots are skipped.
pub fn exact_twirl_first_moment(a: &DenseOperator, spec: &CircuitSpec) -> Result<DenseOperator> {
    let n = a.n_qubits();
    check_dense(n, MAX_FIRST_MOMENT_QUBITS)?;
    spec.validate()?;
    if spec.n != n {
        return Err(Error::SizeMismatch { expected: spec.n, got: n });
    }
    let pattern = spec.entangler_pattern();
    let w = entangler_unitary(&pattern)?;
    let w_dag = w.adjoint();
    let bpl = spec.blocks_per_layer();
    let mut op = a.clone();
    for layer in (0..spec.layers).rev() {
        if !pattern.is_empty() {
            op = &(&w_dag * &op) * &w;
        }
        for slot in layer * bpl..(layer + 1) * bpl {
            if spec.is_active(slot) {
                op = single_gate_first_moment(&op, spec.slot_block(slot), spec.generator_policy)?;
            }
        }
    }
    Ok(op)
}

/// One term of a subset expansion over blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetTerm {
    /// Indices of the traced blocks.
    pub sigma: Vec<usize>,
    pub weight: f64,
    /// `Tr_σ(·) ⊗ I_σ` of the expanded operator.
    pub operator_part: DenseOperator,
}

fn sigma_mask(spec: &CircuitSpec, sigma_bits: usize) -> (Vec<usize>, u64) {
    let blocks: Vec<usize> = (0..spec.blocks_per_layer()).filter(|b| sigma_bits >> b & 1 == 1).collect();
    let mask = blocks
        .iter()
        .map(|&b| BlockSupport::new(b * spec.block_width, spec.block_width).mask(spec.n))
        .fold(0, |m, x| m | x);
    (blocks, mask)
}

/// Terms of `c·Σ_σ (g·3^{|σ|})^{l−1}·2^{−s|σ|}·Tr_σ(A) ⊗ I` with
/// `(c, g) = ((1/2)^n, 2^{−n/s})` as written or `((1/2)^{n/s}, 2^{−n/s})`
/// block-normalized.
pub fn first_moment_subset_terms(
    a: &DenseOperator,
    spec: &CircuitSpec,
    normalization: Normalization,
) -> Result<Vec<SubsetTerm>> {
    let n = a.n_qubits();
    check_dense(n, MAX_FIRST_MOMENT_QUBITS)?;
    if spec.n != n {
        return Err(Error::SizeMismatch { expected: spec.n, got: n });
    }
    let (s, nb, l) = (spec.block_width as i32, spec.blocks_per_layer() as i32, spec.layers as i32);
    let prefactor = match normalization {
        Normalization::AsWritten => 0.5f64.powi(n as i32),
        Normalization::BlockNormalized => 0.5f64.powi(nb),
    };
    let layer_base = 2f64.powi(-nb);
    (0..1usize << nb)
        .map(|bits| {
            let (sigma, mask) = sigma_mask(spec, bits);
            let k = sigma.len() as i32;
            let weight = prefactor * (layer_base * 3f64.powi(k)).powi(l - 1) * 2f64.powi(-s * k);
            Ok(SubsetTerm { sigma, weight, operator_part: a.partial_trace_embed(mask) })
        })
        .collect()
}

fn weighted_sum(n: usize, terms: &[SubsetTerm]) -> Result<DenseOperator> {
    let mut acc = DenseOperator::zeros(n)?;
    for t in terms {
        acc = &acc + &t.operator_part.scale_real(t.weight);
    }
    Ok(acc)
}

/// Sum of [`first_moment_subset_terms`].
pub fn subset_first_moment(
    a: &DenseOperator,
    spec: &CircuitSpec,
    normalization: Normalization,
) -> Result<DenseOperator> {
    weighted_sum(a.n_qubits(), &first_moment_subset_terms(a, spec, normalization)?)
}

/// Terms of `(3/8)^{n/s}·Σ_σ (g·3^{|σ|+n/s})^{l−1}·2^{−s|σ|}·(Tr_σ(AC) ⊗ I)·B`
/// with `g = 8^{−n}` as written or `g = 8^{−n/s}` block-normalized. The
/// remainder of order `8^{−n}` is not included.
pub fn second_moment_subset_terms(
    a: &DenseOperator,
    b: &DenseOperator,
    c: &DenseOperator,
    spec: &CircuitSpec,
    normalization: Normalization,
) -> Result<Vec<SubsetTerm>> {
    let n = same_size(&[a, b, c])?;
    check_dense(n, MAX_SECOND_MOMENT_QUBITS)?;
    if spec.n != n {
        return Err(Error::SizeMismatch { expected: spec.n, got: n });
    }
    let (s, nb, l) = (spec.block_width as i32, spec.blocks_per_layer() as i32, spec.layers as i32);
    let layer_base = match normalization {
        Normalization::AsWritten => 8f64.powi(-(n as i32)),
        Normalization::BlockNormalized => 8f64.powi(-nb),
    };
    let prefactor = 0.375f64.powi(nb);
    let ac = a * c;
    (0..1usize << nb)
        .map(|bits| {
            let (sigma, mask) = sigma_mask(spec, bits);
            let k = sigma.len() as i32;
            let weight = prefactor * (layer_base * 3f64.powi(k + nb)).powi(l - 1) * 2f64.powi(-s * k);
            Ok(SubsetTerm { sigma, weight, operator_part: &ac.partial_trace_embed(mask) * b })
        })
        .collect()
}

/// Sum of [`second_moment_subset_terms`].
pub fn subset_second_moment(
    a: &DenseOperator,
    b: &DenseOperator,
    c: &DenseOperator,
    spec: &CircuitSpec,
    normalization: Normalization,
) -> Result<DenseOperator> {
    weighted_sum(a.n_qubits(), &second_moment_subset_terms(a, b, c, spec, normalization)?)
}

/// Dense form of a Pauli string, for callers building operator arguments.
pub fn pauli_operator(s: &str) -> Result<DenseOperator> {
    s.parse::<PauliString>()?.to_dense()
}
