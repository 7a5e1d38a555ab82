//! Explicit Pauli-group sums over a block and their partial-trace closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::dense::check_dense;
use crate::pauli::{block_letters, qubit_bit, DenseOperator, PauliString, MAX_DENSE_QUBITS};

/// Largest register for the four-factor sum in [`twirl_sum_second`].
pub const MAX_SECOND_TWIRL_QUBITS: usize = 6;

/// Contiguous qubit range `[offset, offset + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSupport {
    pub offset: usize,
    pub width: usize,
}

impl BlockSupport {
    pub fn new(offset: usize, width: usize) -> Self {
        Self { offset, width }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.width == 0 || self.offset + self.width > n {
            return Err(Error::BlockOutOfRange { offset: self.offset, width: self.width, n });
        }
        Ok(())
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.width
    }

    /// Index-convention mask of the block inside an `n`-qubit register.
    pub fn mask(&self, n: usize) -> u64 {
        self.qubits().map(|q| qubit_bit(n, q)).fold(0, |m, b| m | b)
    }

    /// All `4^width` Pauli strings supported on this block, identity first.
    pub fn paulis(&self, n: usize) -> impl Iterator<Item = PauliString> + '_ {
        (0..1usize << (2 * self.width)).map(move |i| {
            PauliString::on_block(n, self.offset, &block_letters(self.width, i))
                .expect("validated block")
        })
    }
}

/// `Σ_P P·a·P` over every Pauli string on `block`, by enumeration.
pub fn twirl_sum(a: &DenseOperator, block: BlockSupport) -> Result<DenseOperator> {
    let n = a.n_qubits();
    check_dense(n, MAX_DENSE_QUBITS)?;
    block.validate(n)?;
    let mut acc = DenseOperator::zeros(n)?;
    for p in block.paulis(n) {
        acc = &acc + &a.conjugate_by_pauli(&p)?;
    }
    Ok(acc)
}

/// `2^s · Tr_s(a) ⊗ I_s`, the closed form of [`twirl_sum`].
pub fn twirl_closed_form(a: &DenseOperator, block: BlockSupport) -> Result<DenseOperator> {
    let n = a.n_qubits();
    block.validate(n)?;
    Ok(a.partial_trace_embed(block.mask(n)).scale_real((1u64 << block.width) as f64))
}

/// Returns `(main, ε)` with `main = 2^s·(Tr_s(a·c) ⊗ I)·b` and
/// `ε = Σ_P P a P b P c P − main`.
pub fn twirl_sum_second(
    a: &DenseOperator,
    b: &DenseOperator,
    c: &DenseOperator,
    block: BlockSupport,
) -> Result<(DenseOperator, DenseOperator)> {
    let n = a.n_qubits();
    check_dense(n, MAX_SECOND_TWIRL_QUBITS)?;
    for op in [b, c] {
        if op.n_qubits() != n {
            return Err(Error::SizeMismatch { expected: n, got: op.n_qubits() });
        }
    }
    block.validate(n)?;
    let mut sum = DenseOperator::zeros(n)?;
    for p in block.paulis(n) {
        let pap = a.conjugate_by_pauli(&p)?;
        let pcp = c.conjugate_by_pauli(&p)?;
        sum = &sum + &(&(&pap * b) * &pcp);
    }
    let ac = a * c;
    let main = &twirl_closed_form(&ac, block)? * b;
    let eps = &sum - &main;
    Ok((main, eps))
}
