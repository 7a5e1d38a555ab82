//! Small dense operators for exact oracles (at most 8 qubits).

use std::ops::{Add, Mul, Sub};

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

pub const MAX_DENSE_QUBITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    entries: Array2<Complex64>,
}

pub(crate) fn check_dense(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::DimensionOverflow { n, max });
    }
    Ok(())
}

impl DenseOperator {
    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_dense(n_qubits, MAX_DENSE_QUBITS)?;
        let d = 1usize << n_qubits;
        Ok(Self { n_qubits, entries: Array2::zeros((d, d)) })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_dense(n_qubits, MAX_DENSE_QUBITS)?;
        let d = 1usize << n_qubits;
        Ok(Self { n_qubits, entries: Array2::eye(d) })
    }

    pub fn from_array(entries: Array2<Complex64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || !r.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(r));
        }
        let n_qubits = r.trailing_zeros() as usize;
        check_dense(n_qubits, MAX_DENSE_QUBITS)?;
        Ok(Self { n_qubits, entries })
    }

    /// Random Hermitian operator with Gaussian entries, scaled to unit
    /// spectral-norm bound (Frobenius norm 1).
    pub fn random_hermitian<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        let mut op = Self::zeros(n_qubits)?;
        let d = op.dim();
        for r in 0..d {
            for c in r..d {
                let re = gaussian(rng);
                let im = if r == c { 0.0 } else { gaussian(rng) };
                let v = Complex64::new(re, im);
                op.entries[(r, c)] = v;
                op.entries[(c, r)] = v.conj();
            }
        }
        let norm = op.frobenius_norm();
        Ok(op.scale(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[(r, c)] = v;
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.n_qubits, other.n_qubits, "dimension mismatch");
        DenseOperator { n_qubits: self.n_qubits, entries: self.entries.dot(&other.entries) }
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator {
            n_qubits: self.n_qubits,
            entries: self.entries.t().mapv(|v| v.conj()),
        }
    }

    pub fn scale(&self, k: Complex64) -> DenseOperator {
        DenseOperator { n_qubits: self.n_qubits, entries: self.entries.mapv(|v| v * k) }
    }

    pub fn scale_real(&self, k: f64) -> DenseOperator {
        self.scale(Complex64::new(k, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        assert_eq!(self.n_qubits, other.n_qubits, "dimension mismatch");
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// `P · self · P` for a Hermitian Pauli string, in O(dim²).
    pub fn conjugate_by_pauli(&self, p: &PauliString) -> Result<DenseOperator> {
        if p.n_sites() != self.n_qubits {
            return Err(Error::SizeMismatch { expected: self.n_qubits, got: p.n_sites() });
        }
        let x = p.x_mask() as usize;
        let d = self.dim();
        let phases: Vec<Complex64> = (0..d as u64).map(|j| p.action_phase(j)).collect();
        // P|j⟩ = ω(j)|j⊕x⟩, so P_{r, r⊕x} = ω(r⊕x) and
        // (P A P)_{r,c} = ω(r⊕x) · A_{r⊕x, c⊕x} · ω(c).
        let mut out = Array2::zeros((d, d));
        for r in 0..d {
            let rr = r ^ x;
            let left = phases[rr];
            for c in 0..d {
                out[(r, c)] = left * self.entries[(rr, c ^ x)] * phases[c];
            }
        }
        Ok(DenseOperator { n_qubits: self.n_qubits, entries: out })
    }

    /// `Tr_mask(self) ⊗ I_mask`, embedded back at the traced qubits'
    /// positions. `mask` uses the index-bit convention.
    pub fn partial_trace_embed(&self, mask: u64) -> DenseOperator {
        let d = self.dim();
        let mask = mask as usize;
        let rest = !mask & (d - 1);
        let mut out: Array2<Complex64> = Array2::zeros((d, d));
        // Enumerate the submasks of `mask` to sum over traced configurations.
        let subs = submasks(mask);
        for r in 0..d {
            let r_rest = r & rest;
            for c in 0..d {
                if (r ^ c) & mask != 0 {
                    continue;
                }
                let c_rest = c & rest;
                let mut acc = Complex64::new(0.0, 0.0);
                for &b in &subs {
                    acc += self.entries[(r_rest | b, c_rest | b)];
                }
                out[(r, c)] = acc;
            }
        }
        DenseOperator { n_qubits: self.n_qubits, entries: out }
    }
}

pub(crate) fn submasks(mask: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(1 << mask.count_ones());
    let mut sub = mask;
    loop {
        out.push(sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    out.reverse();
    out
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; only used to draw test operators.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.n_qubits, rhs.n_qubits, "dimension mismatch");
        DenseOperator { n_qubits: self.n_qubits, entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.n_qubits, rhs.n_qubits, "dimension mismatch");
        DenseOperator { n_qubits: self.n_qubits, entries: &self.entries - &rhs.entries }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conjugation_matches_dense_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in ["XYZ", "ZIY", "YYI", "IXI"] {
            let p: PauliString = s.parse().unwrap();
            let a = DenseOperator::random_hermitian(3, &mut rng).unwrap();
            let pd = p.to_dense().unwrap();
            let direct = &(&pd * &a) * &pd;
            let fast = a.conjugate_by_pauli(&p).unwrap();
            assert!(direct.max_abs_diff(&fast) < 1e-14, "{s}");
        }
    }

    #[test]
    fn partial_trace_of_product() {
        // Tr_0(Z ⊗ X) ⊗ I_0 = Tr(Z)·(I ⊗ X) = 0; Tr_0(I ⊗ X) ⊗ I_0 = 2·I⊗X.
        let ix: PauliString = "IX".parse().unwrap();
        let zx: PauliString = "ZX".parse().unwrap();
        let q0 = crate::pauli::qubit_bit(2, 0);
        let t = ix.to_dense().unwrap().partial_trace_embed(q0);
        assert!(t.max_abs_diff(&ix.to_dense().unwrap().scale_real(2.0)) < 1e-15);
        let t = zx.to_dense().unwrap().partial_trace_embed(q0);
        assert!(t.frobenius_norm() < 1e-15);
    }

    #[test]
    fn rejects_oversized() {
        assert!(matches!(DenseOperator::zeros(9), Err(Error::DimensionOverflow { .. })));
        let bad = Array2::<Complex64>::zeros((3, 3));
        assert!(matches!(DenseOperator::from_array(bad), Err(Error::NotPowerOfTwo(3))));
    }

    #[test]
    fn random_hermitian_is_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DenseOperator::random_hermitian(4, &mut rng).unwrap();
        assert!(a.is_hermitian(1e-12));
    }
}
