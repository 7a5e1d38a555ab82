//! Statevector evolution under Pauli rotations and brick entanglers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{i_pow, qubit_bit, PauliString};

pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Zeros,
    Plus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

pub fn init_state(n: usize, kind: InitKind) -> Result<StateVector> {
    check_qubits(n)?;
    let dim = 1usize << n;
    let amps = match kind {
        InitKind::Zeros => {
            let mut a = vec![Complex64::new(0.0, 0.0); dim];
            a[0] = Complex64::new(1.0, 0.0);
            a
        }
        InitKind::Plus => vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim],
    };
    Ok(StateVector { n_qubits: n, amps })
}

impl StateVector {
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let n = dim.trailing_zeros() as usize;
        check_qubits(n)?;
        Ok(Self { n_qubits: n, amps })
    }

    pub(crate) fn from_amplitudes_unchecked(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn check(&self, p: &PauliString) -> Result<()> {
        if p.n_sites() != self.n_qubits {
            return Err(Error::SizeMismatch { expected: self.n_qubits, got: p.n_sites() });
        }
        Ok(())
    }

    /// In-place `e^{-iθ/2·P}`: `v ← cos(θ/2)·v − i·sin(θ/2)·P v`.
    pub fn rotate(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check(p)?;
        let (s, c) = (theta / 2.0).sin_cos();
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        // P|j⟩ = i^k0 (−1)^{|j∧z|} |j⊕x⟩; fold −i·sin(θ/2) into the base factor.
        let k0 = (p.phase_exp() as u32 + (x & z).count_ones()) % 4;
        let base = Complex64::new(0.0, -s) * i_pow(k0);
        let amps = &mut self.amps;
        if x == 0 {
            let plus = Complex64::new(c, 0.0) + base;
            let minus = Complex64::new(c, 0.0) - base;
            for (j, a) in amps.iter_mut().enumerate() {
                *a *= if (j & z).count_ones() & 1 == 0 { plus } else { minus };
            }
            return Ok(());
        }
        let pivot = 1usize << (usize::BITS - 1 - x.leading_zeros());
        let dim = amps.len();
        let mut hi = 0;
        while hi < dim {
            for j in hi..hi + pivot {
                let k = j ^ x;
                let bj = if (j & z).count_ones() & 1 == 0 { base } else { -base };
                let bk = if (k & z).count_ones() & 1 == 0 { base } else { -base };
                let (vj, vk) = (amps[j], amps[k]);
                amps[j] = vj * c + bk * vk;
                amps[k] = vk * c + bj * vj;
            }
            hi += 2 * pivot;
        }
        Ok(())
    }

    pub fn apply_entangler(&mut self, pattern: &EntanglerPattern) -> Result<()> {
        if pattern.n != self.n_qubits {
            return Err(Error::SizeMismatch { expected: self.n_qubits, got: pattern.n });
        }
        match pattern.kind {
            EntanglerKind::None => {}
            EntanglerKind::CzBrick => {
                // All CZ pairs are diagonal: flip sign when an odd number of
                // pairs have both qubits set.
                let masks: Vec<(usize, usize)> = pattern
                    .pairs()
                    .map(|(a, b)| {
                        (qubit_bit(self.n_qubits, a) as usize, qubit_bit(self.n_qubits, b) as usize)
                    })
                    .collect();
                if let Some(lower) = pattern.adjacent_lower_mask() {
                    for (j, a) in self.amps.iter_mut().enumerate() {
                        if (j & (j >> 1) & lower).count_ones() & 1 == 1 {
                            *a = -*a;
                        }
                    }
                } else {
                    for (j, a) in self.amps.iter_mut().enumerate() {
                        let odd = masks.iter().filter(|(ma, mb)| j & ma != 0 && j & mb != 0).count();
                        if odd & 1 == 1 {
                            *a = -*a;
                        }
                    }
                }
            }
            EntanglerKind::CxBrick => {
                for (ctrl, tgt) in pattern.pairs() {
                    let mc = qubit_bit(self.n_qubits, ctrl) as usize;
                    let mt = qubit_bit(self.n_qubits, tgt) as usize;
                    for j in 0..self.amps.len() {
                        if j & mc != 0 && j & mt == 0 {
                            self.amps.swap(j, j | mt);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Out-of-place rotation, see [`StateVector::rotate`].
pub fn apply_rotation(v: &StateVector, p: &PauliString, theta: f64) -> Result<StateVector> {
    let mut out = v.clone();
    out.rotate(p, theta)?;
    Ok(out)
}

pub fn apply_entangler(v: &StateVector, pattern: &EntanglerPattern) -> Result<StateVector> {
    let mut out = v.clone();
    out.apply_entangler(pattern)?;
    Ok(out)
}

/// `⟨a|O|b⟩` for a Pauli string `O`.
pub fn matrix_element(a: &StateVector, o: &PauliString, b: &StateVector) -> Result<Complex64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::SizeMismatch { expected: a.n_qubits, got: b.n_qubits });
    }
    a.check(o)?;
    let x = o.x_mask() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &bj) in b.amps.iter().enumerate() {
        acc += a.amps[j ^ x].conj() * o.action_phase(j as u64) * bj;
    }
    Ok(acc)
}

/// `⟨v|O|v⟩` for a Hermitian Pauli observable.
pub fn expectation(v: &StateVector, o: &PauliString) -> Result<f64> {
    if !o.is_hermitian() {
        return Err(Error::NonHermitian);
    }
    v.check(o)?;
    if o.x_mask() == 0 {
        let z = o.z_mask() as usize;
        let val = v
            .amps
            .iter()
            .enumerate()
            .map(|(j, a)| if (j & z).count_ones() & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        return Ok(val);
    }
    let val = matrix_element(v, o, v)?;
    debug_assert!(val.im.abs() <= 1e-10, "imaginary residue {}", val.im);
    Ok(val.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntanglerKind {
    None,
    #[default]
    CzBrick,
    CxBrick,
}

impl EntanglerKind {
    pub const ALL: [EntanglerKind; 3] =
        [EntanglerKind::None, EntanglerKind::CzBrick, EntanglerKind::CxBrick];

    pub fn name(self) -> &'static str {
        match self {
            EntanglerKind::None => "none",
            EntanglerKind::CzBrick => "cz_brick",
            EntanglerKind::CxBrick => "cx_brick",
        }
    }
}

/// Two sub-columns of nearest-neighbour pairs: `(0,1),(2,3),…` then `(1,2),(3,4),…`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntanglerPattern {
    kind: EntanglerKind,
    n: usize,
    columns: [Vec<(usize, usize)>; 2],
}

impl EntanglerPattern {
    pub fn new(kind: EntanglerKind, n: usize) -> Self {
        let columns = if kind == EntanglerKind::None {
            [Vec::new(), Vec::new()]
        } else {
            let even = (0..n.saturating_sub(1)).step_by(2).map(|q| (q, q + 1)).collect();
            let odd = (1..n.saturating_sub(1)).step_by(2).map(|q| (q, q + 1)).collect();
            [even, odd]
        };
        Self { kind, n, columns }
    }

    /// Arbitrary pairs, used for light-cone-restricted circuits.
    pub fn from_columns(kind: EntanglerKind, n: usize, columns: [Vec<(usize, usize)>; 2]) -> Result<Self> {
        for col in &columns {
            let mut seen = 0u64;
            for &(a, b) in col {
                if a >= n || b >= n || a == b {
                    return Err(Error::QubitIndex { index: a.max(b), n });
                }
                let m = (1u64 << a) | (1u64 << b);
                if seen & m != 0 {
                    return Err(Error::InvalidSpec(format!("qubit reused in column: ({a},{b})")));
                }
                seen |= m;
            }
        }
        Ok(Self { kind, n, columns })
    }

    pub fn kind(&self) -> EntanglerKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Vec<(usize, usize)>; 2] {
        &self.columns
    }

    /// Pairs in application order (even column, then odd column).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.columns.iter().flatten().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.kind == EntanglerKind::None || self.columns.iter().all(Vec::is_empty)
    }

    fn adjacent_lower_mask(&self) -> Option<usize> {
        let mut mask = 0usize;
        for (a, b) in self.pairs() {
            if b != a + 1 {
                return None;
            }
            mask |= qubit_bit(self.n, b) as usize;
        }
        Some(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn init_examples() {
        assert_eq!(init_state(1, InitKind::Zeros).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(close(init_state(2, InitKind::Plus).unwrap().amplitudes(), &[c(0.5, 0.0); 4], 1e-15));
        let e0 = init_state(3, InitKind::Zeros).unwrap();
        assert_eq!(e0.amplitudes().len(), 8);
        assert_eq!(e0.amplitudes()[0], c(1.0, 0.0));
        assert!(matches!(init_state(0, InitKind::Zeros), Err(Error::QubitCount(0))));
        assert!(matches!(init_state(25, InitKind::Zeros), Err(Error::QubitCount(25))));
    }

    #[test]
    fn rotation_examples() {
        let v = init_state(2, InitKind::Plus).unwrap();
        let same = apply_rotation(&v, &p("XY"), 0.0).unwrap();
        assert!(close(same.amplitudes(), v.amplitudes(), 1e-15));

        let full = apply_rotation(&v, &p("ZX"), 2.0 * PI).unwrap();
        assert!((full.inner(&v).norm() - 1.0).abs() < 1e-12);
        let neg: Vec<_> = v.amplitudes().iter().map(|a| -a).collect();
        assert!(close(full.amplitudes(), &neg, 1e-12));

        // RX(π/2)|0⟩ = (|0⟩ − i|1⟩)/√2 from the 2×2 exponential.
        let zero = init_state(1, InitKind::Zeros).unwrap();
        let rx = apply_rotation(&zero, &p("X"), PI / 2.0).unwrap();
        assert!(close(rx.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)], 1e-15));
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        // cos(θ/2)·I − i·sin(θ/2)·P as a dense matrix applied column-wise.
        let theta: f64 = 0.731;
        let v = StateVector::from_amplitudes(
            (0..8).map(|k| c((k as f64).sin(), (k as f64 * 0.3).cos())).collect(),
        )
        .unwrap();
        for s in ["XYZ", "ZIZ", "IYI", "YYX"] {
            let pd = p(s).to_dense().unwrap();
            let (sn, cs) = (theta / 2.0).sin_cos();
            let mut expected = vec![c(0.0, 0.0); 8];
            for (r, e) in expected.iter_mut().enumerate() {
                for (k, a) in v.amplitudes().iter().enumerate() {
                    let id = if r == k { cs } else { 0.0 };
                    *e += (c(id, 0.0) - c(0.0, sn) * pd.get(r, k)) * a;
                }
            }
            let got = apply_rotation(&v, &p(s), theta).unwrap();
            assert!(close(got.amplitudes(), &expected, 1e-14), "{s}");
        }
    }

    #[test]
    fn entangler_examples() {
        let one_one = StateVector::basis(2, 3).unwrap();
        let none = apply_entangler(&one_one, &EntanglerPattern::new(EntanglerKind::None, 2)).unwrap();
        assert_eq!(none, one_one);
        let cz = apply_entangler(&one_one, &EntanglerPattern::new(EntanglerKind::CzBrick, 2)).unwrap();
        assert_eq!(cz.amplitudes()[3], c(-1.0, 0.0));
        let one_zero = StateVector::basis(2, 2).unwrap();
        let cx = apply_entangler(&one_zero, &EntanglerPattern::new(EntanglerKind::CxBrick, 2)).unwrap();
        assert_eq!(cx.amplitudes()[3], c(1.0, 0.0));
    }

    #[test]
    fn brick_layout() {
        let pat = EntanglerPattern::new(EntanglerKind::CzBrick, 5);
        assert_eq!(pat.columns()[0], vec![(0, 1), (2, 3)]);
        assert_eq!(pat.columns()[1], vec![(1, 2), (3, 4)]);
        assert!(EntanglerPattern::from_columns(EntanglerKind::CzBrick, 3, [vec![(0, 1), (1, 2)], vec![]]).is_err());
        assert!(EntanglerPattern::from_columns(EntanglerKind::CzBrick, 3, [vec![(0, 3)], vec![]]).is_err());
    }

    #[test]
    fn cz_fast_path_matches_general() {
        let v = StateVector::from_amplitudes((0..32).map(|k| c(1.0 + k as f64, -(k as f64))).collect()).unwrap();
        let pat = EntanglerPattern::new(EntanglerKind::CzBrick, 5);
        let general = EntanglerPattern::from_columns(
            EntanglerKind::CzBrick,
            5,
            [vec![(0, 1), (2, 3)], vec![(1, 2), (3, 4)]],
        )
        .unwrap();
        let shuffled = EntanglerPattern::from_columns(
            EntanglerKind::CzBrick,
            5,
            [vec![(1, 0), (3, 2)], vec![(2, 1), (4, 3)]],
        )
        .unwrap();
        let a = apply_entangler(&v, &pat).unwrap();
        assert_eq!(a, apply_entangler(&v, &general).unwrap());
        assert_eq!(a, apply_entangler(&v, &shuffled).unwrap());
    }

    #[test]
    fn expectation_examples() {
        let zero = init_state(1, InitKind::Zeros).unwrap();
        assert_eq!(expectation(&zero, &p("Z")).unwrap(), 1.0);
        let plus = init_state(1, InitKind::Plus).unwrap();
        assert!(expectation(&plus, &p("Z")).unwrap().abs() < 1e-15);
        let zz = init_state(2, InitKind::Zeros).unwrap();
        assert_eq!(expectation(&zz, &p("ZZ")).unwrap(), 1.0);
        assert!((expectation(&plus, &p("X")).unwrap() - 1.0).abs() < 1e-15);
        let ip = PauliString::from_masks(1, 0, 1, 1);
        assert_eq!(expectation(&zero, &ip), Err(Error::NonHermitian));
    }
}
