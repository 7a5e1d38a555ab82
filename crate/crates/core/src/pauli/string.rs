//! Pauli strings in the symplectic (x-mask, z-mask, phase) representation.
//!
//! Qubit 0 is the most significant bit of an amplitude index. Every mask in
//! this crate follows that convention: qubit `q` of an `n`-qubit register
//! lives at bit `n - 1 - q`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::DenseOperator;
use crate::simulator::StateVector;

/// Maximum register size a `PauliString` can describe.
pub const MAX_PAULI_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// Index bit of qubit `q` in an `n`-qubit register.
#[inline]
pub fn qubit_bit(n: usize, q: usize) -> u64 {
    1u64 << (n - 1 - q)
}

/// `i^phase_exp * (letters[0] ⊗ letters[1] ⊗ ...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_sites: usize,
    x: u64,
    z: u64,
    phase_exp: u8,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        assert!(
            (1..=MAX_PAULI_QUBITS).contains(&n_sites),
            "PauliString supports 1..=64 sites"
        );
        Self { n_sites, x: 0, z: 0, phase_exp: 0 }
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        if letters.is_empty() || letters.len() > MAX_PAULI_QUBITS {
            return Err(Error::ParsePauli(format!("{} sites", letters.len())));
        }
        let n = letters.len();
        let mut p = Self::identity(n);
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        Ok(p)
    }

    /// Single non-identity letter on qubit `q`.
    pub fn single(n_sites: usize, q: usize, letter: Letter) -> Result<Self> {
        if q >= n_sites {
            return Err(Error::QubitIndex { index: q, n: n_sites });
        }
        let mut p = Self::identity(n_sites);
        p.set(q, letter);
        Ok(p)
    }

    /// `Z` on the first `m` qubits, identity elsewhere.
    pub fn z_prefix(n_sites: usize, m: usize) -> Result<Self> {
        if m > n_sites {
            return Err(Error::QubitIndex { index: m, n: n_sites });
        }
        let mut p = Self::identity(n_sites);
        for q in 0..m {
            p.set(q, Letter::Z);
        }
        Ok(p)
    }

    /// Build from raw index-convention masks.
    pub fn from_masks(n_sites: usize, x: u64, z: u64, phase_exp: u8) -> Self {
        let full = full_mask(n_sites);
        assert!(x & !full == 0 && z & !full == 0, "mask exceeds register");
        Self { n_sites, x, z, phase_exp: phase_exp & 3 }
    }

    fn set(&mut self, q: usize, letter: Letter) {
        let bit = qubit_bit(self.n_sites, q);
        let (x, z) = letter.bits();
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase_exp
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase_exp == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn letter(&self, q: usize) -> Letter {
        let bit = qubit_bit(self.n_sites, q);
        Letter::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_sites).map(|q| self.letter(q)).collect()
    }

    /// Index mask of the non-identity sites.
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_sites)
            .filter(|&q| self.support_mask() & qubit_bit(self.n_sites, q) != 0)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    fn check_size(&self, other: usize) -> Result<()> {
        if self.n_sites != other {
            return Err(Error::SizeMismatch { expected: self.n_sites, got: other });
        }
        Ok(())
    }

    /// Group product `self · other`, tracking the accumulated power of `i`.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        self.check_size(other.n_sites)?;
        // Write each factor as i^a X^x Z^z with a = phase + #Y, multiply,
        // then fold the Y-count of the result back out.
        let a = self.phase_exp as u32 + self.y_count();
        let b = other.phase_exp as u32 + other.y_count();
        let swap = 2 * (self.z & other.x).count_ones();
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let y = (x & z).count_ones();
        let phase = (a + b + swap + 4 * 64 - y) % 4;
        Ok(PauliString { n_sites: self.n_sites, x, z, phase_exp: phase as u8 })
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_size(other.n_sites)?;
        let anti = (self.x & other.z) ^ (self.z & other.x);
        Ok(anti.count_ones() % 2 == 0)
    }

    /// Coefficient `ω(j)` with `P|j⟩ = ω(j)|j ⊕ x⟩`.
    #[inline]
    pub(crate) fn action_phase(&self, j: u64) -> Complex64 {
        let mut k = (self.phase_exp as u32 + self.y_count()) % 4;
        if (j & self.z).count_ones() % 2 == 1 {
            k = (k + 2) % 4;
        }
        i_pow(k)
    }

    /// `P|v⟩`; a permutation of amplitudes with ±1, ±i factors.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.check_size(v.n_qubits())?;
        let src = v.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        for (j, &amp) in src.iter().enumerate() {
            let j = j as u64;
            out[(j ^ self.x) as usize] = self.action_phase(j) * amp;
        }
        Ok(StateVector::from_amplitudes_unchecked(v.n_qubits(), out))
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let mut op = DenseOperator::zeros(self.n_sites)?;
        for j in 0..op.dim() as u64 {
            op.set((j ^ self.x) as usize, j as usize, self.action_phase(j));
        }
        Ok(op)
    }

    /// Embed `letters` onto consecutive qubits starting at `offset`.
    pub fn on_block(n_sites: usize, offset: usize, letters: &[Letter]) -> Result<Self> {
        if offset + letters.len() > n_sites || letters.is_empty() {
            return Err(Error::BlockOutOfRange { offset, width: letters.len(), n: n_sites });
        }
        let mut p = Self::identity(n_sites);
        for (i, &l) in letters.iter().enumerate() {
            p.set(offset + i, l);
        }
        Ok(p)
    }

    /// Restrict to the listed qubits, in order, producing a smaller string.
    pub(crate) fn restrict(&self, qubits: &[usize]) -> PauliString {
        let letters: Vec<Letter> = qubits.iter().map(|&q| self.letter(q)).collect();
        let mut p = PauliString::from_letters(&letters).expect("non-empty restriction");
        p.phase_exp = self.phase_exp;
        p
    }
}

#[inline]
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Letters for the `index`-th element of `{I,X,Y,Z}^⊗width`, base-4 digits
/// with the first qubit most significant.
pub fn block_letters(width: usize, mut index: usize) -> Vec<Letter> {
    let mut out = vec![Letter::I; width];
    for slot in out.iter_mut().rev() {
        *slot = Letter::ALL[index % 4];
        index /= 4;
    }
    out
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase_exp {
            1 => write!(f, "i")?,
            2 => write!(f, "-")?,
            3 => write!(f, "-i")?,
            _ => {}
        }
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses plain text such as `"ZZIX"`, qubit 0 leftmost. No phase prefix.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Y' => Ok(Letter::Y),
                'Z' => Ok(Letter::Z),
                _ => Err(Error::ParsePauli(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::from_letters(&letters).map_err(|_| Error::ParsePauli(s.to_string()))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn x_times_y_is_i_z() {
        let r = p("X").mul(&p("Y")).unwrap();
        assert_eq!(r.letters(), vec![Letter::Z]);
        assert_eq!(r.phase_exp(), 1);
    }

    #[test]
    fn square_is_identity() {
        for s in ["X", "Y", "Z", "XYZI", "YYYY", "ZXZY"] {
            let r = p(s).mul(&p(s)).unwrap();
            assert!(r.is_identity(), "{s}");
            assert_eq!(r.phase_exp(), 0, "{s}");
        }
    }

    #[test]
    fn sitewise_product() {
        let r = p("XZ").mul(&p("YZ")).unwrap();
        assert_eq!(r.to_string(), "iZI");
    }

    #[test]
    fn size_mismatch_is_an_error() {
        assert!(matches!(p("X").mul(&p("XX")), Err(Error::SizeMismatch { .. })));
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn commutation() {
        assert!(!p("XI").commutes(&p("ZI")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        for s in ["XYZ", "ZZI", "YIX"] {
            assert!(p(s).commutes(&PauliString::identity(3)).unwrap());
        }
    }

    #[test]
    fn apply_examples() {
        let zero = StateVector::basis(1, 0).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let xv = p("X").apply(&zero).unwrap();
        assert_eq!(xv.amplitudes()[1], Complex64::new(1.0, 0.0));
        let zv = p("Z").apply(&one).unwrap();
        assert_eq!(zv.amplitudes()[1], Complex64::new(-1.0, 0.0));
        let yv = p("Y").apply(&zero).unwrap();
        assert_eq!(yv.amplitudes()[1], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // X on qubit 0 of |00⟩ gives |10⟩ = index 2.
        let v = StateVector::basis(2, 0).unwrap();
        let out = p("XI").apply(&v).unwrap();
        assert_eq!(out.amplitudes()[2], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("XQZ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn block_letters_enumerates_all() {
        let all: std::collections::HashSet<_> = (0..16).map(|i| block_letters(2, i)).collect();
        assert_eq!(all.len(), 16);
        assert_eq!(block_letters(2, 0), vec![Letter::I, Letter::I]);
        assert_eq!(block_letters(2, 7), vec![Letter::X, Letter::Z]);
    }

    #[test]
    fn serde_as_text() {
        let s = serde_json::to_string(&p("ZZIX")).unwrap();
        assert_eq!(s, "\"ZZIX\"");
        let back: PauliString = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p("ZZIX"));
    }
}
