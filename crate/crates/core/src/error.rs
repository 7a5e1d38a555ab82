use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} qubits, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid Pauli string {0:?}")]
    ParsePauli(String),

    #[error("{n} qubits exceeds the dense-operator limit of {max}")]
    DimensionOverflow { n: usize, max: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("block at offset {offset} with width {width} does not fit in {n} qubits")]
    BlockOutOfRange { offset: usize, width: usize, n: usize },

    #[error("qubit count {0} is outside the supported range 1..=24")]
    QubitCount(usize),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitIndex { index: usize, n: usize },

    #[error("observable must be Hermitian (phase exponent 0)")]
    NonHermitian,

    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),

    #[error("slot {0} is not an active parameter")]
    InactiveSlot(usize),

    #[error("generator at slot {0} is the identity; its gradient is undefined for the shift rule")]
    IdentityGenerator(usize),

    #[error("finite-difference step {0} outside [1e-6, 1e-2]")]
    StepOutOfRange(f64),

    #[error("no F/G table entry for block width {0} (table covers 1..=4)")]
    UnsupportedWidth(usize),

    #[error("circuit has no active parameters")]
    NoActiveSlots,

    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
