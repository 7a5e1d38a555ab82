//! Statevector simulation, light-cone analysis, gradient engines and
//! Monte Carlo variance estimation for layered Pauli-rotation circuits.

pub mod analytics;
pub mod circuit;
pub mod error;
pub mod estimator;
pub mod gradient;
pub mod pauli;
pub mod simulator;

pub use circuit::{
    effective_parameters, n_eff, parameter_count, prune, sample_instance, CircuitInstance,
    CircuitSpec, Gate, GeneratorAssignment, GeneratorPolicy, ParameterVector, Rotation, ThetaDist,
};
pub use error::{Error, Result};
pub use estimator::RandomStream;
pub use pauli::{BlockSupport, DenseOperator, Letter, PauliString};
pub use simulator::{EntanglerKind, EntanglerPattern, InitKind, StateVector};
