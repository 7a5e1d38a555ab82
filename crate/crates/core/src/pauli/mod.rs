//! Pauli strings, small dense operators, and Pauli-group twirl sums.

mod dense;
mod string;
mod twirl;

pub use dense::{DenseOperator, MAX_DENSE_QUBITS};
pub use string::{block_letters, qubit_bit, Letter, PauliString, MAX_PAULI_QUBITS};
pub use twirl::{
    twirl_closed_form, twirl_sum, twirl_sum_second, BlockSupport, MAX_SECOND_TWIRL_QUBITS,
};

pub(crate) use dense::check_dense;
pub(crate) use string::i_pow;
