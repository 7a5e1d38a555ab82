//! Averaged moment maps, subset expansions, variance constants and
//! closed-form variance predictors.

mod calibration;
mod maps;
mod moments;

pub use calibration::{
    calibrate_single_layer, CalibrationGrid, CalibrationOutcome, CalibrationPoint,
    CalibrationReport, Setting, SettingReport,
};
pub use maps::{
    entangler_unitary, exact_twirl_first_moment, first_moment_subset_terms, pauli_operator,
    second_moment_subset_terms, single_gate_first_moment, single_gate_second_moment,
    subset_first_moment, subset_second_moment, Normalization, SubsetTerm,
    MAX_FIRST_MOMENT_QUBITS, MAX_SECOND_MOMENT_QUBITS,
};
pub use moments::{
    f_closed_form, fg_lookup, predict_deep_variance, predict_single_layer_variance, trig_moment,
    FGEntry, PrefactorMode, Rational, TrigMoment, DEEP_BASE, FG_MAX_WIDTH,
};
