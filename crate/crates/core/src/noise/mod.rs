//! Error models.
//!
//! Two formalisms live side by side: per-qubit error vectors evolved by a
//! transition matrix with sampled Pauli gate errors (round-train model), and
//! Werner-state fidelity analytics with fully depolarizing gate errors
//! (per-pair model).

mod pauli;
mod swap;
mod transition;
mod werner;

pub use pauli::{
    flip_measurement, sample_two_qubit_gate_error, uniform_pauli, Pauli, PauliFrame, PauliWeights, TwoQubitPauli,
};
pub use swap::{ErrorVectorSwap, StorageTimes, SwapOutcome, WernerSwap};
pub use transition::{
    calibrate_depolarizing, coherence_slices, depolarizing_q00, evolve_error_vector, ErrorClass, ErrorVector,
    TransitionMatrix, N_CLASSES,
};
pub use werner::{depolarize_pair, sample_depolarized_qubit, werner_decohere, WernerPair};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("transition matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("invalid error vector: {0}")]
    InvalidErrorVector(String),
    #[error("slice duration must be positive, got {0}")]
    InvalidSlice(f64),
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("{name} = {value} is out of range")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("coherence time must be positive, got {0}")]
    InvalidCoherenceTime(f64),
    #[error("coherence time {tau} s must span at least one slice of {slice} s")]
    InvalidCoherence { tau: f64, slice: f64 },
    #[error("fidelity {0} is outside [1/4, 1]")]
    InvalidFidelity(f64),
    #[error("matrix file: {0}")]
    MatrixParse(String),
}
