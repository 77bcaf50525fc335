//! Cross-validation of two link-level entanglement generation protocols.
//!
//! * [`domain`]: units, parameters and configuration validation.
//! * [`kernel`]: deterministic discrete-event scheduler on a picosecond clock.
//! * [`linkgen`]: the round-train and per-pair-handshake link protocols.
//! * [`noise`]: error-vector and Werner error models, swap trials.
//! * [`oracle`]: closed-form timing and fidelity predictions.
//! * [`xval`]: experiment runners and the verdict comparator.
//! * [`config_file`]: the `key = value` configuration format.

pub mod config_file;
pub mod domain;
pub mod kernel;
pub mod linkgen;
pub mod noise;
pub mod oracle;
pub mod xval;

pub use domain::{
    validate_config, ConfigErrors, HandshakeSplit, HardwareParams, LinkGeometry, NoiseParams, RequestSpec, SimConfig,
    SimTime, ValidatedConfig, Violation,
};
pub use linkgen::{GenerationReport, PairRecord, ProtocolModel};
pub use noise::{ErrorClass, ErrorVector, Pauli, PauliWeights, TransitionMatrix, TwoQubitPauli};
pub use oracle::TimingPrediction;
pub use xval::{CrossValReport, ExperimentConfig, ExperimentId, ExperimentResult, SummaryRow, Verdict};
