//! Monte Carlo entanglement-swapping trials for both error formalisms.
//!
//! The repeater measures its two memories after a CNOT: the first readout
//! is effectively in the X basis, the second in the Z basis. Errors are
//! tracked as Pauli frames and a trial scores 1 when the end-to-end pair
//! ends up exactly in the target Bell state.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::domain::ceil_slices;

use super::pauli::{flip_measurement, sample_two_qubit_gate_error, uniform_pauli, Pauli, PauliFrame, PauliWeights, TwoQubitPauli};
use super::transition::{calibrate_depolarizing, ErrorClass, ErrorVector, TransitionMatrix};
use super::werner::{depolarize_pair, sample_depolarized_qubit};
use super::NoiseError;

/// Memory storage inputs of one swap: `t1`, `t2` for the two link pairs and
/// the swap-notification delay `T` to the end nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StorageTimes {
    pub t1_s: f64,
    pub t2_s: f64,
    pub message_s: f64,
}

impl StorageTimes {
    pub const NONE: StorageTimes = StorageTimes {
        t1_s: 0.0,
        t2_s: 0.0,
        message_s: 0.0,
    };

    /// `2 t1 + 2 t2 + 2 T`.
    pub fn total_qubit_time_s(&self) -> f64 {
        2.0 * self.t1_s + 2.0 * self.t2_s + 2.0 * self.message_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapOutcome {
    /// Pauli left on the end-to-end pair.
    pub residual: Pauli,
    /// Sampled memory error class (round-train model only).
    pub memory: Option<ErrorClass>,
    pub success: bool,
}

/// Round-train (error-vector) swap model.
///
/// Decoherence is folded in as a separate factor: the combined storage
/// time is converted to `n` slices, `pi(0) Q^n` is evaluated by matrix
/// power, and one class is sampled from it. The trial succeeds only if both
/// the swap frame and the memory class are identity.
#[derive(Debug, Clone)]
pub struct ErrorVectorSwap {
    p_gate: f64,
    p_meas: f64,
    weights: PauliWeights,
    transition: TransitionMatrix,
    memo: HashMap<u64, ErrorVector>,
}

impl ErrorVectorSwap {
    pub fn new(
        p_gate: f64,
        p_meas: f64,
        weights: PauliWeights,
        coherence_time_s: f64,
        slice_s: f64,
    ) -> Result<Self, NoiseError> {
        let p = calibrate_depolarizing(coherence_time_s, slice_s)?;
        Ok(Self {
            p_gate,
            p_meas,
            weights,
            transition: TransitionMatrix::depolarizing(p, slice_s)?,
            memo: HashMap::new(),
        })
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    /// Draw order: gate error (2), readout flips (2), memory class (1).
    pub fn trial<R: Rng + ?Sized>(&mut self, rng: &mut R, storage: &StorageTimes) -> Result<SwapOutcome, NoiseError> {
        let mut frame = PauliFrame::default();
        frame.apply(sample_two_qubit_gate_error(rng, self.p_gate, &self.weights));
        frame.flips[0] = flip_measurement(rng, self.p_meas, false);
        frame.flips[1] = flip_measurement(rng, self.p_meas, false);

        let total = storage.total_qubit_time_s();
        let n = ceil_slices(total, self.transition.slice_s()).ok_or(NoiseError::InvalidTime(total))?;
        let transition = &self.transition;
        let pi = *self
            .memo
            .entry(n)
            .or_insert_with(|| transition.evolve_slices(&ErrorVector::CLEAN, n));
        let memory = pi.sample(rng.random::<f64>());

        let residual = frame.swap_residual();
        Ok(SwapOutcome {
            residual,
            memory: Some(memory),
            success: residual == Pauli::I && memory == ErrorClass::I,
        })
    }
}

/// Per-pair (Werner) swap model: link pairs start perfect and every memory
/// qubit goes through a depolarizing channel with keep probability
/// `e^(-t/tau)`; the swap gate fully depolarizes both repeater qubits with
/// probability `p_g`.
#[derive(Debug, Clone)]
pub struct WernerSwap {
    p_gate: f64,
    p_meas: f64,
    coherence_time_s: f64,
}

impl WernerSwap {
    pub fn new(p_gate: f64, p_meas: f64, coherence_time_s: f64) -> Result<Self, NoiseError> {
        if coherence_time_s.is_nan() || coherence_time_s <= 0.0 {
            return Err(NoiseError::InvalidCoherenceTime(coherence_time_s));
        }
        Ok(Self {
            p_gate,
            p_meas,
            coherence_time_s,
        })
    }

    fn keep(&self, t_s: f64) -> f64 {
        (-t_s / self.coherence_time_s).exp()
    }

    fn stored_pair<R: Rng + ?Sized>(&self, rng: &mut R, t_s: f64) -> Pauli {
        let keep = self.keep(t_s);
        sample_depolarized_qubit(rng, keep).compose(sample_depolarized_qubit(rng, keep))
    }

    /// Draw order: link 1 qubits (4), link 2 qubits (4), gate (3), readout
    /// flips (2), end-node qubits during `T` (4).
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R, storage: &StorageTimes) -> SwapOutcome {
        let link1 = self.stored_pair(rng, storage.t1_s);
        let link2 = self.stored_pair(rng, storage.t2_s);

        let mut frame = PauliFrame::default();
        let survived = depolarize_pair(rng, self.p_gate);
        let mixed = TwoQubitPauli(uniform_pauli(rng), uniform_pauli(rng));
        if !survived {
            frame.apply(mixed);
        }
        frame.flips[0] = flip_measurement(rng, self.p_meas, false);
        frame.flips[1] = flip_measurement(rng, self.p_meas, false);

        let after = self.stored_pair(rng, storage.message_s);
        let residual = link1.compose(link2).compose(frame.swap_residual()).compose(after);
        SwapOutcome {
            residual,
            memory: None,
            success: residual == Pauli::I,
        }
    }
}
