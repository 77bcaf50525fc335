//! Werner-state analytics and the depolarizing primitives they rest on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::SimTime;

use super::pauli::{uniform_pauli, Pauli};
use super::NoiseError;

/// Fidelity after both halves of a pair sit in depolarizing memories with
/// coherence time `tau` for `t` seconds:
/// `F(t) = F_in e^(-2t/tau) + (1 - e^(-2t/tau)) / 4`.
pub fn werner_decohere(f_in: f64, t_s: f64, coherence_time_s: f64) -> Result<f64, NoiseError> {
    if coherence_time_s.is_nan() || coherence_time_s <= 0.0 {
        return Err(NoiseError::InvalidCoherenceTime(coherence_time_s));
    }
    if t_s.is_nan() || t_s < 0.0 {
        return Err(NoiseError::InvalidTime(t_s));
    }
    // Holds for any input state; a swap with readout flips can leave F < 1/4.
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&f_in), "F_in = {f_in} is not a fidelity");
    let survive = (-2.0 * t_s / coherence_time_s).exp();
    let f = f_in * survive + (1.0 - survive) / 4.0;
    debug_assert!(f <= f_in.max(0.25) + 1e-15 && f >= f_in.min(0.25) - 1e-15);
    Ok(f)
}

/// An entangled pair tracked by its Werner fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerPair {
    pub fidelity: f64,
    pub created_at: SimTime,
    pub coherence_time_s: f64,
}

impl WernerPair {
    pub fn new(fidelity: f64, created_at: SimTime, coherence_time_s: f64) -> Result<Self, NoiseError> {
        if !(0.25..=1.0).contains(&fidelity) {
            return Err(NoiseError::InvalidFidelity(fidelity));
        }
        if coherence_time_s.is_nan() || coherence_time_s <= 0.0 {
            return Err(NoiseError::InvalidCoherenceTime(coherence_time_s));
        }
        Ok(Self {
            fidelity,
            created_at,
            coherence_time_s,
        })
    }

    /// Fidelity at a later clock value.
    pub fn fidelity_at(&self, now: SimTime) -> f64 {
        let stored = now.saturating_sub(self.created_at).as_secs();
        let survive = (-2.0 * stored / self.coherence_time_s).exp();
        self.fidelity * survive + (1.0 - survive) / 4.0
    }
}

/// Gate error of the Werner model: `true` (untouched) with probability
/// `1 - p_g`, otherwise both qubits are replaced by the maximally mixed
/// state. One uniform.
pub fn depolarize_pair<R: Rng + ?Sized>(rng: &mut R, p_gate: f64) -> bool {
    rng.random::<f64>() >= p_gate
}

/// Single-qubit depolarizing channel as a Pauli sample: keeps the qubit
/// with probability `keep`, otherwise replaces it by the maximally mixed
/// state, i.e. a uniformly random Pauli. Two uniforms.
pub fn sample_depolarized_qubit<R: Rng + ?Sized>(rng: &mut R, keep: f64) -> Pauli {
    let replaced = rng.random::<f64>() >= keep;
    let p = uniform_pauli(rng);
    if replaced {
        p
    } else {
        Pauli::I
    }
}
