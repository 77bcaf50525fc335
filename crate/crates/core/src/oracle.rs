//! Closed-form predictions for every quantity the simulators estimate.

use serde::Serialize;

use crate::domain::{ceil_slices, ValidatedConfig};
use crate::linkgen::{success_probability, ProtocolModel};
use crate::noise::{calibrate_depolarizing, coherence_slices, depolarizing_q00, werner_decohere, NoiseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("success probability must be in (0, 1], got {0}")]
    InvalidSuccessProbability(f64),
    #[error("memory count must be at least 1")]
    NoMemories,
    #[error("expected rounds overflow")]
    Overflow,
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Timing prediction for one request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingPrediction {
    pub t0_s: f64,
    pub t_setup_s: f64,
    pub t_round_s: f64,
    pub rounds: u64,
    pub t_exp_s: f64,
}

/// `n_mem * k * p_succ >= n_bell`, evaluated without rounding error in the
/// product.
fn covers(k: u64, n_mem: u64, p_succ: f64, n_bell: u64) -> bool {
    let m = (k as u128 * n_mem as u128) as f64;
    let hi = m * p_succ;
    let lo = m.mul_add(p_succ, -hi);
    let target = n_bell as f64;
    (hi - target) + lo >= 0.0
}

/// `k = ceil(N_Bell / (N_mem p_succ))`.
///
/// The ceiling is taken on the exact rational comparison
/// `k N_mem p_succ >= N_Bell`, so a quotient like `5023.9999999` caused by
/// rounding never bumps `k`.
pub fn expected_rounds(n_bell: u32, n_mem: u32, p_succ: f64) -> Result<u64, OracleError> {
    if !(p_succ > 0.0 && p_succ <= 1.0) {
        return Err(OracleError::InvalidSuccessProbability(p_succ));
    }
    if n_mem == 0 {
        return Err(OracleError::NoMemories);
    }
    let (n_bell, n_mem) = (u64::from(n_bell), u64::from(n_mem));
    let estimate = (n_bell as f64 / (n_mem as f64 * p_succ)).ceil();
    if estimate.is_nan() || estimate >= 2f64.powi(52) {
        return Err(OracleError::Overflow);
    }
    let mut k = (estimate as u64).max(1);
    while k > 1 && covers(k - 1, n_mem, p_succ, n_bell) {
        k -= 1;
    }
    while !covers(k, n_mem, p_succ, n_bell) {
        k += 1;
    }
    Ok(k)
}

/// Round-train model: `T_setup = 2L/c + d/c`,
/// `T_round = 2 T_0 + t_wait + (N_mem - 1) t_sep (+ processing)`,
/// `T_exp = T_setup + k T_round` with `T_0 = d / c`.
pub fn quisp_expected_time(cfg: &ValidatedConfig) -> Result<TimingPrediction, OracleError> {
    let g = cfg.geometry();
    let h = cfg.hardware();
    let t0 = g.a_to_bsa_s();
    let t_setup = 2.0 * g.end_to_end_s() + t0;
    let t_round = 2.0 * t0 + h.t_wait_s() + f64::from(h.n_memories - 1) * h.t_sep_s + h.round_processing_delay_s;
    let rounds = expected_rounds(cfg.request().n_bell, h.n_memories, success_probability(g, h))?;
    Ok(TimingPrediction {
        t0_s: t0,
        t_setup_s: t_setup,
        t_round_s: t_round,
        rounds,
        t_exp_s: t_setup + rounds as f64 * t_round,
    })
}

/// Per-pair model: `T_exp = k (negotiation + herald) L / c`, `4 L / c` per
/// round by default. No setup phase and no dependence on `d`.
pub fn sequence_expected_time(cfg: &ValidatedConfig) -> Result<TimingPrediction, OracleError> {
    let g = cfg.geometry();
    let h = cfg.hardware();
    let t_round = cfg.handshake().total_trips() * g.end_to_end_s();
    let rounds = expected_rounds(cfg.request().n_bell, h.n_memories, success_probability(g, h))?;
    Ok(TimingPrediction {
        t0_s: 0.0,
        t_setup_s: 0.0,
        t_round_s: t_round,
        rounds,
        t_exp_s: rounds as f64 * t_round,
    })
}

pub fn expected_time(model: ProtocolModel, cfg: &ValidatedConfig) -> Result<TimingPrediction, OracleError> {
    match model {
        ProtocolModel::RoundTrain => quisp_expected_time(cfg),
        ProtocolModel::PerPairHandshake => sequence_expected_time(cfg),
    }
}

/// End-to-end fidelity after one swap of perfect link pairs with a
/// 15-Pauli uniform gate error and symmetric readout flips.
pub fn f_swap(p_gate: f64, p_meas: f64) -> f64 {
    let (g, m) = (p_gate, p_meas);
    (1.0 - g) * (1.0 - m).powi(2)
        + (3.0 / 15.0) * g * (1.0 - m).powi(2)
        + (8.0 / 15.0) * g * (1.0 - m) * m
        + (4.0 / 15.0) * g * m * m
}

/// [`f_swap`] times the identity survival `(Q^n)_00` of a depolarizing
/// memory calibrated to `tau`, with `n = ceil((2 t1 + 2 t2 + 2 T) / dt)`.
pub fn f_swap_decoherence(
    p_gate: f64,
    p_meas: f64,
    t1_s: f64,
    t2_s: f64,
    message_s: f64,
    coherence_time_s: f64,
    slice_s: f64,
) -> Result<f64, OracleError> {
    Ok(f_swap(p_gate, p_meas) * memory_survival(t1_s, t2_s, message_s, coherence_time_s, slice_s)?)
}

/// `(Q^n)_00` factor used by [`f_swap_decoherence`].
pub fn memory_survival(
    t1_s: f64,
    t2_s: f64,
    message_s: f64,
    coherence_time_s: f64,
    slice_s: f64,
) -> Result<f64, OracleError> {
    let p = calibrate_depolarizing(coherence_time_s, slice_s)?;
    if coherence_time_s.is_finite() {
        coherence_slices(coherence_time_s, slice_s)?;
    }
    let total = 2.0 * t1_s + 2.0 * t2_s + 2.0 * message_s;
    let n = ceil_slices(total, slice_s).ok_or(NoiseError::InvalidTime(total))?;
    Ok(depolarizing_q00(p, n))
}

/// Swap of two Werner pairs with a fully depolarizing gate error and
/// readout flips. With `e_i = (1 - F_i) / 3`:
///
/// `p_g / 4 + (1 - p_g) [(1 - p_m)^2 (F1 F2 + 3 e1 e2) + p_m (2 - p_m) (F1 e2 + e1 F2 + 2 e1 e2)]`
///
/// The second bracket is the probability that the two input Pauli frames
/// combine to one specific non-identity Pauli, which a wrong readout then
/// cancels; it enters with a positive sign.
pub fn f_swap_werner(f1: f64, f2: f64, p_gate: f64, p_meas: f64) -> f64 {
    let e1 = (1.0 - f1) / 3.0;
    let e2 = (1.0 - f2) / 3.0;
    let same = f1 * f2 + 3.0 * e1 * e2;
    let one_off = f1 * e2 + e1 * f2 + 2.0 * e1 * e2;
    p_gate / 4.0 + (1.0 - p_gate) * ((1.0 - p_meas).powi(2) * same + p_meas * (2.0 - p_meas) * one_off)
}

/// Per-pair model end-to-end prediction: links decohere for `t1`, `t2`,
/// swap, then the output decoheres for `T`.
pub fn f_swap_werner_decohered(
    p_gate: f64,
    p_meas: f64,
    t1_s: f64,
    t2_s: f64,
    message_s: f64,
    coherence_time_s: f64,
) -> Result<f64, OracleError> {
    let f1 = werner_decohere(1.0, t1_s, coherence_time_s)?;
    let f2 = werner_decohere(1.0, t2_s, coherence_time_s)?;
    Ok(werner_decohere(f_swap_werner(f1, f2, p_gate, p_meas), message_s, coherence_time_s)?)
}
