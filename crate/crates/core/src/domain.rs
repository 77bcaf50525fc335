//! Physical and configuration types shared by every model.
//!
//! Lengths are kilometres, times are seconds (or [`SimTime`] picoseconds
//! inside the event kernel) and probabilities are plain `f64` in `[0, 1]`.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::noise::PauliWeights;

const PS_PER_SEC: f64 = 1e12;

/// Simulation clock value: an integer count of picoseconds since t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    /// Converts seconds to picoseconds, rounding half-up.
    ///
    /// Returns `None` for negative, non-finite or out-of-range values.
    pub fn from_secs(secs: f64) -> Option<Self> {
        if !secs.is_finite() || secs < 0.0 {
            return None;
        }
        let ps = (secs * PS_PER_SEC + 0.5).floor();
        if ps >= u64::MAX as f64 {
            return None;
        }
        Some(SimTime(ps as u64))
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / PS_PER_SEC
    }

    pub fn checked_add(self, other: SimTime) -> Option<SimTime> {
        self.0.checked_add(other.0).map(SimTime)
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

/// Slice count `ceil(t / dt)` evaluated on the picosecond grid.
pub fn ceil_slices(t_s: f64, dt_s: f64) -> Option<u64> {
    let t = SimTime::from_secs(t_s)?.as_ps();
    let dt = SimTime::from_secs(dt_s)?.as_ps();
    if dt == 0 {
        return None;
    }
    Some(t.div_ceil(dt))
}

/// Slice count `round(t / dt)` (half-up) evaluated on the picosecond grid.
pub fn round_slices(t_s: f64, dt_s: f64) -> Option<u64> {
    let t = SimTime::from_secs(t_s)?.as_ps() as u128;
    let dt = SimTime::from_secs(dt_s)?.as_ps() as u128;
    if dt == 0 {
        return None;
    }
    Some(((2 * t + dt) / (2 * dt)) as u64)
}

/// Geometry of a memory-interference-memory link.
///
/// `bsa_offset_km` is the fiber distance from node A to the Bell-state
/// analyzer. After validation node A is always the more distant endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub node_distance_km: f64,
    pub bsa_offset_km: f64,
    pub light_speed_km_s: f64,
    pub attenuation_db_km: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            node_distance_km: 20.0,
            bsa_offset_km: 10.0,
            light_speed_km_s: 2e5,
            attenuation_db_km: 0.2,
        }
    }
}

impl LinkGeometry {
    /// One-way propagation time across the whole link, `L / c`.
    pub fn end_to_end_s(&self) -> f64 {
        self.node_distance_km / self.light_speed_km_s
    }

    /// Propagation time between node A and the BSA, `d / c`.
    pub fn a_to_bsa_s(&self) -> f64 {
        self.bsa_offset_km / self.light_speed_km_s
    }

    /// Propagation time between node B and the BSA, `(L - d) / c`.
    pub fn b_to_bsa_s(&self) -> f64 {
        (self.node_distance_km - self.bsa_offset_km) / self.light_speed_km_s
    }

    /// Fiber transmittance over the full link, `10^(-alpha L / 10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.attenuation_db_km * self.node_distance_km / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareParams {
    pub n_memories: u32,
    /// Spacing between photons of one emission train.
    pub t_sep_s: f64,
    /// Memory preparation wait before a train, in units of `t_sep_s`.
    pub t_wait_multiplier: u32,
    pub p_bsm: f64,
    pub repetition_rate_hz: f64,
    /// Extra latency added to every round-train round (BSA processing).
    pub round_processing_delay_s: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        Self {
            n_memories: 1,
            t_sep_s: 1e-9,
            t_wait_multiplier: 10,
            p_bsm: 0.5,
            repetition_rate_hz: 1e9,
            round_processing_delay_s: 0.0,
        }
    }
}

impl HardwareParams {
    pub fn t_wait_s(&self) -> f64 {
        f64::from(self.t_wait_multiplier) * self.t_sep_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_gate: f64,
    pub p_meas: f64,
    /// Memory coherence time; `f64::INFINITY` disables decoherence.
    pub coherence_time_s: f64,
    pub slice_duration_s: f64,
    pub pauli_weights: PauliWeights,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            p_gate: 0.0,
            p_meas: 0.0,
            coherence_time_s: f64::INFINITY,
            slice_duration_s: 1e-6,
            pauli_weights: PauliWeights::uniform(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSpec {
    pub n_bell: u32,
}

impl Default for RequestSpec {
    fn default() -> Self {
        Self { n_bell: 1000 }
    }
}

/// Internal split of one per-pair-handshake round, in units of `L / c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandshakeSplit {
    pub negotiation_trips: f64,
    pub herald_trips: f64,
}

impl Default for HandshakeSplit {
    fn default() -> Self {
        Self {
            negotiation_trips: 3.0,
            herald_trips: 1.0,
        }
    }
}

impl HandshakeSplit {
    pub fn total_trips(&self) -> f64 {
        self.negotiation_trips + self.herald_trips
    }
}

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

/// Complete, not yet validated, simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub geometry: LinkGeometry,
    pub hardware: HardwareParams,
    pub noise: NoiseParams,
    pub request: RequestSpec,
    pub handshake: HandshakeSplit,
    pub max_events: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: LinkGeometry::default(),
            hardware: HardwareParams::default(),
            noise: NoiseParams::default(),
            request: RequestSpec::default(),
            handshake: HandshakeSplit::default(),
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every invariant violated by a configuration, in field order.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<Violation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl ConfigErrors {
    pub fn fields(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.0.iter().map(|v| v.field)
    }
}

/// A configuration that satisfied every invariant, with `d >= L/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    config: SimConfig,
    relabeled: bool,
}

impl ValidatedConfig {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn geometry(&self) -> &LinkGeometry {
        &self.config.geometry
    }

    pub fn hardware(&self) -> &HardwareParams {
        &self.config.hardware
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.config.noise
    }

    pub fn request(&self) -> RequestSpec {
        self.config.request
    }

    pub fn handshake(&self) -> HandshakeSplit {
        self.config.handshake
    }

    pub fn max_events(&self) -> u64 {
        self.config.max_events
    }

    /// True if the endpoints were swapped to enforce `d >= L/2`.
    pub fn relabeled(&self) -> bool {
        self.relabeled
    }

    pub fn into_config(self) -> SimConfig {
        self.config
    }
}

/// Validates the four parameter groups with default handshake split and
/// event cap.
pub fn validate_config(
    geometry: LinkGeometry,
    hardware: HardwareParams,
    noise: NoiseParams,
    request: RequestSpec,
) -> Result<ValidatedConfig, ConfigErrors> {
    SimConfig {
        geometry,
        hardware,
        noise,
        request,
        ..SimConfig::default()
    }
    .validate()
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl SimConfig {
    /// Checks every invariant and normalizes the BSA offset.
    pub fn validate(mut self) -> Result<ValidatedConfig, ConfigErrors> {
        let mut errs = Vec::new();
        let mut bad = |field: &'static str, message: String| errs.push(Violation { field, message });

        let g = &self.geometry;
        if !(g.node_distance_km.is_finite() && g.node_distance_km > 0.0) {
            bad("geometry.L_km", format!("L > 0 violated (L = {})", g.node_distance_km));
        }
        if !(g.bsa_offset_km.is_finite() && g.bsa_offset_km >= 0.0) {
            bad("geometry.d_km", format!("d ≥ 0 violated (d = {})", g.bsa_offset_km));
        } else if g.bsa_offset_km > g.node_distance_km {
            bad(
                "geometry.d_km",
                format!("d ≤ L violated (d = {}, L = {})", g.bsa_offset_km, g.node_distance_km),
            );
        }
        if !(g.light_speed_km_s.is_finite() && g.light_speed_km_s > 0.0) {
            bad("geometry.c_km_s", format!("c > 0 violated (c = {})", g.light_speed_km_s));
        }
        if !(g.attenuation_db_km.is_finite() && g.attenuation_db_km >= 0.0) {
            bad(
                "geometry.attenuation_db_km",
                format!("alpha ≥ 0 violated (alpha = {})", g.attenuation_db_km),
            );
        }

        let h = &self.hardware;
        if h.n_memories == 0 {
            bad("hardware.n_memories", "N_mem ≥ 1 violated (N_mem = 0)".into());
        }
        if !(h.t_sep_s.is_finite() && h.t_sep_s > 0.0) {
            bad("hardware.t_sep_s", format!("t_sep > 0 violated (t_sep = {})", h.t_sep_s));
        }
        if h.t_wait_multiplier == 0 {
            bad("hardware.t_wait_multiplier", "multiplier ≥ 1 violated (0)".into());
        }
        if !unit_interval(h.p_bsm) {
            bad("hardware.p_bsm", format!("p_bsm in [0,1] violated (p_bsm = {})", h.p_bsm));
        }
        if !(h.repetition_rate_hz.is_finite() && h.repetition_rate_hz > 0.0) {
            bad(
                "hardware.repetition_rate_hz",
                format!("rate > 0 violated (rate = {})", h.repetition_rate_hz),
            );
        } else if h.t_sep_s.is_finite() && h.t_sep_s * h.repetition_rate_hz < 1.0 - 1e-12 {
            bad(
                "hardware.t_sep_s",
                format!(
                    "t_sep ≥ 1/rate violated (t_sep = {}, 1/rate = {})",
                    h.t_sep_s,
                    1.0 / h.repetition_rate_hz
                ),
            );
        }
        if !(h.round_processing_delay_s.is_finite() && h.round_processing_delay_s >= 0.0) {
            bad(
                "hardware.round_processing_delay_s",
                format!("delay ≥ 0 violated (delay = {})", h.round_processing_delay_s),
            );
        }

        let n = &self.noise;
        if !unit_interval(n.p_gate) {
            bad("noise.p_gate", format!("p_g in [0,1] violated (p_g = {})", n.p_gate));
        }
        if !unit_interval(n.p_meas) {
            bad("noise.p_meas", format!("p_m in [0,1] violated (p_m = {})", n.p_meas));
        }
        let dt_ok = n.slice_duration_s.is_finite() && n.slice_duration_s >= 1e-12;
        if !dt_ok {
            bad(
                "noise.slice_duration_s",
                format!("dt ≥ 1 ps violated (dt = {})", n.slice_duration_s),
            );
        }
        if n.coherence_time_s.is_nan() || n.coherence_time_s <= 0.0 {
            bad(
                "noise.coherence_time_s",
                format!("tau > 0 violated (tau = {})", n.coherence_time_s),
            );
        } else if dt_ok && n.coherence_time_s.is_finite() && n.coherence_time_s < n.slice_duration_s {
            bad(
                "noise.coherence_time_s",
                format!(
                    "tau ≥ dt violated (tau = {}, dt = {})",
                    n.coherence_time_s, n.slice_duration_s
                ),
            );
        }
        if let Err(msg) = n.pauli_weights.check() {
            bad("noise.pauli_weights", msg);
        }

        if self.request.n_bell == 0 {
            bad("request.n_bell", "N_Bell ≥ 1 violated (N_Bell = 0)".into());
        }

        let s = &self.handshake;
        if !(s.negotiation_trips.is_finite() && s.negotiation_trips >= 0.0) {
            bad(
                "handshake.negotiation_trips",
                format!("≥ 0 violated ({})", s.negotiation_trips),
            );
        }
        if !(s.herald_trips.is_finite() && s.herald_trips >= 0.0) {
            bad("handshake.herald_trips", format!("≥ 0 violated ({})", s.herald_trips));
        }
        if s.total_trips() <= 0.0 {
            bad("handshake.herald_trips", "round duration > 0 violated".into());
        }
        if self.max_events == 0 {
            bad("kernel.max_events", "cap ≥ 1 violated (0)".into());
        }

        if !errs.is_empty() {
            return Err(ConfigErrors(errs));
        }

        let g = &mut self.geometry;
        let relabeled = g.bsa_offset_km < g.node_distance_km / 2.0;
        if relabeled {
            g.bsa_offset_km = g.node_distance_km - g.bsa_offset_km;
        }
        Ok(ValidatedConfig {
            config: self,
            relabeled,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table1_link_is_valid() {
        let v = validate_config(
            LinkGeometry::default(),
            HardwareParams::default(),
            NoiseParams::default(),
            RequestSpec::default(),
        )
        .unwrap();
        assert_eq!(v.geometry().bsa_offset_km, 10.0);
        assert!(!v.relabeled());
    }

    #[test]
    fn offset_beyond_link_is_rejected() {
        let geometry = LinkGeometry {
            bsa_offset_km: 25.0,
            ..LinkGeometry::default()
        };
        let err = validate_config(
            geometry,
            HardwareParams::default(),
            NoiseParams::default(),
            RequestSpec::default(),
        )
        .unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].field, "geometry.d_km");
        assert!(err.to_string().contains("d ≤ L violated"));
    }

    #[test]
    fn short_offset_is_relabeled() {
        let geometry = LinkGeometry {
            bsa_offset_km: 5.0,
            ..LinkGeometry::default()
        };
        let v = validate_config(
            geometry,
            HardwareParams::default(),
            NoiseParams::default(),
            RequestSpec::default(),
        )
        .unwrap();
        assert_eq!(v.geometry().bsa_offset_km, 15.0);
        assert!(v.relabeled());
    }

    #[test]
    fn all_violations_are_reported() {
        let cfg = SimConfig {
            geometry: LinkGeometry {
                node_distance_km: -1.0,
                light_speed_km_s: 0.0,
                ..LinkGeometry::default()
            },
            hardware: HardwareParams {
                n_memories: 0,
                p_bsm: 1.5,
                t_sep_s: 1e-10,
                ..HardwareParams::default()
            },
            request: RequestSpec { n_bell: 0 },
            ..SimConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        let fields: Vec<_> = err.fields().collect();
        assert!(fields.contains(&"geometry.L_km"));
        assert!(fields.contains(&"geometry.c_km_s"));
        assert!(fields.contains(&"hardware.n_memories"));
        assert!(fields.contains(&"hardware.p_bsm"));
        assert!(fields.contains(&"hardware.t_sep_s"));
        assert!(fields.contains(&"request.n_bell"));
    }

    #[test]
    fn coherence_shorter_than_slice_is_rejected() {
        let cfg = SimConfig {
            noise: NoiseParams {
                coherence_time_s: 1e-7,
                ..NoiseParams::default()
            },
            ..SimConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.0[0].field, "noise.coherence_time_s");
    }

    #[test]
    fn slice_helpers_avoid_float_artifacts() {
        // 2e-4 / 1e-6 is 200.00000000000003 in f64.
        assert_eq!(ceil_slices(2e-4, 1e-6), Some(200));
        assert_eq!(ceil_slices(2.000001e-4, 1e-6), Some(201));
        assert_eq!(round_slices(18e-3, 1e-6), Some(18_000));
        assert_eq!(round_slices(1.5e-6, 1e-6), Some(2));
        assert_eq!(ceil_slices(0.0, 1e-6), Some(0));
    }

    #[test]
    fn simtime_conversions() {
        assert_eq!(SimTime::from_secs(1e-4), Some(SimTime::from_ps(100_000_000)));
        assert_eq!(SimTime::from_secs(-1.0), None);
        assert_eq!(SimTime::from_secs(f64::INFINITY), None);
        assert_eq!(SimTime::from_ps(1_000).as_secs(), 1e-9);
    }

    proptest! {
        #[test]
        fn simtime_round_trip(ps in 0u64..1_000_000_000_000_000) {
            let t = SimTime::from_ps(ps);
            prop_assert_eq!(SimTime::from_secs(t.as_secs()), Some(t));
        }

        #[test]
        fn validation_normalizes_and_is_idempotent(l in 0.1f64..200.0, frac in 0.0f64..=1.0) {
            let cfg = SimConfig {
                geometry: LinkGeometry { node_distance_km: l, bsa_offset_km: l * frac, ..LinkGeometry::default() },
                ..SimConfig::default()
            };
            let once = cfg.validate().unwrap();
            prop_assert!(once.geometry().bsa_offset_km >= once.geometry().node_distance_km / 2.0);
            let twice = once.config().clone().validate().unwrap();
            prop_assert_eq!(twice.config(), once.config());
            prop_assert!(!twice.relabeled());
        }
    }
}
