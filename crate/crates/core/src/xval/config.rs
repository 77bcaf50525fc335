//! Experiment sweeps and their default settings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{ConfigErrors, LinkGeometry, RequestSpec, SimConfig, ValidatedConfig, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    /// Symmetric link, memory-count sweep, completion time.
    SymmetricLink,
    /// BSA-placement sweep, completion time.
    AsymmetricLink,
    /// One repeater swap, end-to-end fidelity.
    Swapping,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 3] = [ExperimentId::SymmetricLink, ExperimentId::AsymmetricLink, ExperimentId::Swapping];

    pub fn number(self) -> u8 {
        match self {
            ExperimentId::SymmetricLink => 1,
            ExperimentId::AsymmetricLink => 2,
            ExperimentId::Swapping => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.number() == n)
    }

    pub fn is_timing(self) -> bool {
        !matches!(self, ExperimentId::Swapping)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<u8>()
            .ok()
            .and_then(ExperimentId::from_number)
            .ok_or_else(|| format!("experiment must be 1, 2 or 3, got `{s}`"))
    }
}

/// One experiment: a base configuration plus the swept values.
///
/// Timing experiments sweep `n_mem x d_km` (memory count outer). The
/// swapping experiment sweeps `coherence_times_s x p_gate x p_meas`; there
/// `base.geometry` describes the end-to-end span with `d_km` the repeater
/// position, and each elementary link has its BSA at its own midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub base: SimConfig,
    pub n_mem: Vec<u32>,
    pub d_km: Vec<f64>,
    pub p_gate: Vec<f64>,
    pub p_meas: Vec<f64>,
    pub coherence_times_s: Vec<f64>,
    /// Replicas per timing configuration.
    pub replicas: u32,
    /// Swap trials per fidelity configuration.
    pub trials: u32,
    pub seed: u64,
    /// Replaces the physical success probability in the simulators (but
    /// not in the oracles). Fault injection only.
    pub p_succ_override: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPLICAS: u32 = 20;
pub const DEFAULT_TRIALS: u32 = 10_000;

const ERROR_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl ExperimentConfig {
    /// Default settings of each experiment.
    pub fn table1(id: ExperimentId) -> Self {
        let mut base = SimConfig::default();
        let mut cfg = ExperimentConfig {
            id,
            base: SimConfig::default(),
            n_mem: vec![1],
            d_km: vec![10.0],
            p_gate: vec![0.0],
            p_meas: vec![0.0],
            coherence_times_s: vec![f64::INFINITY],
            replicas: DEFAULT_REPLICAS,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            p_succ_override: None,
        };
        match id {
            ExperimentId::SymmetricLink => {
                cfg.n_mem = vec![1, 2, 4, 8, 16];
            }
            ExperimentId::AsymmetricLink => {
                cfg.d_km = (10..=20).map(f64::from).collect();
            }
            ExperimentId::Swapping => {
                base.geometry = LinkGeometry {
                    node_distance_km: 40.0,
                    bsa_offset_km: 20.0,
                    ..LinkGeometry::default()
                };
                base.request = RequestSpec { n_bell: 1 };
                cfg.d_km = vec![20.0];
                cfg.p_gate = ERROR_GRID.to_vec();
                cfg.p_meas = ERROR_GRID.to_vec();
                cfg.coherence_times_s = vec![18e-3, 55e-3, f64::INFINITY];
            }
        }
        cfg.base = base;
        cfg
    }

    /// Number of configurations per model.
    pub fn config_count(&self) -> usize {
        if self.id.is_timing() {
            self.n_mem.len() * self.d_km.len()
        } else {
            self.coherence_times_s.len() * self.p_gate.len() * self.p_meas.len()
        }
    }

    /// Validated link configuration of a timing sweep point.
    pub fn timing_link(&self, n_mem: u32, d_km: f64) -> Result<ValidatedConfig, ConfigErrors> {
        let mut c = self.base.clone();
        c.hardware.n_memories = n_mem;
        c.geometry.bsa_offset_km = d_km;
        c.validate()
    }

    /// The two elementary links of the swapping experiment, each with the
    /// BSA at its midpoint and a single requested pair.
    pub fn swap_links(&self) -> Result<[ValidatedConfig; 2], ConfigErrors> {
        let g = self.base.geometry;
        let repeater = g.bsa_offset_km;
        let link = |length: f64| {
            let mut c = self.base.clone();
            c.geometry.node_distance_km = length;
            c.geometry.bsa_offset_km = length / 2.0;
            c.request = RequestSpec { n_bell: 1 };
            c.validate()
        };
        Ok([link(repeater)?, link(g.node_distance_km - repeater)?])
    }

    /// Swap-notification delay `T`: the longer elementary link's `L / c`.
    pub fn swap_message_s(&self) -> f64 {
        let g = self.base.geometry;
        let longest = g.bsa_offset_km.max(g.node_distance_km - g.bsa_offset_km);
        longest / g.light_speed_km_s
    }

    /// Checks sweep domains and every derived link configuration.
    pub fn check(&self) -> Result<(), ConfigErrors> {
        let mut errs = Vec::new();
        let mut bad = |field: &'static str, message: String| errs.push(Violation { field, message });

        if self.replicas == 0 {
            bad("experiment.replicas", "R ≥ 1 violated (R = 0)".into());
        }
        if self.trials == 0 {
            bad("experiment.trials", "trials ≥ 1 violated (trials = 0)".into());
        }
        if let Some(p) = self.p_succ_override {
            if !(p > 0.0 && p <= 1.0) {
                bad("experiment.p_succ_override", format!("p_succ in (0,1] violated ({p})"));
            }
        }
        let slice = self.base.noise.slice_duration_s;
        if self.id.is_timing() {
            if self.n_mem.is_empty() {
                bad("experiment.n_mem", "sweep is empty".into());
            }
            if self.d_km.is_empty() {
                bad("experiment.d_km", "sweep is empty".into());
            }
            if let Some(&n) = self.n_mem.iter().find(|n| **n == 0) {
                bad("experiment.n_mem", format!("N_mem ≥ 1 violated (N_mem = {n})"));
            }
            for &d in &self.d_km {
                if let Err(e) = self.timing_link(self.n_mem.first().copied().unwrap_or(1).max(1), d) {
                    for v in e.0.into_iter().filter(|v| v.field == "geometry.d_km") {
                        bad("experiment.d_km", v.message);
                    }
                }
            }
        } else {
            for (field, values) in [("experiment.p_gate", &self.p_gate), ("experiment.p_meas", &self.p_meas)] {
                if values.is_empty() {
                    bad(field, "sweep is empty".into());
                }
                if let Some(p) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    bad(field, format!("probability in [0,1] violated ({p})"));
                }
            }
            if self.coherence_times_s.is_empty() {
                bad("experiment.coherence_time_s", "sweep is empty".into());
            }
            for &tau in &self.coherence_times_s {
                if tau.is_nan() || tau <= 0.0 {
                    bad("experiment.coherence_time_s", format!("tau > 0 violated ({tau})"));
                } else if tau < slice {
                    bad(
                        "experiment.coherence_time_s",
                        format!("tau ≥ slice duration violated (tau = {tau}, slice = {slice})"),
                    );
                }
            }
            if self.base.request.n_bell != 1 {
                bad(
                    "request.n_bell",
                    format!("the swap consumes exactly one pair per link (n_bell = {})", self.base.request.n_bell),
                );
            }
            let g = self.base.geometry;
            if !(g.bsa_offset_km > 0.0 && g.bsa_offset_km < g.node_distance_km) {
                bad(
                    "geometry.d_km",
                    format!(
                        "repeater strictly inside the span violated (d = {}, L = {})",
                        g.bsa_offset_km, g.node_distance_km
                    ),
                );
            }
        }

        match self.base.clone().validate() {
            Err(e) => errs.extend(e.0),
            Ok(_) if !self.id.is_timing() && errs.is_empty() => {
                if let Err(e) = self.swap_links() {
                    errs.extend(e.0);
                }
            }
            Ok(_) => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errs))
        }
    }
}
