//! Event-driven link-level entanglement generation over a MIM link.
//!
//! Two protocol models are implemented:
//!
//! * [`ProtocolModel::RoundTrain`]: one connection setup (request, ack,
//!   BSA timing message), then rounds of `N_mem`-photon trains whose BSA
//!   results come back after the whole train was measured.
//! * [`ProtocolModel::PerPairHandshake`]: every round renegotiates from
//!   scratch; a round costs `(negotiation + herald) * L / c` regardless of
//!   where the BSA sits.
//!
//! Random draws: exactly one uniform per photon attempt, in emission order.
//! An attempt succeeds when the uniform is below `p_succ`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{HardwareParams, LinkGeometry, SimTime, ValidatedConfig};
use crate::kernel::{EventQueue, KernelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolModel {
    RoundTrain,
    PerPairHandshake,
}

impl ProtocolModel {
    pub const ALL: [ProtocolModel; 2] = [ProtocolModel::RoundTrain, ProtocolModel::PerPairHandshake];

    pub fn slug(self) -> &'static str {
        match self {
            ProtocolModel::RoundTrain => "round_train",
            ProtocolModel::PerPairHandshake => "per_pair_handshake",
        }
    }

    pub(crate) fn stream_id(self) -> u64 {
        match self {
            ProtocolModel::RoundTrain => 0,
            ProtocolModel::PerPairHandshake => 1,
        }
    }
}

impl fmt::Display for ProtocolModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ProtocolModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "round_train" | "round-train" | "quisp" => Ok(ProtocolModel::RoundTrain),
            "per_pair_handshake" | "per-pair-handshake" | "sequence" => Ok(ProtocolModel::PerPairHandshake),
            other => Err(format!("unknown protocol model `{other}`")),
        }
    }
}

/// Timestamps of one generated pair, in seconds since t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    /// Emission of the successful photon by node A.
    pub emission_time_s: f64,
    /// Bell-state measurement at the BSA.
    pub creation_time_s: f64,
    pub herald_at_a_s: f64,
    pub herald_at_b_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub model: ProtocolModel,
    /// Time at which the request is known to be complete.
    pub completion_time_s: f64,
    pub pairs: Vec<PairRecord>,
    pub rounds_executed: u64,
    pub attempts: u64,
    pub events: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum LinkError {
    #[error("unreachable request: success probability is {0}")]
    Unreachable(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Probability that both photons reach the BSA and the BSM succeeds:
/// `10^(-alpha d / 10) 10^(-alpha (L - d) / 10) p_bsm = 10^(-alpha L / 10) p_bsm`.
///
/// Evaluated in the collapsed form so the value does not depend on `d` at
/// all, not even in the last bit.
pub fn success_probability(geometry: &LinkGeometry, hardware: &HardwareParams) -> f64 {
    geometry.transmittance() * hardware.p_bsm
}

pub fn run_quisp_link<R: Rng + ?Sized>(cfg: &ValidatedConfig, rng: &mut R) -> Result<GenerationReport, LinkError> {
    LinkSimulation::new(ProtocolModel::RoundTrain, cfg).run(rng)
}

pub fn run_sequence_link<R: Rng + ?Sized>(cfg: &ValidatedConfig, rng: &mut R) -> Result<GenerationReport, LinkError> {
    LinkSimulation::new(ProtocolModel::PerPairHandshake, cfg).run(rng)
}

pub fn run_link<R: Rng + ?Sized>(
    model: ProtocolModel,
    cfg: &ValidatedConfig,
    rng: &mut R,
) -> Result<GenerationReport, LinkError> {
    LinkSimulation::new(model, cfg).run(rng)
}

/// One link-generation run with optional overrides.
pub struct LinkSimulation<'a> {
    model: ProtocolModel,
    cfg: &'a ValidatedConfig,
    p_succ: f64,
    trace: Option<Box<dyn Write + Send>>,
}

impl<'a> LinkSimulation<'a> {
    pub fn new(model: ProtocolModel, cfg: &'a ValidatedConfig) -> Self {
        Self {
            model,
            cfg,
            p_succ: success_probability(cfg.geometry(), cfg.hardware()),
            trace: None,
        }
    }

    /// Replaces the physical success probability (fault injection, limits).
    pub fn with_success_probability(mut self, p_succ: f64) -> Self {
        self.p_succ = p_succ;
        self
    }

    pub fn with_trace(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.trace = Some(sink);
        self
    }

    pub fn run<R: Rng + ?Sized>(self, rng: &mut R) -> Result<GenerationReport, LinkError> {
        if !(self.p_succ > 0.0 && self.p_succ <= 1.0) {
            return Err(LinkError::Unreachable(self.p_succ));
        }
        match self.model {
            ProtocolModel::RoundTrain => {
                let mut q = EventQueue::with_max_events(self.cfg.max_events());
                if let Some(sink) = self.trace {
                    q.set_trace(sink);
                }
                RoundTrain::new(self.cfg, self.p_succ, rng).run(q)
            }
            ProtocolModel::PerPairHandshake => {
                let mut q = EventQueue::with_max_events(self.cfg.max_events());
                if let Some(sink) = self.trace {
                    q.set_trace(sink);
                }
                PerPairHandshake::new(self.cfg, self.p_succ, rng).run(q)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    A,
    B,
}

struct Tally {
    n_bell: usize,
    pairs: Vec<PairRecord>,
    rounds: u64,
    attempts: u64,
    completion: Option<SimTime>,
}

impl Tally {
    fn new(n_bell: u32) -> Self {
        Self {
            n_bell: n_bell as usize,
            pairs: Vec::with_capacity(n_bell as usize),
            rounds: 0,
            attempts: 0,
            completion: None,
        }
    }

    fn done(&self) -> bool {
        self.pairs.len() >= self.n_bell
    }

    fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R, p_succ: f64, emission: SimTime, creation: SimTime) {
        self.attempts += 1;
        let success = rng.random::<f64>() < p_succ;
        // Extra successes in the final train are discarded.
        if success && !self.done() {
            self.pairs.push(PairRecord {
                emission_time_s: emission.as_secs(),
                creation_time_s: creation.as_secs(),
                herald_at_a_s: f64::NAN,
                herald_at_b_s: f64::NAN,
            });
        }
    }

    fn herald(&mut self, range: (usize, usize), node: Node, at: SimTime) {
        for pair in &mut self.pairs[range.0..range.1] {
            match node {
                Node::A => pair.herald_at_a_s = at.as_secs(),
                Node::B => pair.herald_at_b_s = at.as_secs(),
            }
        }
    }

    fn into_report(self, model: ProtocolModel, events: u64) -> GenerationReport {
        let completion = self.completion.expect("protocol finished without completing the request");
        GenerationReport {
            model,
            completion_time_s: completion.as_secs(),
            pairs: self.pairs,
            rounds_executed: self.rounds,
            attempts: self.attempts,
            events,
        }
    }
}

#[derive(Debug)]
enum TrainEvent {
    /// B's connection request reaches A; A answers with ack and rules.
    RequestAtA,
    /// Handshake done; the BSA sends its emission timing to both nodes.
    AckAtB,
    TimingAt(Node),
    PhotonAtBsa { index: u32 },
    ResultsAt { node: Node, first: usize, end: usize },
}

struct RoundTrain<'r, R: ?Sized> {
    rng: &'r mut R,
    p_succ: f64,
    n_mem: u32,
    one_way_s: f64,
    a_delay_s: f64,
    b_delay_s: f64,
    wait_s: f64,
    t_sep_s: f64,
    processing_s: f64,
    round_first_pair: usize,
    tally: Tally,
}

impl<'r, R: Rng + ?Sized> RoundTrain<'r, R> {
    fn new(cfg: &ValidatedConfig, p_succ: f64, rng: &'r mut R) -> Self {
        let g = cfg.geometry();
        let h = cfg.hardware();
        Self {
            rng,
            p_succ,
            n_mem: h.n_memories,
            one_way_s: g.end_to_end_s(),
            a_delay_s: g.a_to_bsa_s(),
            b_delay_s: g.b_to_bsa_s(),
            wait_s: h.t_wait_s(),
            t_sep_s: h.t_sep_s,
            processing_s: h.round_processing_delay_s,
            round_first_pair: 0,
            tally: Tally::new(cfg.request().n_bell),
        }
    }

    fn run(mut self, mut q: EventQueue<TrainEvent>) -> Result<GenerationReport, LinkError> {
        q.schedule(self.one_way_s, TrainEvent::RequestAtA)?;
        let stats = q.run_until_idle(|q, ev| self.handle(q, ev))?;
        Ok(self.tally.into_report(ProtocolModel::RoundTrain, stats.executed))
    }

    fn start_round(&mut self, q: &mut EventQueue<TrainEvent>) -> Result<(), KernelError> {
        self.tally.rounds += 1;
        self.round_first_pair = self.tally.pairs.len();
        for index in 0..self.n_mem {
            let emit = self.wait_s + f64::from(index) * self.t_sep_s;
            q.schedule(emit + self.a_delay_s, TrainEvent::PhotonAtBsa { index })?;
        }
        Ok(())
    }

    fn handle(&mut self, q: &mut EventQueue<TrainEvent>, ev: TrainEvent) -> Result<(), LinkError> {
        match ev {
            TrainEvent::RequestAtA => {
                q.schedule(self.one_way_s, TrainEvent::AckAtB)?;
            }
            TrainEvent::AckAtB => {
                q.schedule(self.a_delay_s, TrainEvent::TimingAt(Node::A))?;
                q.schedule(self.b_delay_s, TrainEvent::TimingAt(Node::B))?;
            }
            // Node A is the more distant node; rounds are paced by it.
            TrainEvent::TimingAt(Node::A) => self.start_round(q)?,
            TrainEvent::TimingAt(Node::B) => {}
            TrainEvent::PhotonAtBsa { index } => {
                let now = q.now();
                let flight = SimTime::from_secs(self.a_delay_s).ok_or(KernelError::InvalidDelay(self.a_delay_s))?;
                self.tally.attempt(self.rng, self.p_succ, now.saturating_sub(flight), now);
                if index + 1 == self.n_mem {
                    let (first, end) = (self.round_first_pair, self.tally.pairs.len());
                    q.schedule(
                        self.a_delay_s + self.processing_s,
                        TrainEvent::ResultsAt {
                            node: Node::A,
                            first,
                            end,
                        },
                    )?;
                    q.schedule(
                        self.b_delay_s + self.processing_s,
                        TrainEvent::ResultsAt {
                            node: Node::B,
                            first,
                            end,
                        },
                    )?;
                }
            }
            TrainEvent::ResultsAt { node, first, end } => {
                let now = q.now();
                self.tally.herald((first, end), node, now);
                if node == Node::A {
                    if self.tally.done() {
                        self.tally.completion = Some(now);
                    } else {
                        self.start_round(q)?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
enum HandshakeEvent {
    /// Negotiation finished; every memory pair emits.
    Emission,
    Bsm,
    HeraldsDelivered { first: usize },
}

struct PerPairHandshake<'r, R: ?Sized> {
    rng: &'r mut R,
    p_succ: f64,
    n_mem: u32,
    negotiation_s: f64,
    herald_s: f64,
    emitted_at: SimTime,
    round_first_pair: usize,
    tally: Tally,
}

impl<'r, R: Rng + ?Sized> PerPairHandshake<'r, R> {
    fn new(cfg: &ValidatedConfig, p_succ: f64, rng: &'r mut R) -> Self {
        let one_way = cfg.geometry().end_to_end_s();
        let split = cfg.handshake();
        Self {
            rng,
            p_succ,
            n_mem: cfg.hardware().n_memories,
            negotiation_s: split.negotiation_trips * one_way,
            herald_s: split.herald_trips * one_way,
            emitted_at: SimTime::ZERO,
            round_first_pair: 0,
            tally: Tally::new(cfg.request().n_bell),
        }
    }

    fn run(mut self, mut q: EventQueue<HandshakeEvent>) -> Result<GenerationReport, LinkError> {
        self.start_round(&mut q)?;
        let stats = q.run_until_idle(|q, ev| self.handle(q, ev))?;
        Ok(self.tally.into_report(ProtocolModel::PerPairHandshake, stats.executed))
    }

    fn start_round(&mut self, q: &mut EventQueue<HandshakeEvent>) -> Result<(), KernelError> {
        self.tally.rounds += 1;
        self.round_first_pair = self.tally.pairs.len();
        q.schedule(self.negotiation_s, HandshakeEvent::Emission)?;
        Ok(())
    }

    fn handle(&mut self, q: &mut EventQueue<HandshakeEvent>, ev: HandshakeEvent) -> Result<(), LinkError> {
        match ev {
            HandshakeEvent::Emission => {
                self.emitted_at = q.now();
                q.schedule(self.herald_s / 2.0, HandshakeEvent::Bsm)?;
                q.schedule(
                    self.herald_s,
                    HandshakeEvent::HeraldsDelivered {
                        first: self.round_first_pair,
                    },
                )?;
            }
            HandshakeEvent::Bsm => {
                let now = q.now();
                for _ in 0..self.n_mem {
                    self.tally.attempt(self.rng, self.p_succ, self.emitted_at, now);
                }
            }
            HandshakeEvent::HeraldsDelivered { first } => {
                let now = q.now();
                let end = self.tally.pairs.len();
                self.tally.herald((first, end), Node::A, now);
                self.tally.herald((first, end), Node::B, now);
                if self.tally.done() {
                    self.tally.completion = Some(now);
                } else {
                    self.start_round(q)?;
                }
            }
        }
        Ok(())
    }
}
