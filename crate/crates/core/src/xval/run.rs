//! Experiment runners.
//!
//! Every unit of work (one replica of a timing point, or all trials of one
//! fidelity grid point) owns a seeded stream, runs on the rayon pool, and
//! is collected back in task order, so the worker count never changes a
//! single output byte.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{SimTime, ValidatedConfig};
use crate::linkgen::{run_link, GenerationReport, LinkSimulation, ProtocolModel};
use crate::noise::{ErrorVectorSwap, StorageTimes, WernerSwap};
use crate::oracle::{expected_time, f_swap_decoherence, f_swap_werner_decohered};

use super::config::{ExperimentConfig, ExperimentId};
use super::seeds::stream_rng;
use super::stats::{mean_std, z_score};
use super::XvalError;

/// Aggregate of one (model, configuration) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: u8,
    pub model: ProtocolModel,
    pub config_index: usize,
    pub n_mem: u32,
    pub d_km: f64,
    pub p_gate: f64,
    pub p_meas: f64,
    pub coherence_time_s: f64,
    pub samples: u64,
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub oracle: f64,
    /// Standard error used for the oracle z-score: `stderr` for timing
    /// rows, the binomial error under the per-trial oracle for fidelity.
    pub sigma: f64,
    pub z: f64,
}

impl SummaryRow {
    /// Sweep coordinates; two rows describe the same configuration iff
    /// their keys are equal.
    pub fn key(&self) -> (u8, usize, u32, u64, u64, u64, u64) {
        (
            self.experiment,
            self.config_index,
            self.n_mem,
            self.d_km.to_bits(),
            self.p_gate.to_bits(),
            self.p_meas.to_bits(),
            self.coherence_time_s.to_bits(),
        )
    }
}

/// One timing replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRow {
    pub experiment: u8,
    pub model: ProtocolModel,
    pub config_index: usize,
    pub replica: u32,
    pub n_mem: u32,
    pub d_km: f64,
    pub completion_s: f64,
    pub completion_ps: u64,
    pub rounds: u64,
    pub attempts: u64,
    pub events: u64,
}

/// Per-pair over round-train completion time at one timing point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub config_index: usize,
    pub n_mem: u32,
    pub d_km: f64,
    pub mean_round_train: f64,
    pub mean_per_pair: f64,
    pub ratio: f64,
    pub oracle_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub summary: Vec<SummaryRow>,
    pub replicas: Vec<ReplicaRow>,
    pub ratios: Vec<RatioRow>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ExperimentResult {
    pub fn rows_for(&self, model: ProtocolModel) -> Vec<SummaryRow> {
        self.summary.iter().filter(|r| r.model == model).cloned().collect()
    }
}

/// Runs any experiment on a pool of `jobs` workers (0 = one per core).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult, XvalError> {
    cfg.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| XvalError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        if cfg.id.is_timing() {
            run_timing(cfg)
        } else {
            run_swapping(cfg)
        }
    })
}

fn expect_id(cfg: &ExperimentConfig, id: ExperimentId) -> Result<(), XvalError> {
    if cfg.id == id {
        Ok(())
    } else {
        Err(XvalError::WrongExperiment {
            expected: id.number(),
            got: cfg.id.number(),
        })
    }
}

pub fn run_experiment_1(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult, XvalError> {
    expect_id(cfg, ExperimentId::SymmetricLink)?;
    run_experiment(cfg, jobs)
}

pub fn run_experiment_2(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult, XvalError> {
    expect_id(cfg, ExperimentId::AsymmetricLink)?;
    run_experiment(cfg, jobs)
}

pub fn run_experiment_3(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult, XvalError> {
    expect_id(cfg, ExperimentId::Swapping)?;
    run_experiment(cfg, jobs)
}

fn simulate(
    cfg: &ExperimentConfig,
    model: ProtocolModel,
    link: &ValidatedConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GenerationReport, XvalError> {
    let report = match cfg.p_succ_override {
        Some(p) => LinkSimulation::new(model, link).with_success_probability(p).run(rng)?,
        None => run_link(model, link, rng)?,
    };
    Ok(report)
}

struct TimingPoint {
    index: usize,
    /// Random stream shared by every `d` of the same memory count.
    stream: u64,
    n_mem: u32,
    d_km: f64,
    link: ValidatedConfig,
}

fn timing_points(cfg: &ExperimentConfig) -> Result<Vec<TimingPoint>, XvalError> {
    let mut points = Vec::with_capacity(cfg.config_count());
    for (mi, &n_mem) in cfg.n_mem.iter().enumerate() {
        for &d_km in &cfg.d_km {
            points.push(TimingPoint {
                index: points.len(),
                stream: mi as u64,
                n_mem,
                d_km,
                link: cfg.timing_link(n_mem, d_km)?,
            });
        }
    }
    Ok(points)
}

fn run_timing(cfg: &ExperimentConfig) -> Result<ExperimentResult, XvalError> {
    let exp = cfg.id.number();
    let points = timing_points(cfg)?;
    let tasks: Vec<(ProtocolModel, usize, u32)> = ProtocolModel::ALL
        .iter()
        .flat_map(|&m| (0..points.len()).flat_map(move |p| (0..cfg.replicas).map(move |r| (m, p, r))))
        .collect();

    let replicas = tasks
        .par_iter()
        .map(|&(model, pi, replica)| {
            let point = &points[pi];
            let mut rng = stream_rng(cfg.seed, exp, model, point.stream, u64::from(replica));
            let report = simulate(cfg, model, &point.link, &mut rng)?;
            let completion_ps = SimTime::from_secs(report.completion_time_s)
                .map(SimTime::as_ps)
                .unwrap_or(u64::MAX);
            Ok(ReplicaRow {
                experiment: exp,
                model,
                config_index: point.index,
                replica,
                n_mem: point.n_mem,
                d_km: point.d_km,
                completion_s: report.completion_time_s,
                completion_ps,
                rounds: report.rounds_executed,
                attempts: report.attempts,
                events: report.events,
            })
        })
        .collect::<Result<Vec<_>, XvalError>>()?;

    let mut summary = Vec::with_capacity(2 * points.len());
    for chunk in replicas.chunks(cfg.replicas as usize) {
        let model = chunk[0].model;
        let point = &points[chunk[0].config_index];
        let times: Vec<f64> = chunk.iter().map(|r| r.completion_s).collect();
        let (mean, stddev) = mean_std(&times);
        let stderr = stddev / (times.len() as f64).sqrt();
        let oracle = expected_time(model, &point.link)?.t_exp_s;
        let noise = point.link.noise();
        summary.push(SummaryRow {
            experiment: exp,
            model,
            config_index: point.index,
            n_mem: point.n_mem,
            d_km: point.d_km,
            p_gate: noise.p_gate,
            p_meas: noise.p_meas,
            coherence_time_s: noise.coherence_time_s,
            samples: times.len() as u64,
            mean,
            stddev,
            stderr,
            oracle,
            sigma: stderr,
            z: z_score(mean, oracle, stderr),
        });
    }

    let n = points.len();
    let ratios: Vec<RatioRow> = (0..n)
        .map(|i| {
            let (rt, pp) = (&summary[i], &summary[n + i]);
            RatioRow {
                config_index: i,
                n_mem: rt.n_mem,
                d_km: rt.d_km,
                mean_round_train: rt.mean,
                mean_per_pair: pp.mean,
                ratio: pp.mean / rt.mean,
                oracle_ratio: pp.oracle / rt.oracle,
            }
        })
        .collect();

    let mut result = ExperimentResult {
        config: cfg.clone(),
        summary,
        replicas,
        ratios,
        diagnostics: Vec::new(),
    };
    result.diagnostics = timing_diagnostics(&result, &points)?;
    Ok(result)
}

fn band(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn z_diagnostic(rows: &[SummaryRow]) -> Diagnostic {
    let outliers: Vec<String> = rows
        .iter()
        .filter(|r| r.z.is_nan() || r.z.abs() > 3.0)
        .map(|r| format!("{}#{} z={:.2}", r.model, r.config_index, r.z))
        .collect();
    Diagnostic {
        name: "oracle_within_3_sigma".into(),
        passed: outliers.is_empty(),
        detail: if outliers.is_empty() {
            format!("all {} rows within |z| <= 3", rows.len())
        } else {
            format!("{} of {} rows outside: {}", outliers.len(), rows.len(), outliers.join(", "))
        },
    }
}

fn timing_diagnostics(result: &ExperimentResult, points: &[TimingPoint]) -> Result<Vec<Diagnostic>, XvalError> {
    let cfg = &result.config;
    let mut out = vec![z_diagnostic(&result.summary)];

    if cfg.n_mem.len() > 1 {
        for &d in &cfg.d_km {
            let ratios: Vec<&RatioRow> = result.ratios.iter().filter(|r| r.d_km == d).collect();
            let (lo, hi) = band(ratios.iter().map(|r| r.ratio));
            let variation = (hi - lo) / lo;
            out.push(Diagnostic {
                name: format!("ratio_band_d{d}"),
                passed: variation < 0.05,
                detail: format!("per-pair / round-train ratio in [{lo:.4}, {hi:.4}], variation {:.2}%", 100.0 * variation),
            });
            let worst = ratios
                .iter()
                .map(|r| (r.ratio / r.oracle_ratio - 1.0).abs())
                .fold(0.0, f64::max);
            out.push(Diagnostic {
                name: format!("ratio_vs_oracle_d{d}"),
                passed: worst < 0.02,
                detail: format!("largest relative deviation from the oracle ratio {:.3}%", 100.0 * worst),
            });
        }
        for model in ProtocolModel::ALL {
            let rows: Vec<&SummaryRow> = result.summary.iter().filter(|r| r.model == model).collect();
            let mut worst: f64 = 0.0;
            let mut pairs = 0;
            for a in &rows {
                if let Some(b) = rows.iter().find(|b| b.d_km == a.d_km && b.n_mem == 2 * a.n_mem) {
                    worst = worst.max((b.mean / a.mean / 0.5 - 1.0).abs());
                    pairs += 1;
                }
            }
            if pairs > 0 {
                out.push(Diagnostic {
                    name: format!("doubling_halves_{model}"),
                    passed: worst <= 0.05,
                    detail: format!("{pairs} N_mem doublings, largest deviation from 1/2: {:.2}%", 100.0 * worst),
                });
            }
        }
    }

    if cfg.d_km.len() > 1 {
        let by_model = |model| result.replicas.iter().filter(move |r: &&ReplicaRow| r.model == model);
        let mut varying = 0;
        for &n_mem in &cfg.n_mem {
            for replica in 0..cfg.replicas {
                let mut times = by_model(ProtocolModel::PerPairHandshake)
                    .filter(|r| r.n_mem == n_mem && r.replica == replica)
                    .map(|r| r.completion_ps);
                let first = times.next();
                if times.any(|t| Some(t) != first) {
                    varying += 1;
                }
            }
        }
        out.push(Diagnostic {
            name: "per_pair_invariant_in_d".into(),
            passed: varying == 0,
            detail: format!("{varying} replicas with completion times that depend on d"),
        });

        let (d_lo, d_hi) = band(cfg.d_km.iter().copied());
        for &n_mem in &cfg.n_mem {
            let mean_at = |d: f64| {
                result
                    .summary
                    .iter()
                    .find(|r| r.model == ProtocolModel::RoundTrain && r.n_mem == n_mem && r.d_km == d)
                    .map(|r| r.mean)
                    .unwrap_or(f64::NAN)
            };
            let (lo, hi) = (mean_at(d_lo), mean_at(d_hi));
            out.push(Diagnostic {
                name: format!("round_train_slower_at_far_bsa_n{n_mem}"),
                passed: hi > lo,
                detail: format!("mean {hi:.6} s at d = {d_hi} vs {lo:.6} s at d = {d_lo}"),
            });

            // T_exp(d) = T_exp(d0) + (2k + 1)(d - d0) / c.
            let pts: Vec<&TimingPoint> = points.iter().filter(|p| p.n_mem == n_mem).collect();
            let anchor = expected_time(ProtocolModel::RoundTrain, &pts[0].link)?;
            let c = pts[0].link.geometry().light_speed_km_s;
            let d0 = pts[0].link.geometry().bsa_offset_km;
            let slope = (2.0 * anchor.rounds as f64 + 1.0) / c;
            let mut worst: f64 = 0.0;
            for p in &pts {
                let got = expected_time(ProtocolModel::RoundTrain, &p.link)?.t_exp_s;
                let line = anchor.t_exp_s + slope * (p.link.geometry().bsa_offset_km - d0);
                worst = worst.max(((got - line) / line).abs());
            }
            out.push(Diagnostic {
                name: format!("round_train_oracle_affine_n{n_mem}"),
                passed: worst <= 1e-9,
                detail: format!("slope (2k+1)/c = {slope:.6e} s/km, largest relative residual {worst:.2e}"),
            });
        }
    }
    Ok(out)
}

/// Re-runs the first link simulation `model` performs in `cfg` (timing:
/// configuration 0, replica 0; swapping: first link of the first trial at
/// grid point 0) with an event trace written to `sink`.
pub fn trace_first_run(
    cfg: &ExperimentConfig,
    model: ProtocolModel,
    sink: Box<dyn std::io::Write + Send>,
) -> Result<GenerationReport, XvalError> {
    cfg.check()?;
    let (link, stream) = if cfg.id.is_timing() {
        let n_mem = cfg.n_mem[0];
        (cfg.timing_link(n_mem, cfg.d_km[0])?, 0)
    } else {
        let [first, _] = cfg.swap_links()?;
        (first, 0)
    };
    let mut rng = stream_rng(cfg.seed, cfg.id.number(), model, stream, 0);
    let mut sim = LinkSimulation::new(model, &link).with_trace(sink);
    if let Some(p) = cfg.p_succ_override {
        sim = sim.with_success_probability(p);
    }
    Ok(sim.run(&mut rng)?)
}

enum Swapper {
    ErrorVector(Box<ErrorVectorSwap>),
    Werner(WernerSwap),
}

#[derive(Debug, Default, Clone)]
struct FidelityTally {
    trials: u64,
    successes: u64,
    oracle_sum: f64,
    oracle_var_sum: f64,
}

struct GridPoint {
    index: usize,
    p_gate: f64,
    p_meas: f64,
}

/// All trials of one (model, error-grid point), every coherence time at
/// once. The links are simulated once per trial; each coherence time then
/// replays the same swap uniforms from a clone of the stream, which is
/// exactly what separate runs sharing the stream would draw.
fn swap_task(
    cfg: &ExperimentConfig,
    links: &[ValidatedConfig; 2],
    model: ProtocolModel,
    point: &GridPoint,
) -> Result<Vec<FidelityTally>, XvalError> {
    let noise = &cfg.base.noise;
    let slice = noise.slice_duration_s;
    let message_s = cfg.swap_message_s();
    let mut swappers = cfg
        .coherence_times_s
        .iter()
        .map(|&tau| -> Result<Swapper, XvalError> {
            Ok(match model {
                ProtocolModel::RoundTrain => Swapper::ErrorVector(Box::new(ErrorVectorSwap::new(
                    point.p_gate,
                    point.p_meas,
                    noise.pauli_weights.clone(),
                    tau,
                    slice,
                )?)),
                ProtocolModel::PerPairHandshake => Swapper::Werner(WernerSwap::new(point.p_gate, point.p_meas, tau)?),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut tallies = vec![FidelityTally::default(); swappers.len()];

    let mut rng = stream_rng(cfg.seed, cfg.id.number(), model, point.index as u64, 0);
    for _ in 0..cfg.trials {
        let first = simulate(cfg, model, &links[0], &mut rng)?;
        let second = simulate(cfg, model, &links[1], &mut rng)?;
        let swap_at = first.completion_time_s.max(second.completion_time_s);
        let storage = StorageTimes {
            t1_s: swap_at - first.pairs[0].emission_time_s,
            t2_s: swap_at - second.pairs[0].emission_time_s,
            message_s,
        };

        let mut next = None;
        for ((swapper, tally), &tau) in swappers.iter_mut().zip(&mut tallies).zip(&cfg.coherence_times_s) {
            let mut r = rng.clone();
            let (success, oracle) = match swapper {
                Swapper::ErrorVector(s) => (
                    s.trial(&mut r, &storage)?.success,
                    f_swap_decoherence(point.p_gate, point.p_meas, storage.t1_s, storage.t2_s, message_s, tau, slice)?,
                ),
                Swapper::Werner(s) => (
                    s.trial(&mut r, &storage).success,
                    f_swap_werner_decohered(point.p_gate, point.p_meas, storage.t1_s, storage.t2_s, message_s, tau)?,
                ),
            };
            tally.trials += 1;
            tally.successes += u64::from(success);
            tally.oracle_sum += oracle;
            tally.oracle_var_sum += oracle * (1.0 - oracle);
            debug_assert!(next.as_ref().is_none_or(|n: &ChaCha8Rng| n.get_word_pos() == r.get_word_pos()));
            next = Some(r);
        }
        if let Some(r) = next {
            rng = r;
        }
    }
    Ok(tallies)
}

fn run_swapping(cfg: &ExperimentConfig) -> Result<ExperimentResult, XvalError> {
    let exp = cfg.id.number();
    let links = cfg.swap_links()?;
    let grid: Vec<GridPoint> = cfg
        .p_gate
        .iter()
        .flat_map(|&p_gate| cfg.p_meas.iter().map(move |&p_meas| (p_gate, p_meas)))
        .enumerate()
        .map(|(index, (p_gate, p_meas))| GridPoint { index, p_gate, p_meas })
        .collect();
    let tasks: Vec<(ProtocolModel, usize)> = ProtocolModel::ALL
        .iter()
        .flat_map(|&m| (0..grid.len()).map(move |g| (m, g)))
        .collect();
    let tallies = tasks
        .par_iter()
        .map(|&(model, g)| swap_task(cfg, &links, model, &grid[g]))
        .collect::<Result<Vec<_>, XvalError>>()?;

    let mut summary = Vec::with_capacity(tasks.len() * cfg.coherence_times_s.len());
    for model in ProtocolModel::ALL {
        for (ti, &tau) in cfg.coherence_times_s.iter().enumerate() {
            for point in &grid {
                let task = tasks.iter().position(|&t| t == (model, point.index)).expect("task exists");
                let t = &tallies[task][ti];
                let n = t.trials as f64;
                let mean = t.successes as f64 / n;
                let stddev = if t.trials > 1 {
                    (mean * (1.0 - mean) * n / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                let oracle = t.oracle_sum / n;
                let sigma = t.oracle_var_sum.max(0.0).sqrt() / n;
                summary.push(SummaryRow {
                    experiment: exp,
                    model,
                    config_index: ti * grid.len() + point.index,
                    n_mem: links[0].hardware().n_memories,
                    d_km: cfg.base.geometry.bsa_offset_km,
                    p_gate: point.p_gate,
                    p_meas: point.p_meas,
                    coherence_time_s: tau,
                    samples: t.trials,
                    mean,
                    stddev,
                    stderr: stddev / n.sqrt(),
                    oracle,
                    sigma,
                    z: z_score(mean, oracle, sigma),
                });
            }
        }
    }

    let mut result = ExperimentResult {
        config: cfg.clone(),
        summary,
        replicas: Vec::new(),
        ratios: Vec::new(),
        diagnostics: Vec::new(),
    };
    result.diagnostics = swapping_diagnostics(&result);
    Ok(result)
}

fn swapping_diagnostics(result: &ExperimentResult) -> Vec<Diagnostic> {
    let cfg = &result.config;
    let mut out = vec![z_diagnostic(&result.summary)];
    let row = |model, tau: f64, p_gate: f64, p_meas: f64| {
        result.summary.iter().find(|r| {
            r.model == model && r.coherence_time_s == tau && r.p_gate == p_gate && r.p_meas == p_meas
        })
    };

    if let Some(&tau) = cfg.coherence_times_s.iter().find(|t| t.is_infinite()) {
        for model in ProtocolModel::ALL {
            if let Some(r) = row(model, tau, 0.0, 0.0) {
                out.push(Diagnostic {
                    name: format!("noiseless_anchor_{model}"),
                    passed: r.mean == 1.0,
                    detail: format!("mean fidelity {} at p_g = p_m = 0, tau = inf", r.mean),
                });
            }
        }
    }

    let mut taus: Vec<f64> = cfg.coherence_times_s.clone();
    taus.sort_by(f64::total_cmp);
    for w in taus.windows(2) {
        let (short, long) = (w[0], w[1]);
        for model in ProtocolModel::ALL {
            let mut strict = 0;
            let mut oracle_strict = 0;
            let mut total = 0;
            let mut offenders = Vec::new();
            for &p_gate in &cfg.p_gate {
                for &p_meas in &cfg.p_meas {
                    let (Some(a), Some(b)) = (row(model, short, p_gate, p_meas), row(model, long, p_gate, p_meas)) else {
                        continue;
                    };
                    total += 1;
                    if a.mean < b.mean {
                        strict += 1;
                    } else {
                        offenders.push(format!("({p_gate},{p_meas})"));
                    }
                    if a.oracle < b.oracle {
                        oracle_strict += 1;
                    }
                }
            }
            out.push(Diagnostic {
                name: format!("tau_ordering_{model}_{short}_{long}"),
                passed: strict == total,
                detail: format!(
                    "mean strictly lower at tau = {short} s on {strict}/{total} points (oracle: {oracle_strict}/{total}){}",
                    if offenders.is_empty() {
                        String::new()
                    } else {
                        format!("; not lower at {}", offenders.join(" "))
                    }
                ),
            });
        }
    }
    out
}
