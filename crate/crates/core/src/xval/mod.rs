//! Experiment runners and the cross-validation comparator.
//!
//! Output files of a run into directory `dir`, experiment `N`:
//!
//! | file | content |
//! |------|---------|
//! | `expN_summary.csv` | one [`SummaryRow`] per (model, configuration) |
//! | `expN_replicas.csv` | one [`ReplicaRow`] per timing replica (timing only) |
//! | `expN_ratio.csv` | one [`RatioRow`] per timing configuration (timing only) |
//! | `expN_crossval.txt` | diagnostics plus the [`CrossValReport`] table |
//! | `expN_crossval.jsonl` | one [`CrossValRow`] per line |

mod compare;
mod config;
pub mod seeds;
mod stats;
mod run;

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

pub use compare::{compare, CrossValReport, CrossValRow, Verdict, Z_THRESHOLD};
pub use config::{ExperimentConfig, ExperimentId, DEFAULT_REPLICAS, DEFAULT_SEED, DEFAULT_TRIALS};
pub use run::{
    run_experiment, run_experiment_1, run_experiment_2, run_experiment_3, trace_first_run, Diagnostic, ExperimentResult, RatioRow,
    ReplicaRow, SummaryRow,
};
pub use stats::{mean_std, z_score};

use crate::domain::ConfigErrors;
use crate::linkgen::{LinkError, ProtocolModel};
use crate::noise::NoiseError;
use crate::oracle::OracleError;

#[derive(Debug, thiserror::Error)]
pub enum XvalError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("sweep mismatch: {0}")]
    SweepMismatch(String),
    #[error("configuration is for experiment {got}, expected {expected}")]
    WrongExperiment { expected: u8, got: u8 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn to_csv<T: serde::Serialize>(rows: &[T]) -> Result<Vec<u8>, XvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| XvalError::Csv(e.into_error().into()))
}

/// Parses a summary CSV as written by [`ExperimentResult::summary_csv`].
pub fn read_summary_csv<R: Read>(reader: R) -> Result<Vec<SummaryRow>, XvalError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()
        .map_err(XvalError::from)
}

/// Rows of one model, in file order.
pub fn select_model(rows: &[SummaryRow], model: ProtocolModel) -> Vec<SummaryRow> {
    rows.iter().filter(|r| r.model == model).cloned().collect()
}

impl ExperimentResult {
    pub fn summary_csv(&self) -> Result<Vec<u8>, XvalError> {
        to_csv(&self.summary)
    }

    pub fn replicas_csv(&self) -> Result<Vec<u8>, XvalError> {
        to_csv(&self.replicas)
    }

    pub fn ratio_csv(&self) -> Result<Vec<u8>, XvalError> {
        to_csv(&self.ratios)
    }

    /// Round-train model as A, per-pair model as B.
    pub fn cross_validate(&self) -> Result<CrossValReport, XvalError> {
        compare(
            &self.rows_for(ProtocolModel::RoundTrain),
            &self.rows_for(ProtocolModel::PerPairHandshake),
        )
    }

    pub fn report_text(&self, report: &CrossValReport) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "experiment {} (seed {})", c.id, c.seed);
        if c.id.is_timing() {
            let _ = writeln!(
                s,
                "N_Bell = {}, replicas = {}, n_mem = {:?}, d_km = {:?}",
                c.base.request.n_bell, c.replicas, c.n_mem, c.d_km
            );
        } else {
            let _ = writeln!(
                s,
                "trials = {}, p_gate = {:?}, p_meas = {:?}, tau_s = {:?}",
                c.trials, c.p_gate, c.p_meas, c.coherence_times_s
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "diagnostics:");
        for d in &self.diagnostics {
            let _ = writeln!(s, "  [{}] {}: {}", if d.passed { "ok" } else { "!!" }, d.name, d.detail);
        }
        let _ = writeln!(s);
        s.push_str(&report.summary_text());
        s
    }

    /// Writes every output file into `dir` (created if absent) and returns
    /// their paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>, XvalError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| XvalError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let n = self.config.id.number();
        let report = self.cross_validate()?;
        let mut files: Vec<(String, Vec<u8>)> = vec![(format!("exp{n}_summary.csv"), self.summary_csv()?)];
        if self.config.id.is_timing() {
            files.push((format!("exp{n}_replicas.csv"), self.replicas_csv()?));
            files.push((format!("exp{n}_ratio.csv"), self.ratio_csv()?));
        }
        files.push((format!("exp{n}_crossval.txt"), self.report_text(&report).into_bytes()));
        files.push((format!("exp{n}_crossval.jsonl"), report.to_jsonl()?));

        let mut written = Vec::with_capacity(files.len());
        for (name, bytes) in files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}
