//! Cross-validation verdicts between two protocol models.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::linkgen::ProtocolModel;

use super::run::SummaryRow;
use super::XvalError;

/// z-score beyond which two estimates are considered different.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Both models match their own oracle and each other.
    Agree,
    /// Both models match their own oracle but not each other: the
    /// difference is one the oracles already predict.
    ExplainedOffset,
    /// At least one model misses its own oracle.
    Disagree,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Agree => "AGREE",
            Verdict::ExplainedOffset => "EXPLAINED_OFFSET",
            Verdict::Disagree => "DISAGREE",
        })
    }
}

/// JSON has no infinities; write them as strings instead of `null`.
fn json_f64<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValRow {
    pub experiment: u8,
    pub config_index: usize,
    pub n_mem: u32,
    pub d_km: f64,
    pub p_gate: f64,
    pub p_meas: f64,
    #[serde(serialize_with = "json_f64")]
    pub coherence_time_s: f64,
    pub model_a: ProtocolModel,
    pub model_b: ProtocolModel,
    pub mean_a: f64,
    pub mean_b: f64,
    pub oracle_a: f64,
    pub oracle_b: f64,
    /// `mean_b / mean_a`.
    #[serde(serialize_with = "json_f64")]
    pub ratio: f64,
    #[serde(serialize_with = "json_f64")]
    pub z_a: f64,
    #[serde(serialize_with = "json_f64")]
    pub z_b: f64,
    /// Two-sample z of `mean_b - mean_a`.
    #[serde(serialize_with = "json_f64")]
    pub z_ab: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    pub experiment: u8,
    pub model_a: ProtocolModel,
    pub model_b: ProtocolModel,
    pub rows: Vec<CrossValRow>,
}

fn verdict(z_a: f64, z_b: f64, z_ab: f64) -> Verdict {
    let ok = |z: f64| z.abs() <= Z_THRESHOLD;
    match (ok(z_a) && ok(z_b), ok(z_ab)) {
        (true, true) => Verdict::Agree,
        (true, false) => Verdict::ExplainedOffset,
        (false, _) => Verdict::Disagree,
    }
}

fn single_model(rows: &[SummaryRow], side: &str) -> Result<ProtocolModel, XvalError> {
    let first = rows
        .first()
        .ok_or_else(|| XvalError::SweepMismatch(format!("table {side} is empty")))?;
    if let Some(other) = rows.iter().find(|r| r.model != first.model) {
        return Err(XvalError::SweepMismatch(format!(
            "table {side} mixes models {} and {}",
            first.model, other.model
        )));
    }
    Ok(first.model)
}

/// Pairs two single-model tables configuration by configuration and
/// assigns verdicts. Both tables must cover exactly the same sweep.
pub fn compare(a: &[SummaryRow], b: &[SummaryRow]) -> Result<CrossValReport, XvalError> {
    let model_a = single_model(a, "A")?;
    let model_b = single_model(b, "B")?;
    if a.len() != b.len() {
        return Err(XvalError::SweepMismatch(format!(
            "table A has {} configurations, table B has {}",
            a.len(),
            b.len()
        )));
    }
    let mut a: Vec<&SummaryRow> = a.iter().collect();
    let mut b: Vec<&SummaryRow> = b.iter().collect();
    a.sort_by_key(|r| r.config_index);
    b.sort_by_key(|r| r.config_index);

    let mut rows = Vec::with_capacity(a.len());
    for (ra, rb) in a.iter().zip(&b) {
        if ra.key() != rb.key() {
            return Err(XvalError::SweepMismatch(format!(
                "configuration {} differs between tables (A: n_mem={} d={} p_g={} p_m={} tau={}; B: n_mem={} d={} p_g={} p_m={} tau={})",
                ra.config_index,
                ra.n_mem,
                ra.d_km,
                ra.p_gate,
                ra.p_meas,
                ra.coherence_time_s,
                rb.n_mem,
                rb.d_km,
                rb.p_gate,
                rb.p_meas,
                rb.coherence_time_s
            )));
        }
        let combined = ra.sigma.hypot(rb.sigma);
        let z_ab = super::stats::z_score(rb.mean, ra.mean, combined);
        rows.push(CrossValRow {
            experiment: ra.experiment,
            config_index: ra.config_index,
            n_mem: ra.n_mem,
            d_km: ra.d_km,
            p_gate: ra.p_gate,
            p_meas: ra.p_meas,
            coherence_time_s: ra.coherence_time_s,
            model_a,
            model_b,
            mean_a: ra.mean,
            mean_b: rb.mean,
            oracle_a: ra.oracle,
            oracle_b: rb.oracle,
            ratio: rb.mean / ra.mean,
            z_a: ra.z,
            z_b: rb.z,
            z_ab,
            verdict: verdict(ra.z, rb.z, z_ab),
        });
    }
    Ok(CrossValReport {
        experiment: a[0].experiment,
        model_a,
        model_b,
        rows,
    })
}

impl CrossValReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == v).count()
    }

    /// One JSON object per row.
    pub fn to_jsonl(&self) -> Result<Vec<u8>, XvalError> {
        let mut out = Vec::new();
        for row in &self.rows {
            serde_json::to_writer(&mut out, row)?;
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let timing = self.experiment != 3;
        let _ = writeln!(
            s,
            "cross-validation, experiment {}: A = {}, B = {}, {} configurations",
            self.experiment,
            self.model_a,
            self.model_b,
            self.rows.len()
        );
        let _ = writeln!(
            s,
            "verdicts: AGREE {}, EXPLAINED_OFFSET {}, DISAGREE {}",
            self.count(Verdict::Agree),
            self.count(Verdict::ExplainedOffset),
            self.count(Verdict::Disagree)
        );
        if timing {
            let ratios: Vec<f64> = self.rows.iter().map(|r| r.ratio).collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(
                s,
                "time ratio B/A: min {lo:.4}, max {hi:.4}, spread {:.2}% of min",
                100.0 * (hi - lo) / lo
            );
        } else if let Some(worst) = self
            .rows
            .iter()
            .max_by(|x, y| (x.mean_b - x.mean_a).abs().total_cmp(&(y.mean_b - y.mean_a).abs()))
        {
            let _ = writeln!(
                s,
                "largest fidelity delta B-A: {:+.4} at p_g={} p_m={} tau={}",
                worst.mean_b - worst.mean_a,
                worst.p_gate,
                worst.p_meas,
                worst.coherence_time_s
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>4} {:>5} {:>6} {:>5} {:>5} {:>8} {:>13} {:>13} {:>13} {:>13} {:>8} {:>7} {:>7} {:>8}  verdict",
            "cfg", "n_mem", "d_km", "p_g", "p_m", "tau_s", "mean_a", "oracle_a", "mean_b", "oracle_b", "ratio", "z_a", "z_b", "z_ab"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4} {:>5} {:>6} {:>5} {:>5} {:>8} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>8.4} {:>7.2} {:>7.2} {:>8.2}  {}",
                r.config_index,
                r.n_mem,
                r.d_km,
                r.p_gate,
                r.p_meas,
                r.coherence_time_s,
                r.mean_a,
                r.oracle_a,
                r.mean_b,
                r.oracle_b,
                r.ratio,
                r.z_a,
                r.z_b,
                r.z_ab,
                r.verdict
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: ProtocolModel, i: usize, mean: f64, oracle: f64, sigma: f64) -> SummaryRow {
        SummaryRow {
            experiment: 1,
            model,
            config_index: i,
            n_mem: 1,
            d_km: 10.0,
            p_gate: 0.0,
            p_meas: 0.0,
            coherence_time_s: f64::INFINITY,
            samples: 20,
            mean,
            stddev: sigma * 20f64.sqrt(),
            stderr: sigma,
            oracle,
            sigma,
            z: (mean - oracle) / sigma,
        }
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(0.5, -1.0, 2.9), Verdict::Agree);
        assert_eq!(verdict(0.5, -1.0, 40.0), Verdict::ExplainedOffset);
        assert_eq!(verdict(3.5, 0.0, 0.0), Verdict::Disagree);
        assert_eq!(verdict(0.0, f64::NAN, 0.0), Verdict::Disagree);
    }

    #[test]
    fn self_comparison_agrees_with_unit_ratio() {
        let a = vec![row(ProtocolModel::RoundTrain, 0, 1.01, 1.0, 0.01), row(ProtocolModel::RoundTrain, 1, 2.0, 2.0, 0.02)];
        let rep = compare(&a, &a).unwrap();
        assert!(rep.rows.iter().all(|r| r.verdict == Verdict::Agree && r.ratio == 1.0 && r.z_ab == 0.0));
    }

    #[test]
    fn offset_models_are_explained() {
        let a = vec![row(ProtocolModel::RoundTrain, 0, 0.5, 0.5, 0.003)];
        let b = vec![row(ProtocolModel::PerPairHandshake, 0, 2.0, 2.0, 0.01)];
        let rep = compare(&a, &b).unwrap();
        assert_eq!(rep.rows[0].verdict, Verdict::ExplainedOffset);
        assert_eq!(rep.rows[0].ratio, 4.0);
        assert!(rep.summary_text().contains("EXPLAINED_OFFSET 1"));
    }

    #[test]
    fn mismatched_sweeps_are_errors() {
        let a = vec![row(ProtocolModel::RoundTrain, 0, 1.0, 1.0, 0.1)];
        let mut b = vec![row(ProtocolModel::PerPairHandshake, 0, 1.0, 1.0, 0.1)];
        b[0].d_km = 11.0;
        assert!(matches!(compare(&a, &b), Err(XvalError::SweepMismatch(_))));
        assert!(matches!(compare(&a, &[]), Err(XvalError::SweepMismatch(_))));
        let mixed = vec![a[0].clone(), row(ProtocolModel::PerPairHandshake, 1, 1.0, 1.0, 0.1)];
        assert!(matches!(compare(&mixed, &mixed), Err(XvalError::SweepMismatch(_))));
    }

    #[test]
    fn jsonl_has_one_record_per_row() {
        let a = vec![row(ProtocolModel::RoundTrain, 0, 1.0, 1.0, 0.1), row(ProtocolModel::RoundTrain, 1, 1.0, 1.0, 0.1)];
        let text = String::from_utf8(compare(&a, &a).unwrap().to_jsonl().unwrap()).unwrap();
        assert_eq!(text.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["verdict"], "AGREE");
        assert_eq!(v["model_a"], "round_train");
    }
}
