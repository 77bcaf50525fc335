//! Plain-text configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! section.key = value
//! ```
//!
//! Blank lines are ignored, keys are case-sensitive, a key may appear only
//! once, and unknown keys are errors. Lists are comma-separated. `inf` is
//! accepted wherever a coherence time is expected.
//!
//! For the timing experiments a scalar `geometry.d_km` or
//! `hardware.n_memories` without the matching sweep key becomes a
//! one-point sweep. For the swapping experiment `geometry.L_km` is the
//! end-to-end span and `geometry.d_km` the repeater position.
//!
//! | key | meaning |
//! |-----|---------|
//! | `geometry.L_km`, `geometry.d_km`, `geometry.c_km_s`, `geometry.attenuation_db_km` | link geometry |
//! | `hardware.n_memories`, `hardware.t_sep_s`, `hardware.t_wait_multiplier`, `hardware.p_bsm`, `hardware.repetition_rate_hz`, `hardware.round_processing_delay_s` | node hardware |
//! | `noise.p_gate`, `noise.p_meas`, `noise.coherence_time_s`, `noise.slice_duration_s` | error model |
//! | `noise.pauli_weights` | `uniform` or 15 weights in `IX, IY, IZ, XI, ..., ZZ` order |
//! | `request.n_bell` | requested pairs |
//! | `handshake.negotiation_trips`, `handshake.herald_trips` | per-pair round split, in units of `L / c` |
//! | `kernel.max_events` | event watchdog |
//! | `experiment.id` | 1, 2 or 3; selects the defaults the other keys override |
//! | `experiment.replicas`, `experiment.trials`, `experiment.seed` | run size and seed |
//! | `experiment.n_mem`, `experiment.d_km` | timing sweep lists |
//! | `experiment.p_gate`, `experiment.p_meas`, `experiment.coherence_time_s` | swapping sweep lists |
//! | `experiment.p_succ_override` | fault injection: simulated success probability |

use std::collections::HashSet;
use std::path::Path;

use crate::noise::PauliWeights;
use crate::xval::{ExperimentConfig, ExperimentId};

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: {key}: {message}")]
    Value { line: usize, key: String, message: String },
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigFileError {
        ConfigFileError::Value {
            line: self.line,
            key: self.key.to_string(),
            message: message.into(),
        }
    }

    fn f64(&self) -> Result<f64, ConfigFileError> {
        parse_f64(self.value).ok_or_else(|| self.err(format!("`{}` is not a number", self.value)))
    }

    fn u32(&self) -> Result<u32, ConfigFileError> {
        self.value
            .parse()
            .map_err(|_| self.err(format!("`{}` is not a non-negative integer", self.value)))
    }

    fn u64(&self) -> Result<u64, ConfigFileError> {
        self.value
            .parse()
            .map_err(|_| self.err(format!("`{}` is not a non-negative integer", self.value)))
    }

    fn list<T>(&self, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigFileError> {
        self.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                parse(item).ok_or_else(|| self.err(format!("bad list item `{item}`")))
            })
            .collect()
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn entries(text: &str) -> Result<Vec<Entry<'_>>, ConfigFileError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigFileError::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigFileError::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        if !seen.insert(key) {
            return Err(ConfigFileError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        out.push(Entry { line, key, value });
    }
    Ok(out)
}

/// Parses a configuration. The experiment defaults come from
/// `experiment.id` if present, else from `default_id`; every other key
/// overrides them. Invariants are not checked here (see
/// [`ExperimentConfig::check`]).
pub fn parse_config(text: &str, default_id: ExperimentId) -> Result<ExperimentConfig, ConfigFileError> {
    let entries = entries(text)?;
    let id = match entries.iter().find(|e| e.key == "experiment.id") {
        Some(e) => e.value.parse().map_err(|m: String| e.err(m))?,
        None => default_id,
    };
    let mut cfg = ExperimentConfig::table1(id);
    for e in &entries {
        apply(&mut cfg, e)?;
    }
    if id.is_timing() {
        let has = |key: &str| entries.iter().any(|e| e.key == key);
        if has("geometry.d_km") && !has("experiment.d_km") {
            cfg.d_km = vec![cfg.base.geometry.bsa_offset_km];
        }
        if has("hardware.n_memories") && !has("experiment.n_mem") {
            cfg.n_mem = vec![cfg.base.hardware.n_memories];
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path, default_id: ExperimentId) -> Result<ExperimentConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, default_id)
}

fn apply(cfg: &mut ExperimentConfig, e: &Entry<'_>) -> Result<(), ConfigFileError> {
    let b = &mut cfg.base;
    match e.key {
        "geometry.L_km" => b.geometry.node_distance_km = e.f64()?,
        "geometry.d_km" => b.geometry.bsa_offset_km = e.f64()?,
        "geometry.c_km_s" => b.geometry.light_speed_km_s = e.f64()?,
        "geometry.attenuation_db_km" => b.geometry.attenuation_db_km = e.f64()?,
        "hardware.n_memories" => b.hardware.n_memories = e.u32()?,
        "hardware.t_sep_s" => b.hardware.t_sep_s = e.f64()?,
        "hardware.t_wait_multiplier" => b.hardware.t_wait_multiplier = e.u32()?,
        "hardware.p_bsm" => b.hardware.p_bsm = e.f64()?,
        "hardware.repetition_rate_hz" => b.hardware.repetition_rate_hz = e.f64()?,
        "hardware.round_processing_delay_s" => b.hardware.round_processing_delay_s = e.f64()?,
        "noise.p_gate" => b.noise.p_gate = e.f64()?,
        "noise.p_meas" => b.noise.p_meas = e.f64()?,
        "noise.coherence_time_s" => b.noise.coherence_time_s = e.f64()?,
        "noise.slice_duration_s" => b.noise.slice_duration_s = e.f64()?,
        "noise.pauli_weights" => {
            b.noise.pauli_weights = if e.value == "uniform" {
                PauliWeights::uniform()
            } else {
                let w = e.list(parse_f64)?;
                let w: [f64; 15] = w
                    .try_into()
                    .map_err(|w: Vec<f64>| e.err(format!("expected 15 weights, got {}", w.len())))?;
                PauliWeights(w)
            }
        }
        "request.n_bell" => b.request.n_bell = e.u32()?,
        "handshake.negotiation_trips" => b.handshake.negotiation_trips = e.f64()?,
        "handshake.herald_trips" => b.handshake.herald_trips = e.f64()?,
        "kernel.max_events" => b.max_events = e.u64()?,
        "experiment.id" => {}
        "experiment.replicas" => cfg.replicas = e.u32()?,
        "experiment.trials" => cfg.trials = e.u32()?,
        "experiment.seed" => cfg.seed = e.u64()?,
        "experiment.n_mem" => cfg.n_mem = e.list(|s| s.parse().ok())?,
        "experiment.d_km" => cfg.d_km = e.list(parse_f64)?,
        "experiment.p_gate" => cfg.p_gate = e.list(parse_f64)?,
        "experiment.p_meas" => cfg.p_meas = e.list(parse_f64)?,
        "experiment.coherence_time_s" => cfg.coherence_times_s = e.list(parse_f64)?,
        "experiment.p_succ_override" => cfg.p_succ_override = Some(e.f64()?),
        _ => {
            return Err(ConfigFileError::UnknownKey {
                line: e.line,
                key: e.key.to_string(),
            })
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("# nothing\n\n", ExperimentId::AsymmetricLink).unwrap();
        assert_eq!(cfg, ExperimentConfig::table1(ExperimentId::AsymmetricLink));
    }

    #[test]
    fn keys_override_defaults() {
        let text = "
            experiment.id = 3
            geometry.L_km = 30   # end-to-end
            noise.slice_duration_s = 1e-7
            experiment.coherence_time_s = 0.018, inf
            experiment.p_gate = 0, 0.5
            experiment.seed = 7
            hardware.round_processing_delay_s = 2e-6
        ";
        let cfg = parse_config(text, ExperimentId::SymmetricLink).unwrap();
        assert_eq!(cfg.id, ExperimentId::Swapping);
        assert_eq!(cfg.base.geometry.node_distance_km, 30.0);
        assert_eq!(cfg.base.noise.slice_duration_s, 1e-7);
        assert_eq!(cfg.coherence_times_s, vec![0.018, f64::INFINITY]);
        assert_eq!(cfg.p_gate, vec![0.0, 0.5]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.base.hardware.round_processing_delay_s, 2e-6);
        assert_eq!(cfg.trials, 10_000);
    }

    #[test]
    fn pauli_weights_need_fifteen_values() {
        let one_hot = format!("noise.pauli_weights = 1{}", ", 0".repeat(14));
        let cfg = parse_config(&one_hot, ExperimentId::Swapping).unwrap();
        assert_eq!(cfg.base.noise.pauli_weights.0[0], 1.0);
        let err = parse_config("noise.pauli_weights = 0.5, 0.5", ExperimentId::Swapping).unwrap_err();
        assert!(err.to_string().contains("expected 15 weights"), "{err}");
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = parse_config("geometry.L_km = 20\ngeometry.foo = 1", ExperimentId::SymmetricLink).unwrap_err();
        assert!(matches!(e, ConfigFileError::UnknownKey { line: 2, .. }));
        let e = parse_config("geometry.L_km = twenty", ExperimentId::SymmetricLink).unwrap_err();
        assert_eq!(e.to_string(), "line 1: geometry.L_km: `twenty` is not a number");
        let e = parse_config("request.n_bell = 1\nrequest.n_bell = 2", ExperimentId::SymmetricLink).unwrap_err();
        assert!(matches!(e, ConfigFileError::DuplicateKey { line: 2, .. }));
        let e = parse_config("just words", ExperimentId::SymmetricLink).unwrap_err();
        assert!(matches!(e, ConfigFileError::Syntax { line: 1, .. }));
        assert!(parse_config("experiment.id = 9", ExperimentId::SymmetricLink).is_err());
    }

    #[test]
    fn out_of_range_values_parse_but_fail_validation() {
        let cfg = parse_config("geometry.L_km = 20\ngeometry.d_km = 25", ExperimentId::SymmetricLink).unwrap();
        let err = cfg.check().unwrap_err();
        assert!(err.fields().any(|f| f == "geometry.d_km"));
        assert!(err.to_string().contains("d ≤ L violated"));
    }

    #[test]
    fn scalar_keys_become_one_point_sweeps() {
        let cfg = parse_config("geometry.d_km = 15
hardware.n_memories = 4", ExperimentId::AsymmetricLink).unwrap();
        assert_eq!(cfg.d_km, vec![15.0]);
        assert_eq!(cfg.n_mem, vec![4]);
        let cfg = parse_config("geometry.d_km = 15
experiment.d_km = 12, 13", ExperimentId::AsymmetricLink).unwrap();
        assert_eq!(cfg.d_km, vec![12.0, 13.0]);
    }
}
