use std::collections::HashMap;

use qnet_xval::config_file::parse_config;
use qnet_xval::xval::{compare, mean_std, read_summary_csv, run_experiment, select_model, z_score};
use qnet_xval::{ExperimentConfig, ExperimentId, ProtocolModel, Verdict};

fn quick(id: ExperimentId) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::table1(id);
    cfg.replicas = 5;
    cfg.trials = 2000;
    cfg
}

#[test]
fn sample_statistics_match_textbook_values() {
    // 2, 4, 4, 4, 5, 5, 7, 9: mean 5, sample variance 32/7
    let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
    assert!((m - 5.0).abs() < 1e-15);
    assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
    assert_eq!(z_score(1.5, 1.0, 0.25), 2.0);
}

#[test]
fn wrong_success_probability_is_caught() {
    let mut cfg = quick(ExperimentId::SymmetricLink);
    cfg.p_succ_override = Some(0.1);
    let res = run_experiment(&cfg, 0).unwrap();
    assert!(res.summary.iter().all(|r| r.z > 3.0), "simulation must look slower than the oracle");
    let report = res.cross_validate().unwrap();
    assert_eq!(report.count(Verdict::Disagree), report.rows.len());
    let own = res.diagnostics.iter().find(|d| d.name == "oracle_within_3_sigma").unwrap();
    assert!(!own.passed);
}

#[test]
fn self_comparison_shows_no_offset() {
    let res = run_experiment(&quick(ExperimentId::SymmetricLink), 0).unwrap();
    for model in ProtocolModel::ALL {
        let rows = res.rows_for(model);
        let report = compare(&rows, &rows).unwrap();
        assert!(report.rows.iter().all(|r| r.z_ab == 0.0 && r.ratio == 1.0));
        assert_eq!(report.count(Verdict::ExplainedOffset), 0);
    }
}

#[test]
fn timing_models_agree_with_their_oracles_but_not_with_each_other() {
    let res = run_experiment(&ExperimentConfig::table1(ExperimentId::SymmetricLink), 0).unwrap();
    let report = res.cross_validate().unwrap();
    assert_eq!(report.count(Verdict::ExplainedOffset), 5);
}

#[test]
fn swapping_models_agree_on_the_noiseless_gate_cut() {
    let mut cfg = quick(ExperimentId::Swapping);
    cfg.coherence_times_s = vec![f64::INFINITY];
    cfg.p_gate = vec![0.0];
    cfg.p_meas = vec![0.0, 0.1, 0.25];
    let report = run_experiment(&cfg, 0).unwrap().cross_validate().unwrap();
    assert_eq!(report.count(Verdict::Agree), 3, "{}", report.summary_text());
}

#[test]
fn per_pair_times_do_not_depend_on_bsa_position() {
    let res = run_experiment(&quick(ExperimentId::AsymmetricLink), 0).unwrap();
    let mut by_replica: HashMap<u32, Vec<u64>> = HashMap::new();
    for r in res.replicas.iter().filter(|r| r.model == ProtocolModel::PerPairHandshake) {
        by_replica.entry(r.replica).or_default().push(r.completion_ps);
    }
    assert_eq!(by_replica.len(), 5);
    for times in by_replica.values() {
        assert_eq!(times.len(), 11);
        assert!(times.windows(2).all(|w| w[0] == w[1]), "{times:?}");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    for id in ExperimentId::ALL {
        let cfg = quick(id);
        let one = run_experiment(&cfg, 1).unwrap();
        let many = run_experiment(&cfg, 3).unwrap();
        assert_eq!(one.summary_csv().unwrap(), many.summary_csv().unwrap());
        assert_eq!(one.replicas_csv().unwrap(), many.replicas_csv().unwrap());
        assert_eq!(one.ratio_csv().unwrap(), many.ratio_csv().unwrap());
    }
}

#[test]
fn different_seeds_give_different_samples() {
    let mut cfg = quick(ExperimentId::SymmetricLink);
    let a = run_experiment(&cfg, 0).unwrap();
    cfg.seed += 1;
    let b = run_experiment(&cfg, 0).unwrap();
    assert_ne!(a.replicas_csv().unwrap(), b.replicas_csv().unwrap());
}

#[test]
fn written_tables_round_trip_through_compare() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&quick(ExperimentId::AsymmetricLink), 0).unwrap();
    let files = res.write_outputs(dir.path()).unwrap();
    assert_eq!(files.len(), 5);
    let bytes = std::fs::read(dir.path().join("exp2_summary.csv")).unwrap();
    let rows = read_summary_csv(bytes.as_slice()).unwrap();
    let from_disk = compare(
        &select_model(&rows, ProtocolModel::RoundTrain),
        &select_model(&rows, ProtocolModel::PerPairHandshake),
    )
    .unwrap();
    assert_eq!(from_disk, res.cross_validate().unwrap());
}

#[test]
fn mismatched_sweeps_are_rejected() {
    let e1 = run_experiment(&quick(ExperimentId::SymmetricLink), 0).unwrap();
    let mut shifted = quick(ExperimentId::SymmetricLink);
    shifted.n_mem = vec![1, 2, 4, 8, 32];
    let e1b = run_experiment(&shifted, 0).unwrap();
    let a = e1.rows_for(ProtocolModel::RoundTrain);
    assert!(compare(&a, &e1b.rows_for(ProtocolModel::PerPairHandshake)).is_err());
    assert!(compare(&a, &a[..3]).is_err());
    assert!(compare(&e1.summary, &e1.summary).is_err(), "mixed-model tables");
    assert!(compare(&[], &[]).is_err());
}

#[test]
fn config_file_drives_a_run() {
    let cfg = parse_config(
        "experiment.id = 3\n\
         experiment.trials = 500\n\
         experiment.p_gate = 0, 0.5\n\
         experiment.p_meas = 0\n\
         experiment.coherence_time_s = inf\n",
        ExperimentId::SymmetricLink,
    )
    .unwrap();
    assert_eq!(cfg.id, ExperimentId::Swapping);
    assert_eq!(cfg.config_count(), 2);
    let res = run_experiment(&cfg, 0).unwrap();
    assert_eq!(res.summary.len(), 4);
    let noiseless = res.summary.iter().find(|r| r.p_gate == 0.0).unwrap();
    assert_eq!(noiseless.mean, 1.0);
}
