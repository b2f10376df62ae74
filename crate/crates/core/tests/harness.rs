use olla_core::harness::{
    self, read_traces, ExperimentConfig, HarnessError, BLER_CDF_FILE, REPORT_FILE, TRACES_FILE,
    UE_METRICS_FILE,
};

const SMALL: &str = r#"
master_seed = 7
num_ues = 6
duration_subframes = 2000
write_traces = true

[exploration]
epsilon = 0.05
delta = 0.05
big_l = 3

[ue_profiles]
mean_sinr_db = [2.0, 12.0]
cqi_bias = [0, 2]
ar_coefficient = 0.95
sinr_std_db = 2.0
target_bler = 0.1

[[policies]]
label = "mab"
kind = "final"

[[policies]]
label = "pbs"
kind = "pbs"

[[policies]]
label = "clustering"
kind = "clustering"

[[policies]]
label = "none"
kind = "no_olla"
"#;

fn small(overrides: &[(&str, &str)]) -> ExperimentConfig {
    let o: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::from_toml_with_overrides(SMALL, &o).unwrap()
}

#[test]
fn no_olla_single_ue_keeps_zero_offset() {
    let text = r#"
master_seed = 1
num_ues = 1
duration_subframes = 100
write_traces = false

[exploration]
epsilon = 0.05
delta = 0.05
big_l = 3

[ue_profiles]
mean_sinr_db = [5.0, 5.0]
cqi_bias = [0, 0]
ar_coefficient = 0.9
sinr_std_db = 1.0
target_bler = 0.1

[[policies]]
label = "none"
kind = "no_olla"
"#;
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    let run = harness::run_experiment(&c).unwrap();
    assert_eq!(run.report.ues.len(), 1);
    let u = &run.report.ues[0];
    assert_eq!(u.mean_offset(), 0.0);
    assert_eq!(u.transmissions(), 100);
    assert_eq!(u.exploration_samples, 0);
    assert!(run.traces.is_empty());
}

#[test]
fn same_seed_same_report_and_new_seed_differs() {
    let a = harness::run_experiment(&small(&[])).unwrap();
    let b = harness::run_experiment(&small(&[])).unwrap();
    assert_eq!(a, b);
    let c = harness::run_experiment(&small(&[("master_seed", "8")])).unwrap();
    assert_ne!(a.report, c.report);
}

#[test]
fn report_order_is_canonical() {
    let run = harness::run_experiment(&small(&[])).unwrap();
    let keys: Vec<(String, u32)> = run
        .report
        .ues
        .iter()
        .map(|u| (u.policy.clone(), u.ue_id))
        .collect();
    let mut expected = Vec::new();
    for p in ["mab", "pbs", "clustering", "none"] {
        for u in 0..6 {
            expected.push((p.to_string(), u));
        }
    }
    assert_eq!(keys, expected);
}

#[test]
fn metrics_add_up() {
    let c = small(&[]);
    let run = harness::run_experiment(&c).unwrap();
    let table = c.table().unwrap();
    for (u, t) in run.report.ues.iter().zip(&run.traces) {
        assert_eq!((u.policy.as_str(), u.ue_id), (t.policy.as_str(), t.ue_id));
        assert_eq!(u.transmissions(), c.duration_subframes);
        let bits: u64 = t.records.iter().map(|r| u64::from(r.bits_delivered)).sum();
        let nacks = t.records.iter().filter(|r| !r.ack).count() as u64;
        assert_eq!((u.bits, u.nacks), (bits, nacks));
        // a NACK delivers nothing, an ACK delivers the full rate
        for r in &t.records {
            let expect = if r.ack { table.rate(r.mcs_used) } else { 0 };
            assert_eq!(r.bits_delivered, expect);
        }
        let mbps = bits as f64 / c.duration_subframes as f64 * 1e-3;
        assert!((u.throughput_mbps() - mbps).abs() < 1e-12);
    }
}

#[test]
fn binary_search_exploration_stays_within_budget() {
    let c = small(&[]);
    let run = harness::run_experiment(&c).unwrap();
    let p = c.params_for(0.1).unwrap();
    let budget = olla_core::bounds::required_samples(&p)
        * u64::from(olla_core::bounds::max_distinct_arms(p.big_l()));
    let mab: u64 = run
        .report
        .for_policy("mab")
        .map(|u| u.exploration_samples)
        .sum();
    let pbs: u64 = run
        .report
        .for_policy("pbs")
        .map(|u| u.exploration_samples)
        .sum();
    assert!(mab <= pbs);
    for u in run.report.for_policy("pbs") {
        assert!(u.exploration_samples > 0 && u.exploration_samples <= budget);
    }
}

#[test]
fn cdfs_are_monotone() {
    let run = harness::run_experiment(&small(&[])).unwrap();
    for p in &run.report.policies {
        for cdf in [
            run.report.bler_cdf(p).unwrap(),
            run.report.throughput_cdf(p).unwrap(),
        ] {
            assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
            assert!((cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn round_trip_through_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (run, table, out) = harness::run_to_dir(&small(&[]), Some(dir.path())).unwrap();
    assert_eq!(out, dir.path());
    for f in [TRACES_FILE, UE_METRICS_FILE, REPORT_FILE, BLER_CDF_FILE] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let (report, rendered) = harness::render_report(dir.path()).unwrap();
    assert_eq!(report, run.report);
    assert_eq!(rendered, table);
    assert_eq!(rendered.rows.len(), 4);
    let csv = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "policy,avg_throughput_mbps,avg_bler,avg_offset,avg_exploration_samples"
    );

    let rows = read_traces(&dir.path().join(TRACES_FILE)).unwrap();
    let stored: usize = run.traces.iter().map(|t| t.records.len()).sum();
    assert_eq!(rows.len(), stored);
}

#[test]
fn report_on_empty_dir_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let err = harness::render_report(dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::MissingOutputs { .. }));
    assert!(err.to_string().contains(&dir.path().display().to_string()));
}

#[test]
fn too_short_duration_is_rejected() {
    let o = vec![("duration_subframes".to_string(), "500".to_string())];
    let err = ExperimentConfig::from_toml_with_overrides(SMALL, &o).unwrap_err();
    match err {
        HarnessError::DurationTooShort {
            minimum, duration, ..
        } => {
            assert_eq!(duration, 500);
            assert!(minimum > 500);
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn bad_configs_are_config_errors() {
    for (k, v) in [
        ("policies.0.kind", "\"greedy\""),
        ("num_ues", "0"),
        ("ue_profiles.mean_sinr_db", "[10.0, 2.0]"),
        ("exploration.epsilon", "0.5"),
    ] {
        let o = vec![(k.to_string(), v.to_string())];
        let err = ExperimentConfig::from_toml_with_overrides(SMALL, &o)
            .and_then(|c| harness::run_experiment(&c).map(|_| ()))
            .unwrap_err();
        assert_eq!(err.kind(), "config", "{k}={v}: {err}");
    }
}
