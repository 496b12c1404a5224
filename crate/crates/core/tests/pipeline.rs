use dce_core::bench::{run_experiment, summarize, ExperimentConfig};

fn mean(rows: &[dce_core::bench::SummaryRow], est: &str, snr: f64) -> f64 {
    rows.iter()
        .find(|r| r.estimator == est && r.snr_db == snr && r.metric == "nmse")
        .unwrap_or_else(|| panic!("{est} at {snr}"))
        .mean
}

#[test]
fn small_array_sweep_orders_estimators() {
    let cfg = ExperimentConfig::from_json(
        r#"{
        "channel": {"kind": "kronecker"},
        "grid": {"m": 4, "n_f": 64, "n": 64},
        "noise": {"snr_db": [0, 10]},
        "estimators": [
            {"id": "ls"},
            {"id": "mmse_genie"},
            {"id": "mmse_sample", "params": {"training": 200}},
            {"id": "dce", "params": {"width": 8, "epochs": 400}}
        ],
        "run": {"trials": 3, "seed": 2}
    }"#,
    )
    .unwrap();
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), 4 * 2 * 3);
    assert!(records.iter().all(|r| r.error.is_none()));
    let rows = summarize(&records);
    for snr in [0.0, 10.0] {
        let ls = mean(&rows, "ls", snr);
        assert!(mean(&rows, "mmse_genie", snr) < ls);
        assert!(mean(&rows, "mmse_genie", snr) <= mean(&rows, "mmse_sample", snr) * 1.05);
        assert!(mean(&rows, "dce", snr) < ls, "dce {} ls {ls}", mean(&rows, "dce", snr));
    }
    // LS error scales with the noise
    assert!((mean(&rows, "ls", 0.0) / mean(&rows, "ls", 10.0) - 10.0).abs() < 2.0);
}

#[test]
fn contamination_raises_the_ls_floor() {
    let base = r#"{
        "channel": {"kind": "tdl"},
        "grid": {"m": 2, "n_f": 64, "n": 64},
        "noise": {"snr_db": [30]},
        CONT
        "estimators": [{"id": "ls"}],
        "run": {"trials": 20, "seed": 3}
    }"#;
    let clean = ExperimentConfig::from_json(&base.replace("CONT", "")).unwrap();
    let dirty = ExperimentConfig::from_json(&base.replace(
        "CONT",
        r#""contamination": {"kind": "random_res", "fraction": 0.5, "sir_db": 0},"#,
    ))
    .unwrap();
    let m = |c: &ExperimentConfig| {
        let r = run_experiment(c).unwrap();
        r.iter().map(|x| x.value).sum::<f64>() / r.len() as f64
    };
    let (a, b) = (m(&clean), m(&dirty));
    // half the pilot REs carry an equal-power interferer
    assert!(b > 100.0 * a, "clean {a} contaminated {b}");
}
