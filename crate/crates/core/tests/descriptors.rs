use std::fs;

use dyadic_walsh::experiment::{run, ExperimentDescriptor};

const ALL_KINDS: &str = r#"{
  "experiments": [
    {"kind": "kernel_dump", "name": "d5", "kernel": "dirichlet", "param": 5, "resolution": 6},
    {"kind": "kernel_dump", "name": "v_log", "kernel": "mean", "param": 9, "family": "norlund_log", "resolution": 6},
    {"kind": "decompose_check", "name": "dec", "family": "norlund_log", "n": {"count": 20}, "seed": 4},
    {"kind": "ratio_scan", "name": "ratio", "weights": "matrix:cesaro:inv_log2",
     "cone": {"variant": "kappa", "kappa": 0.5}, "orders": [10, 20], "candidate": 1.0, "max_deviation": 0.05},
    {"kind": "divergence_search", "name": "div", "weights": "ones",
     "cone": {"variant": "omega", "rule": "sqrt"}, "orders": [9, 30], "sampler": {"random": 3, "seed": 9}, "expect": "sequence"},
    {"kind": "omega_sum_sweep", "name": "t3", "weights": "t3:2", "orders": [16, 40], "sqrt_floor": 0.5},
    {"kind": "witness_sweep", "name": "wit", "etas": [2, 3, 4], "check_monotone": true},
    {"kind": "prop2", "name": "p2", "q": "harmonic"},
    {"kind": "prop2", "name": "p2seq", "sequence": [1, 2, 3, 5, 8], "max_gap": 3},
    {"kind": "vp_dichotomy", "name": "vp", "max_order": 10, "bound": 10.0},
    {"kind": "mean_convergence", "name": "conv", "family": "fejer", "resolution": 8,
     "function": {"type": "indicator", "intervals": [[1, 0], [3, 5]]}, "n": {"count": 5}, "seed": 2}
  ]
}"#;

#[test]
fn round_trip_is_identity() {
    let d = ExperimentDescriptor::from_json(ALL_KINDS).unwrap();
    assert_eq!(d.experiments.len(), 11);
    let text = d.to_json().unwrap();
    let back = ExperimentDescriptor::from_json(&text).unwrap();
    assert_eq!(back, d);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn reruns_are_byte_identical() {
    let d = ExperimentDescriptor::from_json(ALL_KINDS).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run(&d, a.path()).unwrap();
    let rb = run(&d, b.path()).unwrap();
    assert_eq!(ra.exit_code(), 0, "{:#?}", ra.items);
    assert_eq!(rb.exit_code(), 0);
    for item in &ra.items {
        for path in &item.artifacts {
            let name = path.file_name().unwrap();
            let x = fs::read(path).unwrap();
            let y = fs::read(b.path().join(name)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, y, "{}", name.to_string_lossy());
        }
    }
}

#[test]
fn artifacts_have_expected_columns() {
    let d = ExperimentDescriptor::from_json(ALL_KINDS).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(&d, dir.path()).unwrap();
    let header = |stem: &str| {
        let text = fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap();
        text.lines().next().unwrap().to_string()
    };
    assert_eq!(header("d5"), "index,value");
    assert_eq!(header("div"), "n,order,variation_sum,omega_sum,gamma,lme_value");
    assert!(header("wit").starts_with("a,eta,weights,l1_norm,e_a_measure,min_on_Ea"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dec.json")).unwrap()).unwrap();
    assert_eq!(sidecar["rng"], "ChaCha8");
    assert_eq!(sidecar["seed"], 4);
    assert_eq!(sidecar["experiment"]["kind"], "decompose_check");
    let grid = dyadic_walsh::DyadicGrid::load_csv(dir.path().join("d5.csv")).unwrap();
    assert_eq!(grid, dyadic_walsh::walsh::dirichlet(5, 6).unwrap());
}

#[test]
fn declared_checks_fail_with_item_outcome() {
    let d = ExperimentDescriptor::from_json(
        r#"{"kind": "decompose_check", "family": "fejer", "n": [5, 77], "tolerance": 0.0}"#,
    );
    // A zero tolerance is legal; the check itself may or may not hold exactly.
    let d = d.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&d, dir.path()).unwrap();
    assert!(out.exit_code() == 0 || out.items[0].check_failure.as_ref().unwrap().contains("n = "));

    let d = ExperimentDescriptor::from_json(
        r#"{"kind": "divergence_search", "weights": "harmonic", "cone": {"variant": "kappa", "kappa": 0.5}, "orders": [8, 20], "expect": "sequence"}"#,
    )
    .unwrap();
    let out = run(&d, dir.path()).unwrap();
    assert_eq!(out.exit_code(), 2);
    assert!(out.items[0].check_failure.as_ref().unwrap().contains("Refusal"));
}
