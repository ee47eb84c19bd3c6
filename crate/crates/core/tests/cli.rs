use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dyadic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("DYADIC_RESOLUTION_CAP")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn kernel_dump_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = dyadic(dir.path(), &["--resolution", "3", "kernel", "--kind", "dirichlet", "--param", "3"]);
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    assert_eq!(text, "index,value\n0,3.0\n1,3.0\n2,1.0\n3,1.0\n4,1.0\n5,1.0\n6,-1.0\n7,-1.0\n");
}

#[test]
fn cap_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = dyadic(dir.path(), &["--cap", "8", "--resolution", "9", "kernel", "--kind", "walsh", "--param", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    let o = Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(["--resolution", "9", "--out-dir"])
        .arg(dir.path())
        .args(["kernel", "--kind", "walsh", "--param", "1"])
        .env("DYADIC_RESOLUTION_CAP", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"kind": "decompose_check", "family": "norlund_log", "n": {"count": 20}, "seed": 1}"#).unwrap();
    let o = dyadic(dir.path(), &["run", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert_eq!(stdout(&o).lines().count(), 1);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "decompose_check", "family": "norlund_log", "n": [3], "extra": 1}"#).unwrap();
    let o = dyadic(dir.path(), &["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra"));

    let failing = dir.path().join("failing.json");
    fs::write(
        &failing,
        r#"{"kind": "vp_dichotomy", "lambdas": ["floor_sqrt"], "max_order": 12, "bound": 2.0}"#,
    )
    .unwrap();
    let o = dyadic(dir.path(), &["run", failing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("CHECK FAILED"));
}

#[test]
fn subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["decompose-check", "--family", "cesaro:0.5", "--count", "5"],
        vec!["ratio-scan", "--weights", "harmonic", "--cone", "kappa:0.5", "--lo", "8", "--hi", "12"],
        vec!["divergence-search", "--weights", "ones", "--cone", "omega:sqrt", "--lo", "9", "--hi", "20"],
        vec!["witness", "--eta", "2,3"],
        vec!["prop2", "--q", "ones", "--kmax", "20"],
        vec!["weaknorm"],
    ] {
        let o = dyadic(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {o:?}");
    }
    let o = dyadic(dir.path(), &["--resolution", "8", "weaknorm"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["doob_weak_ratio"].as_f64().unwrap() <= 1.0 + 1e-12);
}
