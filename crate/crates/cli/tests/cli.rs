use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn randlen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randlen"))
        .args(args)
        .output()
        .unwrap()
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

fn shrink(src: &Path, dest: &Path, n: u64, reps: usize) {
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(src).unwrap()).unwrap();
    cfg["n"] = n.into();
    cfg["replications"] = reps.into();
    std::fs::write(dest, cfg.to_string()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn regime_prints_label_and_chi0() {
    let out = randlen(&[
        "regime", "--alpha", "4", "--chi", "0.2", "--k1", "1", "--k", "9",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "LengthDominant\nchi0 = 0.8\n");
    let out = randlen(&["regime", "--alpha", "5", "--chi", "0.2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "Balanced\n");
}

#[test]
fn verify_passes_on_a_shipped_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = randlen(&[
        "verify",
        "T2",
        "--config",
        s(&scenario("t2")),
        "--out",
        s(&report),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["theorem_id"], "T2");
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    let report = dir.path().join("r.json");
    shrink(&scenario("t2"), &cfg, 1000, 20);
    let out = randlen(&["verify", "T2", "--config", s(&cfg), "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report.exists());

    let out = randlen(&["verify", "T3.1", "--config", s(&cfg), "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d ≥ 2"));

    let out = randlen(&[
        "verify",
        "T2",
        "--config",
        "/nonexistent.json",
        "--out",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_override_changes_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    shrink(&scenario("t2"), &cfg, 50, 2);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    assert!(randlen(&["simulate", "--config", s(&cfg), "--out", s(&a)])
        .status
        .success());
    assert!(randlen(&[
        "--seed",
        "9",
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&b)
    ])
    .status
    .success());
    assert!(randlen(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&c),
        "--seed",
        "9"
    ])
    .status
    .success());
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_ne!(read(&a), read(&b));
    assert_eq!(read(&b), read(&c));
    assert_eq!(read(&a).lines().count(), 101);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    let paths = dir.path().join("p.csv");
    shrink(&scenario("t2"), &cfg, 2000, 20);
    assert!(
        randlen(&["simulate", "--config", s(&cfg), "--out", s(&paths)])
            .status
            .success()
    );
    for (method, extra) in [
        ("hill", vec!["--k-order", "200", "--column", "y_sum"]),
        ("theta-def", vec!["--u", "2000"]),
        ("theta-intervals", vec!["--u", "200"]),
        ("theta-blocks", vec!["--u", "200", "--block", "50"]),
    ] {
        let out_file = dir.path().join(format!("{method}.json"));
        let mut args = vec![
            "estimate",
            method,
            "--input",
            s(&paths),
            "--out",
            s(&out_file),
        ];
        args.extend(extra);
        let out = randlen(&args);
        assert!(
            out.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
        assert_eq!(json["method"], method);
        let point = json["point"].as_f64().unwrap();
        assert!(point > 0.0 && point.is_finite(), "{method}: {point}");
    }
    let out = randlen(&[
        "estimate",
        "theta-def",
        "--input",
        s(&paths),
        "--out",
        s(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
