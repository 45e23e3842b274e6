use std::path::PathBuf;

use randlen_core::harness::verify::{expectations, Predicted, DOES_NOT_EXIST};
use randlen_core::harness::{
    estimate_from_paths, export_paths, import_paths, run_scenario, verify_theorem,
    ExperimentConfig, Method, RunOptions, SeriesKind, TheoremId,
};
use randlen_core::Error;

fn scenario(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    ExperimentConfig::from_file(&path).unwrap()
}

fn small(name: &str, n: u64, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        n,
        replications: reps,
        ..scenario(name)
    }
}

fn keep() -> RunOptions {
    RunOptions {
        parallel: true,
        keep_paths: true,
    }
}

fn refusal(id: TheoremId, cfg: &ExperimentConfig) -> String {
    match verify_theorem(id, cfg, &RunOptions::default()) {
        Err(Error::Hypothesis(msg)) => msg,
        other => panic!("{id}: expected a refusal, got {other:?}"),
    }
}

#[test]
fn shipped_scenarios_parse_and_pass_their_gates() {
    for (name, id) in [
        ("t2", TheoremId::T2),
        ("t3_1", TheoremId::T3Item1),
        ("t3_2", TheoremId::T3Item2),
        ("t4", TheoremId::T4),
        ("c3", TheoremId::C3),
        ("t5i", TheoremId::T5i),
    ] {
        expectations(id, &scenario(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn export_round_trip_through_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("paths.csv");
    let res = run_scenario(&small("t4", 4, 3), &keep()).unwrap();
    export_paths(&res.paths, &file).unwrap();
    let text = std::fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 13);
    let back = import_paths(&file).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in res.paths.iter().zip(&back) {
        assert_eq!(a.y_star, b.y_star);
        assert_eq!(a.y_sum, b.y_sum);
        assert_eq!(a.n_terms, b.n_terms);
    }
}

#[test]
fn export_rejects_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    assert!(export_paths(&[], &dir.path().join("x.csv")).is_err());
}

#[test]
fn estimates_from_exported_paths() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("paths.csv");
    let cfg = small("t2", 2000, 40);
    let res = run_scenario(&cfg, &keep()).unwrap();
    export_paths(&res.paths, &file).unwrap();
    let paths = import_paths(&file).unwrap();
    let u = res.series(SeriesKind::YStar).unwrap().thresholds[0].u;

    let h = estimate_from_paths(
        Method::Hill,
        &paths,
        SeriesKind::YSum,
        Some(500),
        None,
        None,
    )
    .unwrap();
    assert!((h.point - 1.0).abs() < 0.2, "{}", h.point);
    let d = estimate_from_paths(
        Method::ThetaDef,
        &paths,
        SeriesKind::YStar,
        None,
        Some(u),
        None,
    )
    .unwrap();
    let direct = res.theta_def(SeriesKind::YStar, "u").unwrap();
    assert_eq!(d.point, direct.point);
    let i = estimate_from_paths(
        Method::ThetaIntervals,
        &paths,
        SeriesKind::YStar,
        None,
        Some(u),
        None,
    )
    .unwrap();
    assert_eq!(
        i.point,
        res.theta_intervals(SeriesKind::YStar, "u").unwrap().point
    );
    let b = estimate_from_paths(
        Method::ThetaBlocks,
        &paths,
        SeriesKind::YStar,
        None,
        Some(u),
        None,
    )
    .unwrap();
    assert_eq!(
        b.point,
        res.theta_blocks(SeriesKind::YStar, "u").unwrap().point
    );
    assert!(estimate_from_paths(
        Method::ThetaDef,
        &paths,
        SeriesKind::YStar,
        None,
        None,
        None
    )
    .is_err());
}

#[test]
fn reports_are_deterministic() {
    let cfg = small("t3_1", 500, 30);
    let a = verify_theorem(TheoremId::T3Item1, &cfg, &RunOptions::default()).unwrap();
    let b = verify_theorem(
        TheoremId::T3Item1,
        &cfg,
        &RunOptions {
            parallel: false,
            keep_paths: false,
        },
    )
    .unwrap();
    assert_eq!(a.without_runtime(), b.without_runtime());
    let json = serde_json::to_value(&a).unwrap();
    for key in [
        "theorem_id",
        "predicted",
        "estimated",
        "tolerances",
        "pass",
        "runtime_seconds",
        "cap_frequency",
        "config",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn t3_1_prediction_is_wired_from_ground_truth() {
    let e = expectations(TheoremId::T3Item1, &scenario("t3_1")).unwrap();
    let (_, _, pred) = e
        .theta
        .iter()
        .find(|(k, _, _)| *k == SeriesKind::YStar)
        .unwrap();
    match pred {
        Predicted::Value(v) => assert!((v - 1.9 / 3.0).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn c3_predicts_divergence_under_the_wrong_normalisation() {
    let e = expectations(TheoremId::C3, &scenario("c3")).unwrap();
    let (_, label, exponent) = e.divergence[0];
    assert_eq!(label, "u_neg");
    assert!((10f64.powf(exponent) - 10f64.sqrt()).abs() < 1e-12);
    assert!(e
        .theta
        .iter()
        .any(|(_, l, p)| *l == "u_neg" && *p == Predicted::Label(DOES_NOT_EXIST.into())));
}

#[test]
fn small_runs_are_flagged_underpowered() {
    let r = verify_theorem(
        TheoremId::T2,
        &small("t2", 1000, 50),
        &RunOptions::default(),
    )
    .unwrap();
    assert!(!r.pass);
    let c = r.check("y_star.extremal_index@u").unwrap();
    assert!(c.note.as_deref().unwrap_or("").contains("underpowered"));
}

#[test]
fn hypothesis_refusals_name_the_failed_condition() {
    let mut cfg = scenario("t2");
    cfg.chi = 0.5;
    assert!(refusal(TheoremId::T2, &cfg).contains("χ₀"));

    let mut cfg = scenario("t3_1");
    cfg.array.coupling = randlen_core::Coupling::CumulativeSums;
    assert!(refusal(TheoremId::T3Item1, &cfg).contains("independent"));

    let mut cfg = scenario("t4");
    cfg.length_law = None;
    assert!(refusal(TheoremId::T4, &cfg).contains("length_law"));

    let mut cfg = scenario("t4");
    cfg.length_law.as_mut().unwrap().alpha = 2.0;
    assert!(refusal(TheoremId::T4, &cfg).contains("αχ"));

    let mut cfg = scenario("t5i");
    cfg.delta_star = Some(0.6);
    assert!(refusal(TheoremId::T5i, &cfg).contains("δ*"));

    let cfg = scenario("t2");
    assert!(refusal(TheoremId::C3, &cfg).contains("signed"));
    assert!(refusal(TheoremId::T3Item2, &cfg).contains("d ≥ 2"));

    let cfg = scenario("c3");
    assert!(refusal(TheoremId::T2, &cfg).contains("signed"));
}

#[test]
fn invalid_configs_fail_before_sampling() {
    let text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/t2.json"),
    )
    .unwrap();
    let bad = text.replace(
        "\"replications\": 500",
        "\"replications\": 500, \"replicas\": 1",
    );
    assert!(ExperimentConfig::from_json_str(&bad).is_err());
    let bad = text.replace("\"n\": 10000", "\"n\": 0");
    assert!(ExperimentConfig::from_json_str(&bad).is_err());
}
