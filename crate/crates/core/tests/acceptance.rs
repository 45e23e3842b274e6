//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use randlen_core::estimators::{
    blocks_theta, definition_theta_report, hill, intervals_theta, tau_from_counts,
};
use randlen_core::harness::{
    run_scenario, verify_theorem, ExperimentConfig, RunOptions, TheoremId, VerificationReport,
};
use randlen_core::regvar::{check_t5_conditions, ThresholdRule};
use randlen_core::seeds::derive_seed;
use randlen_core::{
    chi_upper, classify_regime, length_scale, sample_column, theta_weighted, threshold_u,
    ColumnDynamics, ColumnModel, Regime, SlowlyVarying,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scenario(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn criterion_1() -> Outcome {
    let r = hill(&[1.0, 2.0, 4.0, 8.0], 3).map_err(|e| e.to_string())?;
    let want = 1.0 / (2.0 * 2f64.ln());
    ensure(
        (r.point - want).abs() <= 1e-12,
        format!("hill = {}", r.point),
    )?;

    let path_with_gaps = |gaps: &[usize], len: usize| {
        let mut p = vec![0.0; len];
        let mut t = 0;
        p[0] = 5.0;
        for g in gaps {
            t += g;
            p[t] = 5.0;
        }
        p
    };
    let a = intervals_theta(&path_with_gaps(&[9, 1, 1, 1], 20), 1.0).map_err(|e| e.to_string())?;
    ensure(
        (a.point - 0.5714).abs() <= 1e-4,
        format!("intervals (9,1,1,1) = {}", a.point),
    )?;
    let b = intervals_theta(&path_with_gaps(&[2, 2, 2], 10), 1.0).map_err(|e| e.to_string())?;
    ensure(
        b.point == 1.0 && b.clipped,
        format!("intervals (2,2,2) = {}", b.point),
    )?;

    let mut p = vec![0.0; 12];
    for t in [0, 1, 8] {
        p[t] = 5.0;
    }
    let c = blocks_theta(&p, 1.0, 4).map_err(|e| e.to_string())?;
    ensure(c.point == 2.0 / 3.0, format!("blocks = {}", c.point))?;
    Ok(format!(
        "hill {:.6}, intervals {:.4} and {}, blocks {:.6}",
        r.point, a.point, b.point, c.point
    ))
}

fn criterion_2() -> Outcome {
    let e = |x: randlen_core::Error| x.to_string();
    let tw = |t: &[f64], z: &[f64]| theta_weighted(t, z, 1.0);
    ensure(
        tw(&[0.6, 0.6], &[1.0, 7.0]).map_err(e)? == 0.6,
        "theta_weighted equal thetas",
    )?;
    ensure(
        tw(&[0.5, 1.0], &[1.0, 1.0]).map_err(e)? == 0.75,
        "theta_weighted (0.5, 1), z = (1, 1)",
    )?;
    ensure(
        tw(&[0.5, 1.0], &[2.0, 1.0]).map_err(e)? == 2.0 / 3.0,
        "theta_weighted z = (2, 1)",
    )?;

    ensure(
        chi_upper(1.0, 2.0).map_err(e)? == 1.0 / 3.0,
        "chi_upper(1, 2)",
    )?;
    ensure(chi_upper(1.0, 9.0).map_err(e)? == 0.8, "chi_upper(1, 9)")?;
    ensure(chi_upper(2.0, 2.0).is_err(), "chi_upper(2, 2) must fail")?;

    let rule = |y: f64, k1: f64, c: f64| ThresholdRule {
        y,
        k1,
        ell1: SlowlyVarying::Constant { c },
    };
    ensure(
        threshold_u(1, &rule(1.0, 1.0, 1.0)).map_err(e)? == 1.0,
        "threshold_u n = 1",
    )?;
    ensure(
        threshold_u(100, &rule(2.0, 2.0, 1.0)).map_err(e)? == 20.0,
        "threshold_u n = 100, k1 = 2",
    )?;
    ensure(
        threshold_u(100, &rule(1.0, 1.0, 3.0)).map_err(e)? == 300.0,
        "threshold_u ell = 3",
    )?;

    ensure(
        classify_regime(4.0, 0.3).map_err(e)? == Regime::TermDominant,
        "regime (4, 0.3)",
    )?;
    ensure(
        classify_regime(2.0, 0.3).map_err(e)? == Regime::LengthDominant,
        "regime (2, 0.3)",
    )?;
    ensure(
        classify_regime(5.0, 0.2).map_err(e)? == Regime::Balanced,
        "regime (5, 0.2)",
    )?;

    let c = check_t5_conditions(4.0, 0.2, 1.0, 9.0, 0.5).map_err(e)?;
    ensure(
        c.tail_condition && c.extremal_condition,
        "conditions at δ* = 0.5",
    )?;
    let c = check_t5_conditions(4.0, 0.2, 1.0, 9.0, 0.6).map_err(e)?;
    ensure(
        !c.tail_condition && c.extremal_condition,
        "conditions at δ* = 0.6",
    )?;
    let c = check_t5_conditions(1.0, 0.3, 1.0, 2.0, 0.1).map_err(e)?;
    ensure(
        !c.tail_condition && !c.extremal_condition,
        "conditions at α = 1",
    )?;

    ensure(
        length_scale(1000, 1.0 / 3.0).map_err(e)? == 9,
        "length_scale(1000, 1/3)",
    )?;
    ensure(
        length_scale(100_000, 0.2).map_err(e)? == 10,
        "length_scale(1e5, 0.2)",
    )?;
    Ok("all examples reproduced".into())
}

/// Median Hill estimate and pooled definition estimate over sub-blocks of each path.
fn generator_oracle(
    model: &ColumnModel,
    seed: u64,
    hill_k: Option<usize>,
) -> Result<(Option<f64>, f64, f64), String> {
    const N: usize = 100_000;
    const REPS: usize = 200;
    const SUB: usize = 10_000;
    let u = SUB as f64 / 2.0;
    let mut hills = Vec::new();
    let (mut below, mut blocks, mut exceed) = (0usize, 0usize, 0u64);
    for r in 0..REPS {
        let path =
            sample_column(model, N, derive_seed(seed, &[r as u64])).map_err(|e| e.to_string())?;
        if let Some(k) = hill_k {
            hills.push(hill(&path, k).map_err(|e| e.to_string())?.point);
        }
        for chunk in path.chunks(SUB) {
            blocks += 1;
            below += chunk.iter().all(|&v| v <= u) as usize;
            exceed += chunk.iter().filter(|&&v| v > u).count() as u64;
        }
    }
    let tau = tau_from_counts(SUB, exceed, (N * REPS) as u64).map_err(|e| e.to_string())?;
    let rep = definition_theta_report(below, blocks, tau, u).map_err(|e| e.to_string())?;
    hills.sort_by(f64::total_cmp);
    let median = (!hills.is_empty()).then(|| hills[hills.len() / 2]);
    Ok((median, rep.point, rep.stderr.unwrap_or(f64::NAN)))
}

fn criterion_3() -> Outcome {
    let armax = ColumnModel::frechet(1.0, ColumnDynamics::Armax { phi: 0.5 });
    let (median, theta, se) = generator_oracle(&armax, 31, Some(1000))?;
    let median = median.expect("hill requested");
    ensure(
        (median - 1.0).abs() <= 0.1,
        format!("ARMAX Hill median {median}"),
    )?;
    ensure(
        (theta - 0.5).abs() <= 0.05,
        format!("ARMAX definition θ {theta} (se {se:.4})"),
    )?;
    let mm = ColumnModel::frechet(1.0, ColumnDynamics::MovingMax { m: 4 });
    let (_, theta_mm, se_mm) = generator_oracle(&mm, 32, None)?;
    ensure(
        (theta_mm - 0.25).abs() <= 0.05,
        format!("MovingMax definition θ {theta_mm} (se {se_mm:.4})"),
    )?;
    Ok(format!(
        "ARMAX Hill median {median:.4}, θ {theta:.4} ± {se:.4}; MovingMax θ {theta_mm:.4} ± {se_mm:.4}"
    ))
}

fn summarize(report: &VerificationReport) -> String {
    report
        .checks
        .iter()
        .map(|c| {
            let est = c.estimate.map_or("n/a".into(), |v| format!("{v:.4}"));
            format!(
                "{} {est} vs {:.4}{}",
                c.name,
                c.predicted,
                if c.pass { "" } else { " FAILED" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn verify(
    id: TheoremId,
    name: &str,
    required: &[&str],
    reports: &mut Vec<(TheoremId, VerificationReport)>,
) -> Outcome {
    let cfg = scenario(name);
    let report =
        verify_theorem(id, &cfg, &RunOptions::default()).map_err(|e| format!("{id}: {e}"))?;
    let summary = summarize(&report);
    reports.push((id, report.clone()));
    for name in required {
        let c = report
            .check(name)
            .ok_or_else(|| format!("missing check {name}; {summary}"))?;
        ensure(c.pass, format!("{name} failed: {summary}"))?;
    }
    ensure(report.pass, summary.clone())?;
    Ok(summary)
}

fn criterion_10(reports: &[(TheoremId, VerificationReport)]) -> Outcome {
    let mut checked = 0;
    for (id, report) in reports {
        ensure(
            report.sandwich_violations == 0,
            format!("{id}: {} sandwich violations", report.sandwich_violations),
        )?;
        let serial = verify_theorem(
            *id,
            &report.config,
            &RunOptions {
                parallel: false,
                keep_paths: false,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(
            serial.without_runtime() == report.without_runtime(),
            format!("{id}: parallel and serial reports differ"),
        )?;

        let small = ExperimentConfig {
            replications: 20,
            ..report.config.clone()
        };
        let res = run_scenario(
            &small,
            &RunOptions {
                parallel: true,
                keep_paths: true,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(
            res.sandwich_violations == 0,
            format!("{id}: sandwich violated in path run"),
        )?;
        for p in &res.paths {
            ensure(
                p.sandwich_violations().is_empty(),
                format!("{id}: path sandwich audit failed"),
            )?;
            checked += p.len();
        }
        for pick in [0usize, 1] {
            let pooled: Vec<f64> = res
                .paths
                .iter()
                .flat_map(|p| {
                    if pick == 0 {
                        p.y_star.iter()
                    } else {
                        p.y_sum.iter()
                    }
                })
                .copied()
                .filter(|v| *v > 0.0)
                .collect();
            let k = pooled.len() / 100;
            let a = hill(&pooled, k).map_err(|e| e.to_string())?.point;
            let scaled: Vec<f64> = pooled.iter().map(|v| 7.0 * v).collect();
            let b = hill(&scaled, k).map_err(|e| e.to_string())?.point;
            ensure(
                (a / b - 1.0).abs() <= 1e-12,
                format!("{id}: Hill changed under scaling by 7 ({a} vs {b})"),
            )?;
        }
    }
    Ok(format!(
        "{} scenarios deterministic, {checked} path rows audited, Hill scale-invariant",
        reports.len()
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, what: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (
                false,
                format!("{d}; over time budget of {}s", limit.as_secs()),
            ),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "[{}] criterion {n}: {what} ({:.2}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    };
    let secs = Duration::from_secs;
    let mut reports = Vec::new();

    report(1, "estimator unit suite", secs(1), &mut criterion_1);
    report(2, "formula suite", secs(1), &mut criterion_2);
    report(3, "generator oracle", secs(120), &mut criterion_3);
    report(4, "T2 scenario", secs(300), &mut || {
        verify(
            TheoremId::T2,
            "t2",
            &[
                "y_sum.tail_index",
                "y_star.extremal_index@u",
                "y_sum.extremal_index@u",
            ],
            &mut reports,
        )
    });
    report(5, "T3.1 weighted extremal index", secs(300), &mut || {
        verify(
            TheoremId::T3Item1,
            "t3_1",
            &[
                "y_star.extremal_index@u",
                "y_star.extremal_index@u.away_from_theta1",
                "y_star.tau@u",
            ],
            &mut reports,
        )
    });
    report(6, "T3.2 cumulative sums", secs(300), &mut || {
        verify(
            TheoremId::T3Item2,
            "t3_2",
            &["y_star.extremal_index@u"],
            &mut reports,
        )
    });
    report(7, "T4 random d", secs(300), &mut || {
        verify(
            TheoremId::T4,
            "t4",
            &[
                "y_star.tail_index",
                "y_sum.tail_index",
                "y_star.extremal_index@u",
            ],
            &mut reports,
        )
    });
    report(8, "C3 divergence", secs(300), &mut || {
        verify(
            TheoremId::C3,
            "c3",
            &["y_star.tau_ratio@u_neg", "y_star.extremal_index@u_pos"],
            &mut reports,
        )
    });
    report(9, "T5i length-dominant regime", secs(300), &mut || {
        verify(
            TheoremId::T5i,
            "t5i",
            &[
                "y_sum.tail_index",
                "y_star.extremal_index@u",
                "y_sum.extremal_index@u",
            ],
            &mut reports,
        )
    });
    report(10, "pathwise invariant sweep", secs(120), &mut || {
        criterion_10(&reports)
    });

    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
