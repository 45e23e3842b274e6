//! Scenario assembly, verification runs and file I/O.

pub mod config;
pub mod export;
pub mod scenario;
pub mod verify;

use crate::aggregate::AggregatePath;
use crate::error::{invalid, Result};
use crate::estimators::{
    default_k_order, definition_theta_report, exceedance_times, hill, intervals_theta_from_gaps,
    tau_from_counts, BlockCounts, EstimateReport, GapSums,
};

pub use config::{ExperimentConfig, SignedConfig};
pub use export::{export_paths, import_paths};
pub use scenario::{run_scenario, RunOptions, ScenarioResults, SeriesKind};
pub use verify::{verify_theorem, Predicted, TheoremId, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hill,
    ThetaDef,
    ThetaIntervals,
    ThetaBlocks,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hill" => Ok(Method::Hill),
            "theta-def" => Ok(Method::ThetaDef),
            "theta-intervals" => Ok(Method::ThetaIntervals),
            "theta-blocks" => Ok(Method::ThetaBlocks),
            other => Err(invalid(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Run an estimator on one column of imported paths, pooling replicates.
///
/// Path-based estimators pool their sufficient statistics over replicates,
/// so gaps never straddle two replicates.
pub fn estimate_from_paths(
    method: Method,
    paths: &[AggregatePath],
    column: SeriesKind,
    k_order: Option<usize>,
    u: Option<f64>,
    block: Option<usize>,
) -> Result<EstimateReport> {
    let series: Vec<&[f64]> = paths
        .iter()
        .map(|p| match column {
            SeriesKind::YStar => Ok(p.y_star.as_slice()),
            SeriesKind::YSum => Ok(p.y_sum.as_slice()),
            _ => Err(invalid("only y_star and y_sum are stored in path files")),
        })
        .collect::<Result<_>>()?;
    let n = series.first().map(|s| s.len()).unwrap_or(0);
    if n == 0 || series.iter().any(|s| s.len() != n) {
        return Err(invalid("replicates must be nonempty and of equal length"));
    }
    let need_u = || u.ok_or_else(|| invalid("this estimator needs a threshold (--u)"));
    match method {
        Method::Hill => {
            let pooled: Vec<f64> = series.iter().flat_map(|s| s.iter().copied()).collect();
            hill(
                &pooled,
                k_order.unwrap_or_else(|| default_k_order(pooled.len())),
            )
        }
        Method::ThetaDef => {
            let u = need_u()?;
            let below = series.iter().filter(|s| s.iter().all(|&v| v <= u)).count();
            let exceed: usize = series
                .iter()
                .map(|s| s.iter().filter(|&&v| v > u).count())
                .sum();
            let tau = tau_from_counts(n, exceed as u64, (n * series.len()) as u64)?;
            definition_theta_report(below, series.len(), tau, u)
        }
        Method::ThetaIntervals => {
            let u = need_u()?;
            let mut gaps = GapSums::default();
            for s in &series {
                gaps.merge(&GapSums::from_times(&exceedance_times(s, u)));
            }
            let mut r = intervals_theta_from_gaps(&gaps)?;
            r.tuning.insert("u".into(), u);
            r.sample_size = n * series.len();
            Ok(r)
        }
        Method::ThetaBlocks => {
            let u = need_u()?;
            let b = block.unwrap_or(((n as f64).sqrt() as usize).max(1));
            if b == 0 {
                return Err(invalid("block length must be at least 1"));
            }
            let mut counts = BlockCounts::default();
            for s in &series {
                counts.merge(&BlockCounts::from_times(&exceedance_times(s, u), b));
            }
            let mut r = EstimateReport {
                method: "theta-blocks".into(),
                point: counts.theta()?,
                stderr: None,
                tuning: Default::default(),
                sample_size: n * series.len(),
                clipped: false,
            };
            r.tuning.insert("u".into(), u);
            r.tuning.insert("block".into(), b as f64);
            Ok(r)
        }
    }
}
