use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{AggregatePath, WeightVector};
use crate::columns::{sample_array, ArrayModel};
use crate::error::{invalid, Result};
use crate::estimators::{
    default_k_order, definition_theta_report, exceedance_times, hill_from_top,
    intervals_theta_from_gaps, tau_from_counts, BlockCounts, EstimateReport, GapSums, TopValues,
};
use crate::harness::config::ExperimentConfig;
use crate::lengths::{sample_d, sample_lengths, LengthLaw, RandomD};
use crate::regvar::{length_scale, threshold_u};
use crate::seeds::{derive_seed, tag};

/// Replications processed per parallel batch.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub parallel: bool,
    pub keep_paths: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            parallel: true,
            keep_paths: false,
        }
    }
}

/// Aggregate sequences tracked by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `Y*`, the weighted maximum.
    YStar,
    /// `Y`, the weighted sum.
    YSum,
    /// `-Y**`, the negated minimum over the negative part.
    NegYStar2,
    /// `-Y`.
    NegYSum,
}

impl SeriesKind {
    pub fn label(&self) -> &'static str {
        match self {
            SeriesKind::YStar => "y_star",
            SeriesKind::YSum => "y_sum",
            SeriesKind::NegYStar2 => "neg_y_star2",
            SeriesKind::NegYSum => "neg_y_sum",
        }
    }
}

/// Pooled statistics of one series at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub label: String,
    pub u: f64,
    /// Replications with `M_n ≤ u`.
    pub replications_below: usize,
    pub exceedances: u64,
    pub gaps: GapSums,
    pub blocks: BlockCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub kind: SeriesKind,
    pub thresholds: Vec<ThresholdStats>,
    /// Largest pooled values in decreasing order.
    pub top: Vec<f64>,
    pub pooled: usize,
    /// `M_n` of each replication.
    pub maxima: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResults {
    pub n: usize,
    pub replications: usize,
    pub l_n: usize,
    pub l_n_neg: Option<usize>,
    pub k_order: usize,
    pub block: usize,
    pub series: Vec<SeriesStats>,
    /// Rows whose term count exceeded the materialised width.
    pub cap_hits: u64,
    pub rows: u64,
    pub max_width: usize,
    pub sandwich_checked: u64,
    pub sandwich_violations: u64,
    pub d_draws: Vec<usize>,
    pub d_neg_draws: Vec<usize>,
    #[serde(skip)]
    pub paths: Vec<AggregatePath>,
}

impl ScenarioResults {
    pub fn cap_frequency(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.cap_hits as f64 / self.rows as f64
        }
    }

    pub fn series(&self, kind: SeriesKind) -> Result<&SeriesStats> {
        self.series
            .iter()
            .find(|s| s.kind == kind)
            .ok_or_else(|| invalid(format!("series {} was not tracked", kind.label())))
    }

    fn at(&self, kind: SeriesKind, label: &str) -> Result<&ThresholdStats> {
        self.series(kind)?
            .thresholds
            .iter()
            .find(|t| t.label == label)
            .ok_or_else(|| {
                invalid(format!(
                    "threshold {label} was not tracked for {}",
                    kind.label()
                ))
            })
    }

    /// `τ̂ = n · (pooled exceedance fraction)`.
    pub fn tau(&self, kind: SeriesKind, label: &str) -> Result<f64> {
        let t = self.at(kind, label)?;
        tau_from_counts(self.n, t.exceedances, (self.n * self.replications) as u64)
    }

    pub fn theta_def(&self, kind: SeriesKind, label: &str) -> Result<EstimateReport> {
        let t = self.at(kind, label)?;
        definition_theta_report(
            t.replications_below,
            self.replications,
            self.tau(kind, label)?,
            t.u,
        )
    }

    pub fn theta_intervals(&self, kind: SeriesKind, label: &str) -> Result<EstimateReport> {
        let t = self.at(kind, label)?;
        let mut r = intervals_theta_from_gaps(&t.gaps)?;
        r.tuning.insert("u".into(), t.u);
        Ok(r)
    }

    pub fn theta_blocks(&self, kind: SeriesKind, label: &str) -> Result<EstimateReport> {
        let t = self.at(kind, label)?;
        let mut r = EstimateReport {
            method: "theta-blocks".into(),
            point: t.blocks.theta()?,
            stderr: None,
            tuning: Default::default(),
            sample_size: self.n * self.replications,
            clipped: false,
        };
        r.tuning.insert("u".into(), t.u);
        r.tuning.insert("block".into(), self.block as f64);
        Ok(r)
    }

    pub fn hill(&self, kind: SeriesKind) -> Result<EstimateReport> {
        let s = self.series(kind)?;
        hill_from_top(&s.top, self.k_order, s.pooled)
    }
}

struct Side<'a> {
    array: &'a ArrayModel,
    weights: &'a WeightVector,
    l_n: usize,
    law: Option<LengthLaw>,
    random_d: Option<&'a RandomD>,
    negative: bool,
}

impl Side<'_> {
    fn tags(&self) -> (u64, u64, u64) {
        if self.negative {
            (tag::ARRAY_NEG, tag::LENGTHS_NEG, tag::RANDOM_D_NEG)
        } else {
            (tag::ARRAY, tag::LENGTHS, tag::RANDOM_D)
        }
    }
}

struct SideRun {
    /// Max over terms (positive side) or min over terms (negative side).
    extreme: Vec<f64>,
    sum: Vec<f64>,
    lead: Vec<f64>,
    terms: Vec<usize>,
    d: usize,
    cap_hits: u64,
    width: usize,
}

fn simulate_side(side: &Side, n: usize, width_cap: usize, seed: u64) -> Result<SideRun> {
    let (t_array, t_len, t_d) = side.tags();
    let d = match side.random_d {
        Some(rd) => sample_d(rd, derive_seed(seed, &[t_d]))?,
        None => side.array.profile.d,
    };
    let model = if d == side.array.profile.d {
        Cow::Borrowed(side.array)
    } else {
        Cow::Owned(side.array.with_d(d)?)
    };
    let counts = match &side.law {
        Some(law) => sample_lengths(law, n, derive_seed(seed, &[t_len]))?,
        None => vec![side.l_n; n],
    };
    let widest = counts.iter().copied().max().unwrap_or(1);
    let width = side.l_n.max(widest).min(width_cap).max(d);
    let mut cap_hits = 0;
    let terms: Vec<usize> = counts
        .iter()
        .map(|&c| {
            if c > width {
                cap_hits += 1;
                width
            } else {
                c
            }
        })
        .collect();

    let a = sample_array(&model, n, width, derive_seed(seed, &[t_array]))?;
    let z = side.weights.extended(width);
    let mut extreme = vec![
        if side.negative {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        n
    ];
    let mut sum = vec![0.0; n];
    for (i, col) in a.columns().into_iter().enumerate() {
        let zi = z.0[i];
        for (t, &y) in col.iter().enumerate() {
            if i < terms[t] {
                let v = zi * y;
                extreme[t] = if side.negative {
                    extreme[t].min(v)
                } else {
                    extreme[t].max(v)
                };
                sum[t] += v;
            }
        }
    }
    let lead: Vec<f64> = a.column(0).iter().map(|&y| z.0[0] * y).collect();
    Ok(SideRun {
        extreme,
        sum,
        lead,
        terms,
        d,
        cap_hits,
        width,
    })
}

struct Plan<'a> {
    n: usize,
    seed: u64,
    width_cap: usize,
    pos: Side<'a>,
    neg: Option<Side<'a>>,
    /// Tracked series with their `(label, threshold)` pairs.
    tracked: Vec<(SeriesKind, Vec<(String, f64)>)>,
    top_capacity: usize,
    block: usize,
    keep_paths: bool,
}

struct SeriesRep {
    max: f64,
    below: Vec<bool>,
    exceed: Vec<u64>,
    gaps: Vec<GapSums>,
    blocks: Vec<BlockCounts>,
    top: TopValues,
}

struct ReplicationOutcome {
    series: Vec<SeriesRep>,
    cap_hits: u64,
    width: usize,
    sandwich_checked: u64,
    sandwich_violations: u64,
    d: usize,
    d_neg: Option<usize>,
    path: Option<AggregatePath>,
}

fn run_replication(plan: &Plan, r: usize) -> Result<ReplicationOutcome> {
    let seed = derive_seed(plan.seed, &[tag::REPLICATION, r as u64]);
    let pos = simulate_side(&plan.pos, plan.n, plan.width_cap, seed)?;
    let neg = match &plan.neg {
        Some(side) => Some(simulate_side(side, plan.n, plan.width_cap, seed)?),
        None => None,
    };

    let mut cap_hits = pos.cap_hits;
    let mut width = pos.width;
    let (y_star, y_star2, y_sum, n_terms) = match &neg {
        None => (
            pos.extreme.clone(),
            Vec::new(),
            pos.sum.clone(),
            pos.terms.clone(),
        ),
        Some(ng) => {
            cap_hits += ng.cap_hits;
            width = width.max(ng.width);
            let star = pos
                .extreme
                .iter()
                .zip(&ng.extreme)
                .map(|(a, b)| a.max(*b))
                .collect();
            let star2 = pos
                .extreme
                .iter()
                .zip(&ng.extreme)
                .map(|(a, b)| a.min(*b))
                .collect();
            let sum = pos.sum.iter().zip(&ng.sum).map(|(a, b)| a + b).collect();
            let terms = pos
                .terms
                .iter()
                .zip(&ng.terms)
                .map(|(a, b)| a + b)
                .collect();
            (star, star2, sum, terms)
        }
    };

    let (sandwich_checked, sandwich_violations) = if neg.is_none() {
        let bad = (0..plan.n)
            .filter(|&t| !(pos.lead[t] <= y_star[t] && y_star[t] <= y_sum[t]))
            .count();
        (plan.n as u64, bad as u64)
    } else {
        (0, 0)
    };

    let mut series = Vec::with_capacity(plan.tracked.len());
    for (kind, thresholds) in &plan.tracked {
        let negated;
        let values: &[f64] = match kind {
            SeriesKind::YStar => &y_star,
            SeriesKind::YSum => &y_sum,
            SeriesKind::NegYStar2 => {
                negated = y_star2.iter().map(|v| -v).collect::<Vec<_>>();
                &negated
            }
            SeriesKind::NegYSum => {
                negated = y_sum.iter().map(|v| -v).collect::<Vec<_>>();
                &negated
            }
        };
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut rep = SeriesRep {
            max,
            below: Vec::new(),
            exceed: Vec::new(),
            gaps: Vec::new(),
            blocks: Vec::new(),
            top: TopValues::new(plan.top_capacity),
        };
        for (_, u) in thresholds {
            let times = exceedance_times(values, *u);
            rep.below.push(max <= *u);
            rep.exceed.push(times.len() as u64);
            rep.gaps.push(GapSums::from_times(&times));
            rep.blocks.push(BlockCounts::from_times(&times, plan.block));
        }
        rep.top.extend_from_slice(values);
        series.push(rep);
    }

    let path = plan.keep_paths.then(|| AggregatePath {
        y_star: y_star.clone(),
        y_sum: y_sum.clone(),
        y_star2: y_star2.clone(),
        lead: if neg.is_none() {
            pos.lead.clone()
        } else {
            Vec::new()
        },
        n_terms,
    });

    Ok(ReplicationOutcome {
        series,
        cap_hits,
        width,
        sandwich_checked,
        sandwich_violations,
        d: pos.d,
        d_neg: neg.as_ref().map(|s| s.d),
        path,
    })
}

/// Thresholds `(u, u_neg)` of a configuration at sample size `n`.
pub fn thresholds(config: &ExperimentConfig, n: u64) -> Result<(f64, Option<f64>)> {
    let u = threshold_u(n, &config.threshold)?;
    let u_neg = match config.negative_threshold() {
        Some(rule) => Some(threshold_u(n, &rule)?),
        None => None,
    };
    Ok((u, u_neg))
}

/// Simulate every replication of a configuration and pool the statistics.
pub fn run_scenario(config: &ExperimentConfig, opts: &RunOptions) -> Result<ScenarioResults> {
    config.validate()?;
    let n = usize::try_from(config.n).map_err(|_| invalid("n does not fit in memory"))?;
    let reps = config.replications;
    let (u, u_neg) = thresholds(config, config.n)?;

    let (pos, neg, l_n, l_n_neg) = match &config.signed {
        None => {
            let l_n = length_scale(config.n, config.chi)?;
            let side = Side {
                array: &config.array,
                weights: &config.weights,
                l_n,
                law: config.length_law,
                random_d: config.random_d.as_ref(),
                negative: false,
            };
            (side, None, l_n, None)
        }
        Some(s) => {
            let l_pos = length_scale(config.n, s.chi_pos)?;
            let l_neg = length_scale(config.n, s.chi_neg)?;
            let pos = Side {
                array: &config.array,
                weights: &config.weights,
                l_n: l_pos,
                law: Some(s.length_law_pos()),
                random_d: config.random_d.as_ref(),
                negative: false,
            };
            let neg = Side {
                array: &s.negative_array,
                weights: &s.negative_weights,
                l_n: l_neg,
                law: Some(s.length_law_neg()),
                random_d: s.negative_random_d.as_ref(),
                negative: true,
            };
            (pos, Some(neg), l_pos, Some(l_neg))
        }
    };

    let tracked = match u_neg {
        None => vec![
            (SeriesKind::YStar, vec![("u".to_owned(), u)]),
            (SeriesKind::YSum, vec![("u".to_owned(), u)]),
        ],
        Some(un) => {
            let both = vec![("u_pos".to_owned(), u), ("u_neg".to_owned(), un)];
            vec![
                (SeriesKind::YStar, both.clone()),
                (SeriesKind::YSum, both.clone()),
                (SeriesKind::NegYStar2, both.clone()),
                (SeriesKind::NegYSum, both),
            ]
        }
    };

    let pooled = n.saturating_mul(reps);
    let k_order = default_k_order(pooled);
    let block = ((n as f64).sqrt().floor() as usize).max(1);
    let plan = Plan {
        n,
        seed: config.seed,
        width_cap: config.width_cap,
        pos,
        neg,
        tracked,
        top_capacity: k_order + 1,
        block,
        keep_paths: opts.keep_paths,
    };

    let mut acc: Vec<(SeriesStats, TopValues)> = plan
        .tracked
        .iter()
        .map(|(kind, ths)| {
            let stats = SeriesStats {
                kind: *kind,
                thresholds: ths
                    .iter()
                    .map(|(label, u)| ThresholdStats {
                        label: label.clone(),
                        u: *u,
                        replications_below: 0,
                        exceedances: 0,
                        gaps: GapSums::default(),
                        blocks: BlockCounts::default(),
                    })
                    .collect(),
                top: Vec::new(),
                pooled: 0,
                maxima: Vec::with_capacity(reps),
            };
            (stats, TopValues::new(plan.top_capacity))
        })
        .collect();
    let mut results = ScenarioResults {
        n,
        replications: reps,
        l_n,
        l_n_neg,
        k_order,
        block,
        series: Vec::new(),
        cap_hits: 0,
        rows: 0,
        max_width: 0,
        sandwich_checked: 0,
        sandwich_violations: 0,
        d_draws: Vec::with_capacity(reps),
        d_neg_draws: Vec::new(),
        paths: Vec::new(),
    };

    let indices: Vec<usize> = (0..reps).collect();
    for chunk in indices.chunks(CHUNK) {
        let outcomes: Vec<Result<ReplicationOutcome>> = if opts.parallel {
            chunk
                .par_iter()
                .map(|&r| run_replication(&plan, r))
                .collect()
        } else {
            chunk.iter().map(|&r| run_replication(&plan, r)).collect()
        };
        for outcome in outcomes {
            let o = outcome?;
            results.cap_hits += o.cap_hits;
            results.rows += (n * if plan.neg.is_some() { 2 } else { 1 }) as u64;
            results.max_width = results.max_width.max(o.width);
            results.sandwich_checked += o.sandwich_checked;
            results.sandwich_violations += o.sandwich_violations;
            results.d_draws.push(o.d);
            if let Some(dn) = o.d_neg {
                results.d_neg_draws.push(dn);
            }
            for ((stats, top), rep) in acc.iter_mut().zip(o.series) {
                stats.maxima.push(rep.max);
                stats.pooled += n;
                for (j, th) in stats.thresholds.iter_mut().enumerate() {
                    th.replications_below += rep.below[j] as usize;
                    th.exceedances += rep.exceed[j];
                    th.gaps.merge(&rep.gaps[j]);
                    th.blocks.merge(&rep.blocks[j]);
                }
                top.merge(rep.top);
            }
            if let Some(p) = o.path {
                results.paths.push(p);
            }
        }
    }
    results.series = acc
        .into_iter()
        .map(|(mut stats, top)| {
            stats.top = top.into_sorted();
            stats
        })
        .collect();
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn config(n: u64, reps: usize) -> ExperimentConfig {
        let text = format!(
            r#"{{
            "seed": 11, "n": {n}, "replications": {reps}, "chi": 0.2,
            "array": {{
                "profile": {{"d": 1, "k1": 1.0, "k": 3.0}},
                "minimal_columns": [{{"marginal": {{"k": 1.0, "ell": {{"constant": {{"c": 1.0}}}}}},
                                     "dynamics": {{"armax": {{"phi": 0.5}}}}, "margin_family": "frechet"}}],
                "bulk_column_template": {{"marginal": {{"k": 3.0, "ell": {{"constant": {{"c": 1.0}}}}}},
                                         "dynamics": "iid", "margin_family": "frechet"}},
                "coupling": "independent_columns"
            }},
            "weights": [1.0, 0.5],
            "threshold": {{"y": 1.0, "k1": 1.0, "ell1": {{"constant": {{"c": 1.0}}}}}}
        }}"#
        );
        ExperimentConfig::from_json_str(&text).unwrap()
    }

    #[test]
    fn single_row_maximum_is_the_row_value() {
        let opts = RunOptions {
            keep_paths: true,
            ..Default::default()
        };
        let res = run_scenario(&config(1, 1), &opts).unwrap();
        assert_eq!(res.l_n, 1);
        let p = &res.paths[0];
        assert_eq!(p.len(), 1);
        assert_eq!(
            res.series(SeriesKind::YStar).unwrap().maxima,
            vec![p.y_star[0]]
        );
        assert_eq!(p.y_star[0], p.y_sum[0]);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let cfg = config(2000, 70);
        let a = run_scenario(&cfg, &RunOptions::default()).unwrap();
        let b = run_scenario(
            &cfg,
            &RunOptions {
                parallel: false,
                keep_paths: false,
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sandwich_violations, 0);
        assert_eq!(a.sandwich_checked, 2000 * 70);
        assert_eq!(
            a.series(SeriesKind::YStar).unwrap().top.len(),
            a.k_order + 1
        );
    }

    #[test]
    fn paths_match_direct_aggregation() {
        use crate::aggregate::{weighted_max, weighted_sum};
        let cfg = config(50, 2);
        let opts = RunOptions {
            keep_paths: true,
            parallel: false,
        };
        let res = run_scenario(&cfg, &opts).unwrap();
        let seed = derive_seed(cfg.seed, &[tag::REPLICATION, 1]);
        let a = sample_array(&cfg.array, 50, res.l_n, derive_seed(seed, &[tag::ARRAY])).unwrap();
        let z = cfg.weights.extended(res.l_n);
        for t in 0..50 {
            let row: Vec<f64> = a.row(t).to_vec();
            assert_eq!(
                res.paths[1].y_star[t],
                weighted_max(&z, &row, res.l_n).unwrap()
            );
            assert_eq!(
                res.paths[1].y_sum[t],
                weighted_sum(&z, &row, res.l_n).unwrap()
            );
        }
    }
}
