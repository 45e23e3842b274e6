//! Tail-index and extremal-index estimators.
//!
//! All estimators use the tail-index parametrisation (the Hill estimate is
//! of `k`, not of `1/k`). The path-based extremal-index estimators work
//! from sufficient statistics (gap sums, touched-block counts) so that
//! replications can be pooled with associative merges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Result of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: String,
    pub point: f64,
    /// Asymptotic standard error, when the estimator has one.
    pub stderr: Option<f64>,
    pub tuning: BTreeMap<String, f64>,
    pub sample_size: usize,
    /// The raw value fell outside `[0, 1]` and was clipped.
    #[serde(default)]
    pub clipped: bool,
}

impl EstimateReport {
    fn new(method: &str, point: f64, sample_size: usize) -> Self {
        EstimateReport {
            method: method.to_owned(),
            point,
            stderr: None,
            tuning: BTreeMap::new(),
            sample_size,
            clipped: false,
        }
    }

    fn tune(mut self, key: &str, value: f64) -> Self {
        self.tuning.insert(key.to_owned(), value);
        self
    }
}

/// `⌊n^{0.6}⌋`, capped at `n / 10` and at least one.
pub fn default_k_order(n: usize) -> usize {
    let k = crate::regvar::floor_power(n as f64, 0.6) as usize;
    k.min(n / 10).max(1)
}

/// Hill estimate of the tail index from the `k_order` largest values.
pub fn hill(sample: &[f64], k_order: usize) -> Result<EstimateReport> {
    let n = sample.len();
    if k_order == 0 || k_order >= n {
        return Err(invalid(format!(
            "k_order = {k_order} must lie in [1, {})",
            n
        )));
    }
    if let Some(bad) = sample.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(invalid(format!(
            "Hill needs positive finite values, got {bad}"
        )));
    }
    let mut top = sample.to_vec();
    let top = select_top(&mut top, k_order + 1);
    hill_from_top(top, k_order, n)
}

/// Keep the `m` largest values, sorted in decreasing order.
fn select_top(values: &mut Vec<f64>, m: usize) -> &[f64] {
    let m = m.min(values.len());
    if m < values.len() {
        values.select_nth_unstable_by(m - 1, |a, b| b.total_cmp(a));
        values.truncate(m);
    }
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    values
}

/// Hill estimate from the `k_order + 1` largest values in decreasing order.
pub fn hill_from_top(
    top_desc: &[f64],
    k_order: usize,
    sample_size: usize,
) -> Result<EstimateReport> {
    if top_desc.len() < k_order + 1 || k_order == 0 {
        return Err(invalid("need k_order + 1 upper order statistics"));
    }
    let anchor = top_desc[k_order];
    if !(anchor > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "order statistic X(n-k) = {anchor} is not positive"
        )));
    }
    let mean_excess = top_desc[..k_order]
        .iter()
        .map(|&x| (x / anchor).ln())
        .sum::<f64>()
        / k_order as f64;
    if !(mean_excess > 0.0) {
        return Err(Error::DegenerateSample(
            "zero log-spread above the anchor".into(),
        ));
    }
    let point = 1.0 / mean_excess;
    let mut r = EstimateReport::new("hill", point, sample_size).tune("k_order", k_order as f64);
    r.stderr = Some(point / (k_order as f64).sqrt());
    Ok(r)
}

/// Bounded buffer holding the largest values of a stream.
///
/// Merging buffers in any order yields the same final multiset, and
/// [`TopValues::into_sorted`] sorts it, so results do not depend on the order
/// in which replications finish.
#[derive(Debug, Clone, Default)]
pub struct TopValues {
    capacity: usize,
    buf: Vec<f64>,
    seen: usize,
}

impl TopValues {
    pub fn new(capacity: usize) -> Self {
        TopValues {
            capacity: capacity.max(1),
            buf: Vec::new(),
            seen: 0,
        }
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn extend_from_slice(&mut self, values: &[f64]) {
        self.seen += values.len();
        self.buf.extend_from_slice(values);
        self.compact(2);
    }

    pub fn merge(&mut self, other: TopValues) {
        self.seen += other.seen;
        self.buf.extend(other.buf);
        self.compact(2);
    }

    fn compact(&mut self, slack: usize) {
        if self.buf.len() > slack * self.capacity {
            let cap = self.capacity;
            self.buf
                .select_nth_unstable_by(cap - 1, |a, b| b.total_cmp(a));
            self.buf.truncate(cap);
        }
    }

    /// The retained values in decreasing order.
    pub fn into_sorted(mut self) -> Vec<f64> {
        self.compact(1);
        self.buf.sort_unstable_by(|a, b| b.total_cmp(a));
        self.buf
    }
}

/// Outcome of inverting `P{M_n ≤ u_n} → e^{-τθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefinitionTheta {
    pub theta: f64,
    pub raw: f64,
    pub clipped: bool,
}

/// `θ̂ = -ln(P̂{M_n ≤ u_n}) / τ̂`, clipped to `[0, 1]` with a flag.
pub fn definition_theta(prob_max_below: f64, tau_hat: f64) -> Result<DefinitionTheta> {
    if !(prob_max_below > 0.0 && prob_max_below < 1.0) {
        return Err(Error::DegenerateSample(format!(
            "P̂{{M_n ≤ u_n}} = {prob_max_below}: increase replications or adjust y"
        )));
    }
    if !(tau_hat > 0.0 && tau_hat.is_finite()) {
        return Err(invalid(format!("τ̂ = {tau_hat} must be positive")));
    }
    let raw = -prob_max_below.ln() / tau_hat;
    let theta = raw.clamp(0.0, 1.0);
    Ok(DefinitionTheta {
        theta,
        raw,
        clipped: theta != raw,
    })
}

/// Report form of [`definition_theta`] from replication counts.
///
/// The standard error is the delta-method value for the binomial
/// proportion, `sqrt((1 - p) / (p R)) / τ̂`.
pub fn definition_theta_report(
    replications_below: usize,
    replications: usize,
    tau_hat: f64,
    u: f64,
) -> Result<EstimateReport> {
    if replications == 0 {
        return Err(invalid("no replications"));
    }
    let p = replications_below as f64 / replications as f64;
    let d = definition_theta(p, tau_hat)?;
    let mut r = EstimateReport::new("theta-def", d.theta, replications)
        .tune("u", u)
        .tune("tau_hat", tau_hat)
        .tune("p_hat", p);
    r.stderr = Some(((1.0 - p) / (p * replications as f64)).sqrt() / tau_hat);
    r.clipped = d.clipped;
    Ok(r)
}

/// `τ̂ = n · (pooled fraction of values above u)` over equal-length paths.
pub fn estimate_tau(paths: &[Vec<f64>], u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    let n = paths.first().map(Vec::len).unwrap_or(0);
    if n == 0 || paths.iter().any(|p| p.len() != n) {
        return Err(invalid("paths must be nonempty and of equal length"));
    }
    let exceed: usize = paths
        .iter()
        .map(|p| p.iter().filter(|&&v| v > u).count())
        .sum();
    tau_from_counts(n, exceed as u64, (n * paths.len()) as u64)
}

pub fn tau_from_counts(n: usize, exceedances: u64, total: u64) -> Result<f64> {
    if exceedances == 0 {
        return Err(Error::DegenerateSample(
            "no exceedances of the threshold".into(),
        ));
    }
    Ok(n as f64 * exceedances as f64 / total as f64)
}

/// Positions (zero-based) of values strictly above `u`.
pub fn exceedance_times(path: &[f64], u: f64) -> Vec<usize> {
    path.iter()
        .enumerate()
        .filter_map(|(t, &v)| (v > u).then_some(t))
        .collect()
}

/// Sufficient statistics of interexceedance times.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GapSums {
    pub gaps: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub max: u64,
}

impl GapSums {
    pub fn from_gaps(gaps: &[u64]) -> Self {
        gaps.iter().fold(GapSums::default(), |mut s, &g| {
            s.gaps += 1;
            s.sum += g as f64;
            s.sum_sq += (g as f64) * (g as f64);
            s.max = s.max.max(g);
            s
        })
    }

    pub fn from_times(times: &[usize]) -> Self {
        let gaps: Vec<u64> = times.windows(2).map(|w| (w[1] - w[0]) as u64).collect();
        GapSums::from_gaps(&gaps)
    }

    pub fn merge(&mut self, other: &GapSums) {
        self.gaps += other.gaps;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.max = self.max.max(other.max);
    }
}

/// Intervals estimator from pooled gap statistics.
pub fn intervals_theta_from_gaps(s: &GapSums) -> Result<EstimateReport> {
    if s.gaps == 0 {
        return Err(Error::DegenerateSample(
            "intervals estimator needs at least two exceedances".into(),
        ));
    }
    let g = s.gaps as f64;
    let raw = if s.max <= 2 {
        2.0 * s.sum * s.sum / (g * s.sum_sq)
    } else {
        // Σ(G−1) and Σ(G−1)(G−2) expressed through ΣG and ΣG²
        let shifted = s.sum - g;
        let prod = s.sum_sq - 3.0 * s.sum + 2.0 * g;
        2.0 * shifted * shifted / (g * prod)
    };
    let mut r = EstimateReport::new("theta-intervals", raw.min(1.0), s.gaps as usize + 1)
        .tune("gaps", g)
        .tune("max_gap", s.max as f64);
    r.clipped = raw > 1.0;
    Ok(r)
}

/// Intervals (interexceedance-times) estimator on a single path.
pub fn intervals_theta(path: &[f64], u: f64) -> Result<EstimateReport> {
    let times = exceedance_times(path, u);
    if times.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "{} exceedances of u = {u}; the intervals estimator needs at least two",
            times.len()
        )));
    }
    let mut r = intervals_theta_from_gaps(&GapSums::from_times(&times))?;
    r.tuning.insert("u".into(), u);
    r.sample_size = path.len();
    Ok(r)
}

/// Counts behind the blocks estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockCounts {
    pub touched_blocks: u64,
    pub exceedances: u64,
}

impl BlockCounts {
    pub fn from_times(times: &[usize], block: usize) -> Self {
        let mut touched = 0;
        let mut last = None;
        for &t in times {
            let b = t / block;
            if last != Some(b) {
                touched += 1;
                last = Some(b);
            }
        }
        BlockCounts {
            touched_blocks: touched,
            exceedances: times.len() as u64,
        }
    }

    pub fn merge(&mut self, other: &BlockCounts) {
        self.touched_blocks += other.touched_blocks;
        self.exceedances += other.exceedances;
    }

    pub fn theta(&self) -> Result<f64> {
        if self.exceedances == 0 {
            return Err(Error::DegenerateSample(
                "no exceedances of the threshold".into(),
            ));
        }
        Ok((self.touched_blocks as f64 / self.exceedances as f64).min(1.0))
    }
}

/// Blocks estimator: touched blocks over total exceedances.
pub fn blocks_theta(path: &[f64], u: f64, block: usize) -> Result<EstimateReport> {
    if block == 0 {
        return Err(invalid("block length must be at least 1"));
    }
    let counts = BlockCounts::from_times(&exceedance_times(path, u), block);
    let theta = counts.theta()?;
    Ok(EstimateReport::new("theta-blocks", theta, path.len())
        .tune("u", u)
        .tune("block", block as f64)
        .tune("exceedances", counts.exceedances as f64))
}
