//! Weighted maxima and sums of a row, their signed decomposition, and
//! running maxima.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Nonzero, finite real weights `z_1, z_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        let w = WeightVector(z);
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(invalid("weight vector is empty"));
        }
        if let Some(bad) = self.0.iter().find(|&&z| z == 0.0 || !z.is_finite()) {
            return Err(invalid(format!(
                "weights must be nonzero and finite, got {bad}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&z| z > 0.0)
    }

    pub fn all_negative(&self) -> bool {
        self.0.iter().all(|&z| z < 0.0)
    }

    /// Indices of positive and of negative weights, in order.
    pub fn partition(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.0.len()).partition(|&i| self.0[i] > 0.0)
    }

    /// Extend to `width` entries by repeating the last weight.
    pub fn extended(&self, width: usize) -> WeightVector {
        let mut z = self.0.clone();
        let last = *z.last().expect("validated weights are nonempty");
        z.resize(width.max(z.len()), last);
        WeightVector(z)
    }
}

fn check_terms(z: &WeightVector, row: &[f64], n_terms: usize) -> Result<()> {
    if n_terms == 0 {
        return Err(invalid("at least one term is required"));
    }
    if n_terms > row.len() || n_terms > z.len() {
        return Err(invalid(format!(
            "{n_terms} terms requested but only {} columns and {} weights are materialised",
            row.len(),
            z.len()
        )));
    }
    Ok(())
}

/// `max(z_1 Y_1, ..., z_N Y_N)`.
pub fn weighted_max(z: &WeightVector, row: &[f64], n_terms: usize) -> Result<f64> {
    check_terms(z, row, n_terms)?;
    Ok(z.0[..n_terms]
        .iter()
        .zip(row)
        .map(|(w, y)| w * y)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `z_1 Y_1 + ... + z_N Y_N`.
pub fn weighted_sum(z: &WeightVector, row: &[f64], n_terms: usize) -> Result<f64> {
    check_terms(z, row, n_terms)?;
    Ok(z.0[..n_terms].iter().zip(row).map(|(w, y)| w * y).sum())
}

/// Aggregates of a row split by the sign of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedAggregates {
    /// `Y* = max(Y*⁺, Y*⁻) = Y*⁺`.
    pub y_star: f64,
    /// `Y** = min(Y*⁺, Y*⁻) = Y*⁻`.
    pub y_star2: f64,
    /// `Y = Y⁺ + Y⁻`.
    pub y_sum: f64,
    pub max_pos: f64,
    pub min_neg: f64,
    pub sum_pos: f64,
    pub sum_neg: f64,
}

/// Signed aggregates using the first `n_pos` positive-weight and the first
/// `n_neg` negative-weight terms of the row.
pub fn signed_aggregates(
    z: &WeightVector,
    row: &[f64],
    n_pos: usize,
    n_neg: usize,
) -> Result<SignedAggregates> {
    z.validate()?;
    if z.all_positive() || z.all_negative() {
        return Err(invalid(
            "degenerate signed weights: with a single sign the exceedance probability of the other part is zero",
        ));
    }
    if row.len() < z.len() {
        return Err(invalid(format!(
            "row has {} entries but {} weights",
            row.len(),
            z.len()
        )));
    }
    let (pos, neg) = z.partition();
    if n_pos == 0 || n_neg == 0 || n_pos > pos.len() || n_neg > neg.len() {
        return Err(invalid(format!(
            "term counts ({n_pos}, {n_neg}) must lie in [1, {}] × [1, {}]",
            pos.len(),
            neg.len()
        )));
    }
    let mut max_pos = f64::NEG_INFINITY;
    let mut sum_pos = 0.0;
    for &i in &pos[..n_pos] {
        let v = z.0[i] * row[i];
        max_pos = max_pos.max(v);
        sum_pos += v;
    }
    let mut min_neg = f64::INFINITY;
    let mut sum_neg = 0.0;
    for &i in &neg[..n_neg] {
        let v = z.0[i] * row[i];
        min_neg = min_neg.min(v);
        sum_neg += v;
    }
    Ok(SignedAggregates {
        y_star: max_pos.max(min_neg),
        y_star2: max_pos.min(min_neg),
        y_sum: sum_pos + sum_neg,
        max_pos,
        min_neg,
        sum_pos,
        sum_neg,
    })
}

/// Prefix maxima.
pub fn running_maxima(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(invalid("running_maxima needs a nonempty input"));
    }
    let mut acc = f64::NEG_INFINITY;
    Ok(values
        .iter()
        .map(|&v| {
            acc = acc.max(v);
            acc
        })
        .collect())
}

/// One replication of the aggregate sequences over `t = 1..n`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregatePath {
    pub y_star: Vec<f64>,
    pub y_sum: Vec<f64>,
    /// `Y**`; empty outside signed mode.
    pub y_star2: Vec<f64>,
    /// `z_1 Y_{t,1}`; empty in signed mode.
    pub lead: Vec<f64>,
    pub n_terms: Vec<usize>,
}

impl AggregatePath {
    pub fn len(&self) -> usize {
        self.y_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_star.is_empty()
    }

    /// `M*_t`.
    pub fn running_max_star(&self) -> Result<Vec<f64>> {
        running_maxima(&self.y_star)
    }

    /// `M_t`.
    pub fn running_max_sum(&self) -> Result<Vec<f64>> {
        running_maxima(&self.y_sum)
    }

    /// Times at which `z_1 Y_{t,1} ≤ Y*_t ≤ Y_t` fails.
    pub fn sandwich_violations(&self) -> Vec<usize> {
        (0..self.lead.len())
            .filter(|&t| !(self.lead[t] <= self.y_star[t] && self.y_star[t] <= self.y_sum[t]))
            .collect()
    }
}
