//! Random term counts `N_n` and random numbers `d` of minimal-index columns.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::columns::ColumnModel;
use crate::error::{invalid, Result};
use crate::regvar::{length_scale, threshold_u, SlowlyVarying, TailSpec, ThresholdRule};
use crate::seeds::rng_from_seed;

/// Integer law with `P(N > j) = ℓ̃(j) j^{-α}` above `min_value`.
///
/// Draws are `N = max(min_value, ⌈X⌉)` where `X` has the exact survival
/// `min(1, ℓ̃(x) x^{-α})`; for integer `j`, `⌈X⌉ > j ⇔ X > j`, so the integer
/// tail is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthLaw {
    pub alpha: f64,
    #[serde(default = "one")]
    pub ell_tilde: SlowlyVarying,
    #[serde(default = "min_one")]
    pub min_value: usize,
}

fn one() -> SlowlyVarying {
    SlowlyVarying::ONE
}

fn min_one() -> usize {
    1
}

impl LengthLaw {
    pub fn pareto(alpha: f64) -> Self {
        LengthLaw {
            alpha,
            ell_tilde: SlowlyVarying::ONE,
            min_value: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!(
                "length tail index α = {} must be positive and finite",
                self.alpha
            )));
        }
        if self.min_value == 0 {
            return Err(invalid("min_value must be at least 1"));
        }
        self.ell_tilde.validate()
    }

    fn continuous(&self) -> TailSpec {
        TailSpec {
            k: self.alpha,
            ell: self.ell_tilde,
        }
    }

    /// Inverse transform of a uniform `u ∈ (0, 1)`.
    pub fn from_uniform(&self, u: f64) -> usize {
        let x = self.continuous().upper_quantile(u);
        let ceil = if x >= usize::MAX as f64 {
            usize::MAX
        } else {
            x.ceil() as usize
        };
        ceil.max(self.min_value)
    }

    /// Exact `P(N > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        let j = x.floor();
        if j < self.min_value as f64 {
            return 1.0;
        }
        let spec = self.continuous();
        if j < spec.x_min() || j <= self.ell_tilde.validity_point() {
            return 1.0;
        }
        spec.survival(j).unwrap_or(1.0)
    }
}

/// `count` i.i.d. draws, deterministic in `seed`.
pub fn sample_lengths(law: &LengthLaw, count: usize, seed: u64) -> Result<Vec<usize>> {
    law.validate()?;
    if count == 0 {
        return Err(invalid("sample_lengths needs count ≥ 1"));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..count)
        .map(|_| law.from_uniform(rng.sample(Open01)))
        .collect())
}

/// Bounded random number of minimal-index columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomD {
    pub support: Vec<usize>,
    pub probs: Vec<f64>,
    #[serde(rename = "C")]
    pub c: usize,
}

impl RandomD {
    pub fn fixed(d: usize, c: usize) -> Self {
        RandomD {
            support: vec![d],
            probs: vec![1.0],
            c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c <= 1 {
            return Err(invalid(format!("bound C = {} must exceed 1", self.c)));
        }
        if self.support.is_empty() || self.support.len() != self.probs.len() {
            return Err(invalid(
                "support and probabilities must be nonempty and of equal length",
            ));
        }
        if self.support.contains(&0) {
            return Err(invalid("support values must be positive"));
        }
        if self.probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(invalid("probabilities must be nonnegative"));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn max_support(&self) -> usize {
        self.support.iter().copied().max().unwrap_or(0)
    }

    /// Check `d < d_n = min(C, l_n)` for every support point.
    pub fn validate_against(&self, l_n: usize) -> Result<()> {
        self.validate()?;
        let bound = self.c.min(l_n);
        let max = self.max_support();
        if max >= bound {
            return Err(invalid(format!(
                "support value {max} is not below d_n = min(C, l_n) = min({}, {l_n}) = {bound}",
                self.c
            )));
        }
        Ok(())
    }
}

pub fn sample_d(rd: &RandomD, seed: u64) -> Result<usize> {
    rd.validate()?;
    let index =
        WeightedIndex::new(&rd.probs).map_err(|e| invalid(format!("bad probabilities: {e}")))?;
    let mut rng = rng_from_seed(seed);
    Ok(rd.support[index.sample(&mut rng)])
}

/// `P{N > l_n} / P{z1 Y > u_n}` from the exact laws.
pub fn empirical_regime_ratio(
    law: &LengthLaw,
    rule: &ThresholdRule,
    column: &ColumnModel,
    z1: f64,
    n: u64,
    chi: f64,
) -> Result<f64> {
    law.validate()?;
    if !(z1 > 0.0) {
        return Err(invalid("z1 must be positive"));
    }
    let l_n = length_scale(n, chi)?;
    let u_n = threshold_u(n, rule)?;
    let term = column.survival(u_n / z1);
    Ok(law.tail(l_n as f64) / term)
}
