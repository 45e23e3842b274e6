use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregate::WeightVector;
use crate::columns::ArrayModel;
use crate::error::{invalid, Error, Result};
use crate::lengths::{LengthLaw, RandomD};
use crate::regvar::{SlowlyVarying, ThresholdRule};

pub const DEFAULT_WIDTH_CAP: usize = 256;

fn default_width_cap() -> usize {
    DEFAULT_WIDTH_CAP
}

/// One Monte Carlo experiment, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: u64,
    pub replications: usize,
    pub chi: f64,
    pub array: ArrayModel,
    pub weights: WeightVector,
    /// Law of the random term count; absent means exactly `l_n` terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_law: Option<LengthLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_d: Option<RandomD>,
    pub threshold: ThresholdRule,
    /// Real-valued weights: the top-level array and weights form the
    /// positive part, this block the negative part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signed: Option<SignedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<f64>,
    /// Upper bound on the number of materialised columns.
    #[serde(default = "default_width_cap")]
    pub width_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignedConfig {
    pub chi_pos: f64,
    pub chi_neg: f64,
    pub alpha_pos: f64,
    pub alpha_neg: f64,
    pub negative_array: ArrayModel,
    pub negative_weights: WeightVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_random_d: Option<RandomD>,
    #[serde(default = "one")]
    pub min_value: usize,
}

fn one() -> usize {
    1
}

impl SignedConfig {
    pub fn length_law_pos(&self) -> LengthLaw {
        LengthLaw {
            min_value: self.min_value,
            ..LengthLaw::pareto(self.alpha_pos)
        }
    }

    pub fn length_law_neg(&self) -> LengthLaw {
        LengthLaw {
            min_value: self.min_value,
            ..LengthLaw::pareto(self.alpha_neg)
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn is_signed(&self) -> bool {
        self.signed.is_some()
    }

    /// Structural checks shared by every run; theorem hypotheses are checked
    /// separately by the verifier.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(invalid(format!("χ = {} must be positive", self.chi)));
        }
        if self.width_cap == 0 {
            return Err(invalid("width_cap must be at least 1"));
        }
        self.array.validate()?;
        self.weights.validate()?;
        self.threshold.validate()?;
        if let Some(law) = &self.length_law {
            law.validate()?;
        }
        if let Some(rd) = &self.random_d {
            rd.validate()?;
            check_minimal_models(&self.array, rd, "random_d")?;
        }
        if let Some(ds) = self.delta_star {
            if !(ds > 0.0 && ds.is_finite()) {
                return Err(invalid(format!("δ* = {ds} must be positive")));
            }
        }
        match &self.signed {
            None => {
                if !self.weights.all_positive() {
                    return Err(invalid(
                        "weights must all be positive; configure a signed block for real-valued weights",
                    ));
                }
            }
            Some(s) => {
                if self.length_law.is_some() {
                    return Err(invalid(
                        "signed mode takes its length laws from alpha_pos and alpha_neg; remove length_law",
                    ));
                }
                for (name, v) in [
                    ("chi_pos", s.chi_pos),
                    ("chi_neg", s.chi_neg),
                    ("alpha_pos", s.alpha_pos),
                    ("alpha_neg", s.alpha_neg),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(invalid(format!("{name} = {v} must be positive")));
                    }
                }
                if s.min_value == 0 {
                    return Err(invalid("min_value must be at least 1"));
                }
                s.negative_array.validate()?;
                s.negative_weights.validate()?;
                if !self.weights.all_positive() || !s.negative_weights.all_negative() {
                    return Err(invalid(
                        "signed mode needs all-positive weights and all-negative negative_weights (both partitions nonempty)",
                    ));
                }
                if let Some(rd) = &s.negative_random_d {
                    rd.validate()?;
                    check_minimal_models(&s.negative_array, rd, "negative_random_d")?;
                }
            }
        }
        Ok(())
    }

    /// Threshold rule for the negative part, sharing `y` with the main rule.
    pub fn negative_threshold(&self) -> Option<ThresholdRule> {
        self.signed.as_ref().map(|s| ThresholdRule {
            y: self.threshold.y,
            k1: s.negative_array.profile.k1,
            ell1: s.negative_array.minimal_columns[0].marginal.ell,
        })
    }
}

fn check_minimal_models(array: &ArrayModel, rd: &RandomD, name: &str) -> Result<()> {
    if array.minimal_columns.len() < rd.max_support() {
        return Err(invalid(format!(
            "{name} can draw d = {} but only {} minimal column models are configured",
            rd.max_support(),
            array.minimal_columns.len()
        )));
    }
    Ok(())
}

/// Whether the threshold rule is the one induced by the first minimal column.
pub fn threshold_matches(rule: &ThresholdRule, array: &ArrayModel) -> bool {
    let col = &array.minimal_columns[0];
    let same_ell = match (rule.ell1, col.marginal.ell) {
        (SlowlyVarying::Constant { c: a }, SlowlyVarying::Constant { c: b }) => {
            (a - b).abs() <= 1e-12 * b
        }
        (SlowlyVarying::LogPower { c: a, beta: p }, SlowlyVarying::LogPower { c: b, beta: q }) => {
            (a - b).abs() <= 1e-12 * b && (p - q).abs() <= 1e-12
        }
        _ => false,
    };
    same_ell && (rule.k1 - array.profile.k1).abs() <= 1e-12 * array.profile.k1
}
