use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::columns::{ArrayModel, Coupling};
use crate::error::{invalid, Error, Result};
use crate::estimators::EstimateReport;
use crate::harness::config::{threshold_matches, ExperimentConfig};
use crate::harness::scenario::{run_scenario, RunOptions, SeriesKind};
use crate::lengths::{empirical_regime_ratio, RandomD};
use crate::regvar::{
    check_t5_conditions, chi_upper, classify_regime, length_scale, theta_weighted, Regime,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "T2")]
    T2,
    #[serde(rename = "T3.1")]
    T3Item1,
    #[serde(rename = "T3.2")]
    T3Item2,
    #[serde(rename = "T4")]
    T4,
    #[serde(rename = "C3")]
    C3,
    #[serde(rename = "C4")]
    C4,
    #[serde(rename = "T5i")]
    T5i,
    #[serde(rename = "T5ii")]
    T5ii,
    #[serde(rename = "T6")]
    T6,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::T2,
        TheoremId::T3Item1,
        TheoremId::T3Item2,
        TheoremId::T4,
        TheoremId::C3,
        TheoremId::C4,
        TheoremId::T5i,
        TheoremId::T5ii,
        TheoremId::T6,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::T2 => "T2",
            TheoremId::T3Item1 => "T3.1",
            TheoremId::T3Item2 => "T3.2",
            TheoremId::T4 => "T4",
            TheoremId::C3 => "C3",
            TheoremId::C4 => "C4",
            TheoremId::T5i => "T5i",
            TheoremId::T5ii => "T5ii",
            TheoremId::T6 => "T6",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                invalid(format!(
                    "unknown theorem id {s:?}; expected one of T2, T3.1, T3.2, T4, C3, C4, T5i, T5ii, T6"
                ))
            })
    }
}

/// A predicted value, or a label such as `does-not-exist`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predicted {
    Value(f64),
    Label(String),
}

pub const DOES_NOT_EXIST: &str = "does-not-exist";
pub const NOT_PREDICTED: &str = "not-predicted";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub extremal_index_abs: f64,
    pub min_replications: usize,
    pub tail_index_rel: f64,
    pub min_pooled: usize,
    pub divergence_rel: f64,
    pub tau_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            extremal_index_abs: 0.1,
            min_replications: 500,
            tail_index_rel: 0.15,
            min_pooled: 100_000,
            divergence_rel: 0.5,
            tau_rel: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|estimate − predicted| ≤ tolerance`.
    Absolute,
    /// `|estimate − predicted| ≤ tolerance · |predicted|`.
    Relative,
    /// `|estimate − predicted| > tolerance`.
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub predicted: f64,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn evaluate(
        name: String,
        kind: CheckKind,
        predicted: f64,
        tolerance: f64,
        est: Result<(f64, Option<f64>)>,
    ) -> Check {
        match est {
            Ok((value, stderr)) => {
                let dev = (value - predicted).abs();
                let pass = match kind {
                    CheckKind::Absolute => dev <= tolerance,
                    CheckKind::Relative => dev <= tolerance * predicted.abs(),
                    CheckKind::Outside => dev > tolerance,
                };
                Check {
                    name,
                    kind,
                    predicted,
                    estimate: Some(value),
                    stderr,
                    tolerance,
                    pass,
                    note: None,
                }
            }
            Err(e) => Check {
                name,
                kind,
                predicted,
                estimate: None,
                stderr: None,
                tolerance,
                pass: false,
                note: Some(e.to_string()),
            },
        }
    }

    fn underpowered(mut self, reason: String) -> Check {
        self.pass = false;
        self.note = Some(reason);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem_id: TheoremId,
    pub hypotheses: Vec<String>,
    pub regime: Option<Regime>,
    pub predicted: BTreeMap<String, Predicted>,
    pub estimated: BTreeMap<String, EstimateReport>,
    /// Estimates without a prediction to compare against.
    pub informational: BTreeMap<String, EstimateReport>,
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
    pub pass: bool,
    pub runtime_seconds: f64,
    pub cap_frequency: f64,
    pub sandwich_violations: u64,
    pub l_n: usize,
    pub config: ExperimentConfig,
}

impl VerificationReport {
    /// Copy with the runtime zeroed, for reproducibility comparisons.
    pub fn without_runtime(&self) -> VerificationReport {
        VerificationReport {
            runtime_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What a theorem predicts for a given configuration.
#[derive(Debug, Clone, Default)]
pub struct Expectations {
    pub hypotheses: Vec<String>,
    pub regime: Option<Regime>,
    pub tail: Vec<(SeriesKind, f64)>,
    pub theta: Vec<(SeriesKind, &'static str, Predicted)>,
    pub tau: Vec<(SeriesKind, &'static str, f64)>,
    /// Values the extremal-index estimate must stay away from.
    pub falsify: Vec<(SeriesKind, &'static str, f64)>,
    /// Predicted growth exponent of `τ̂(n)` at a threshold of the wrong order.
    pub divergence: Vec<(SeriesKind, &'static str, f64)>,
    pub informational_tail: Vec<SeriesKind>,
}

fn refuse(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

fn check_chi(chi: f64, array: &ArrayModel, side: &str, h: &mut Vec<String>) -> Result<()> {
    let p = &array.profile;
    let chi0 = chi_upper(p.k1, p.k)?;
    if !(chi < chi0) {
        return Err(refuse(format!(
            "{side}χ = {chi} is not below χ₀ = (k − k1)/(k1(k + 1)) = {chi0} for k1 = {}, k = {}",
            p.k1, p.k
        )));
    }
    h.push(format!("{side}0 < χ = {chi} < χ₀ = {chi0}"));
    Ok(())
}

fn check_threshold(rule_matches: bool, side: &str, h: &mut Vec<String>) -> Result<()> {
    if !rule_matches {
        return Err(refuse(format!(
            "{side}threshold rule must use the tail index k1 and slowly varying factor of minimal column 1"
        )));
    }
    h.push(format!(
        "{side}u_n built from k1 and ℓ1 of minimal column 1"
    ));
    Ok(())
}

fn shared_ell(array: &ArrayModel, count: usize) -> bool {
    let ell1 = array.minimal_columns[0].marginal.ell;
    array.minimal_columns[..count]
        .iter()
        .all(|c| matches!(c.marginal.ell.ratio_limit(&ell1), Some(r) if (r - 1.0).abs() <= 1e-12))
}

fn fixed_d(
    config_d: Option<&RandomD>,
    array: &ArrayModel,
    want_one: bool,
    h: &mut Vec<String>,
) -> Result<usize> {
    if config_d.is_some() {
        return Err(refuse(
            "this result is stated for a fixed number of minimal columns; remove random_d (or use T4, T6, C4)",
        ));
    }
    let d = array.profile.d;
    if want_one && d != 1 {
        return Err(refuse(format!(
            "needs a unique minimal-index column (d = 1), got d = {d}"
        )));
    }
    if !want_one && d < 2 {
        return Err(refuse(format!(
            "needs a fixed d ≥ 2 minimal columns, got d = {d}"
        )));
    }
    h.push(format!("fixed d = {d}"));
    Ok(d)
}

fn check_random_d(
    rd: Option<&RandomD>,
    l_n: usize,
    side: &str,
    h: &mut Vec<String>,
) -> Result<RandomD> {
    let rd = rd.ok_or_else(|| {
        refuse(format!(
            "{side}needs a random number d of minimal columns (random_d)"
        ))
    })?;
    if rd.support.iter().any(|&d| d < 2) {
        return Err(refuse(format!(
            "{side}random d must satisfy 1 < d, support is {:?}",
            rd.support
        )));
    }
    rd.validate_against(l_n)
        .map_err(|e| refuse(format!("{side}{e}")))?;
    h.push(format!(
        "{side}1 < d < d_n = min(C, l_n) = {} for support {:?}",
        rd.c.min(l_n),
        rd.support
    ));
    Ok(rd.clone())
}

fn check_regime(
    alpha: f64,
    chi: f64,
    want: Regime,
    side: &str,
    h: &mut Vec<String>,
) -> Result<Regime> {
    let regime = classify_regime(alpha, chi)?;
    if regime != want {
        let condition = match want {
            Regime::TermDominant => "P{N_n > l_n} = o(P{Y_{n,1} > u_n}) needs αχ > 1",
            Regime::LengthDominant => "P{Y_{n,1} > u_n} = o(P{N_n > l_n}) needs αχ < 1",
            Regime::Balanced => "P{N_n > l_n} ~ P{z1 Y_{n,1} > u_n} needs αχ = 1",
        };
        return Err(refuse(format!(
            "{side}αχ = {} puts (α = {alpha}, χ = {chi}) in the {regime} regime; {condition}",
            alpha * chi
        )));
    }
    h.push(format!("{side}regime {regime} (αχ = {})", alpha * chi));
    Ok(regime)
}

/// Weight ordering that makes the largest weighted term pathwise maximal.
fn ordering_holds(array: &ArrayModel, z: &[f64], d: usize) -> std::result::Result<String, String> {
    let z = |j: usize| z.get(j).copied().unwrap_or(*z.last().unwrap()).abs();
    match array.coupling {
        Coupling::CumulativeSums => {
            if (1..d).all(|j| z(j - 1) <= z(j)) {
                Ok(format!("cumulative-sum columns with z_1 ≤ ... ≤ z_{d}"))
            } else {
                Err(format!(
                    "cumulative-sum columns need nondecreasing weights over the first {d}"
                ))
            }
        }
        Coupling::OrderedRows { rho } => {
            if (0..d).all(|j| z(j) * rho.powi(j as i32) <= z(0)) {
                Ok(format!("ordered rows with z_j ρ^(j−1) ≤ z_1 for j ≤ {d}"))
            } else {
                Err(format!(
                    "ordered rows need z_j ρ^(j−1) ≤ z_1 for all j ≤ {d}"
                ))
            }
        }
        _ => Err("coupling does not order the minimal columns pathwise".into()),
    }
}

/// Extremal index and exceedance rate of `Y*` when `d` is drawn from `rd`
/// and the minimal columns are independent with a common slowly varying
/// factor.
///
/// Conditionally on `d`, `P{M_n ≤ u_n} → exp(-θ(z)_d τ_d)` with
/// `τ_d = Σ_{j≤d} (|z_j|/y)^{k1}`, so the unconditional limits are
/// `τ = E τ_d` and `θ = -ln E exp(-θ(z)_d τ_d) / τ`.
pub fn mixture_prediction(
    thetas: &[f64],
    z: &[f64],
    y: f64,
    k1: f64,
    rd: &RandomD,
) -> Result<(f64, f64)> {
    let mut tau = 0.0;
    let mut prob = 0.0;
    for (&d, &p) in rd.support.iter().zip(&rd.probs) {
        if d > thetas.len() {
            return Err(invalid(format!(
                "no extremal index configured for minimal column {d}"
            )));
        }
        let zs: Vec<f64> = (0..d)
            .map(|j| z.get(j).copied().unwrap_or(*z.last().unwrap()).abs())
            .collect();
        let tau_d: f64 = zs.iter().map(|w| (w / y).powf(k1)).sum();
        let theta_d = theta_weighted(&thetas[..d], &zs, k1)?;
        tau += p * tau_d;
        prob += p * (-theta_d * tau_d).exp();
    }
    Ok((-prob.ln() / tau, tau))
}

struct SideView<'a> {
    array: &'a ArrayModel,
    weights: &'a [f64],
    random_d: Option<&'a RandomD>,
    min_value: usize,
}

/// Extremal-index prediction for one side with `d` random or fixed.
fn side_theta(
    side: &SideView,
    y: f64,
    max_kind: SeriesKind,
    sum_kind: SeriesKind,
    label: &'static str,
    e: &mut Expectations,
) -> Result<()> {
    let p = &side.array.profile;
    let rd = side
        .random_d
        .cloned()
        .unwrap_or_else(|| RandomD::fixed(p.d, p.d + 1));
    let max_d = rd.max_support();
    let thetas: Vec<f64> = (0..max_d).map(|j| side.array.minimal_theta(j)).collect();
    if side.min_value < max_d {
        let why = format!(
            "{NOT_PREDICTED}: min_value = {} lets N_n fall below d = {max_d}",
            side.min_value
        );
        e.theta
            .push((max_kind, label, Predicted::Label(why.clone())));
        e.theta.push((sum_kind, label, Predicted::Label(why)));
        return Ok(());
    }
    match side.array.coupling {
        Coupling::IndependentColumns if shared_ell(side.array, max_d) => {
            let (theta, _) = mixture_prediction(&thetas, side.weights, y, p.k1, &rd)?;
            e.hypotheses
                .push("independent minimal columns with a common ℓ1".into());
            e.theta.push((max_kind, label, Predicted::Value(theta)));
            e.theta.push((sum_kind, label, Predicted::Value(theta)));
        }
        Coupling::CumulativeSums | Coupling::OrderedRows { .. } => {
            let why = ordering_holds(side.array, side.weights, max_d).map_err(refuse)?;
            e.hypotheses.push(why);
            e.theta.push((max_kind, label, Predicted::Value(thetas[0])));
            e.theta
                .push((sum_kind, label, Predicted::Label(NOT_PREDICTED.into())));
        }
        _ => {
            e.theta
                .push((max_kind, label, Predicted::Label(NOT_PREDICTED.into())));
            e.theta
                .push((sum_kind, label, Predicted::Label(NOT_PREDICTED.into())));
        }
    }
    Ok(())
}

fn positive_common(cfg: &ExperimentConfig, e: &mut Expectations) -> Result<usize> {
    if cfg.is_signed() {
        return Err(refuse(
            "positive-weight result; remove the signed block or use C3/C4",
        ));
    }
    e.hypotheses.push("positive bounded weights".into());
    check_threshold(
        threshold_matches(&cfg.threshold, &cfg.array),
        "",
        &mut e.hypotheses,
    )?;
    check_chi(cfg.chi, &cfg.array, "", &mut e.hypotheses)?;
    length_scale(cfg.n, cfg.chi)
}

/// Check every hypothesis of `id` against `cfg` and derive the predictions.
pub fn expectations(id: TheoremId, cfg: &ExperimentConfig) -> Result<Expectations> {
    cfg.validate()?;
    let mut e = Expectations::default();
    let p = &cfg.array.profile;
    let theta1 = cfg.array.minimal_theta(0);
    let both = [SeriesKind::YStar, SeriesKind::YSum];
    match id {
        TheoremId::T2 => {
            let l_n = positive_common(cfg, &mut e)?;
            fixed_d(cfg.random_d.as_ref(), &cfg.array, true, &mut e.hypotheses)?;
            if cfg.length_law.is_some() {
                return Err(refuse(
                    "T2 aggregates exactly l_n terms; remove length_law or use T5i/T5ii",
                ));
            }
            require_width(l_n, 1, &mut e.hypotheses)?;
            for s in both {
                e.tail.push((s, p.k1));
                e.theta.push((s, "u", Predicted::Value(theta1)));
            }
        }
        TheoremId::T3Item1 => {
            let l_n = positive_common(cfg, &mut e)?;
            let d = fixed_d(cfg.random_d.as_ref(), &cfg.array, false, &mut e.hypotheses)?;
            no_length_law(cfg)?;
            require_width(l_n, d, &mut e.hypotheses)?;
            if cfg.array.coupling != Coupling::IndependentColumns {
                return Err(refuse("T3.1 needs mutually independent minimal columns (independent_columns coupling)"));
            }
            if !shared_ell(&cfg.array, d) {
                return Err(refuse(
                    "T3.1 predictions assume the minimal columns share ℓ1",
                ));
            }
            e.hypotheses
                .push("independent minimal columns with a common ℓ1".into());
            let thetas: Vec<f64> = (0..d).map(|j| cfg.array.minimal_theta(j)).collect();
            let z = cfg.weights.extended(d).0[..d].to_vec();
            let theta = theta_weighted(&thetas, &z, p.k1)?;
            let tau: f64 = z.iter().map(|w| (w / cfg.threshold.y).powf(p.k1)).sum();
            for s in both {
                e.tail.push((s, p.k1));
                e.theta.push((s, "u", Predicted::Value(theta)));
            }
            e.tau.push((SeriesKind::YStar, "u", tau));
            if (theta - theta1).abs() >= 0.2 {
                e.falsify.push((SeriesKind::YStar, "u", theta1));
            }
        }
        TheoremId::T3Item2 => {
            let l_n = positive_common(cfg, &mut e)?;
            let d = fixed_d(cfg.random_d.as_ref(), &cfg.array, false, &mut e.hypotheses)?;
            no_length_law(cfg)?;
            require_width(l_n, d, &mut e.hypotheses)?;
            let why = ordering_holds(&cfg.array, &cfg.weights.0, d)
                .map_err(|m| refuse(format!("T3.2: {m}")))?;
            e.hypotheses.push(why);
            e.tail.push((SeriesKind::YStar, p.k1));
            e.theta
                .push((SeriesKind::YStar, "u", Predicted::Value(theta1)));
            e.informational_tail.push(SeriesKind::YSum);
            e.theta.push((
                SeriesKind::YSum,
                "u",
                Predicted::Label(NOT_PREDICTED.into()),
            ));
        }
        TheoremId::T4 | TheoremId::T6 => {
            let l_n = positive_common(cfg, &mut e)?;
            let rd = check_random_d(cfg.random_d.as_ref(), l_n, "", &mut e.hypotheses)?;
            let law = cfg
                .length_law
                .ok_or_else(|| refuse(format!("{id} needs a random term count (length_law)")))?;
            if id == TheoremId::T4 {
                e.regime = Some(check_regime(
                    law.alpha,
                    cfg.chi,
                    Regime::TermDominant,
                    "",
                    &mut e.hypotheses,
                )?);
            } else {
                e.regime = Some(check_regime(
                    law.alpha,
                    cfg.chi,
                    Regime::LengthDominant,
                    "",
                    &mut e.hypotheses,
                )?);
                require_tail_condition(cfg, law.alpha, &mut e.hypotheses)?;
            }
            e.hypotheses
                .push("d, N_n and the array are independent".into());
            let orders = matches!(
                cfg.array.coupling,
                Coupling::CumulativeSums | Coupling::OrderedRows { .. }
            );
            e.tail.push((SeriesKind::YStar, p.k1));
            if orders {
                e.informational_tail.push(SeriesKind::YSum);
            } else {
                e.tail.push((SeriesKind::YSum, p.k1));
            }
            let side = SideView {
                array: &cfg.array,
                weights: &cfg.weights.0,
                random_d: Some(&rd),
                min_value: law.min_value,
            };
            side_theta(
                &side,
                cfg.threshold.y,
                SeriesKind::YStar,
                SeriesKind::YSum,
                "u",
                &mut e,
            )?;
        }
        TheoremId::T5i | TheoremId::T5ii => {
            let l_n = positive_common(cfg, &mut e)?;
            fixed_d(cfg.random_d.as_ref(), &cfg.array, true, &mut e.hypotheses)?;
            let law = cfg
                .length_law
                .ok_or_else(|| refuse(format!("{id} needs a random term count (length_law)")))?;
            let mut predict_theta = true;
            if id == TheoremId::T5i {
                e.regime = Some(check_regime(
                    law.alpha,
                    cfg.chi,
                    Regime::LengthDominant,
                    "",
                    &mut e.hypotheses,
                )?);
                let cond = require_tail_condition(cfg, law.alpha, &mut e.hypotheses)?;
                if cond.extremal_condition {
                    e.hypotheses.push(format!(
                        "αχ₀ > 1 + (1 − αχ)/2 holds, so the extremal index is predicted (χ₀ = {})",
                        chi_upper(p.k1, p.k)?
                    ));
                } else {
                    predict_theta = false;
                }
            } else {
                e.regime = Some(check_regime(
                    law.alpha,
                    cfg.chi,
                    Regime::Balanced,
                    "",
                    &mut e.hypotheses,
                )?);
                let ratio = empirical_regime_ratio(
                    &law,
                    &cfg.threshold,
                    &cfg.array.minimal_columns[0],
                    cfg.weights.0[0],
                    cfg.n,
                    cfg.chi,
                )?;
                if !(0.5..=2.0).contains(&ratio) {
                    return Err(refuse(format!(
                        "balanced regime needs P{{N_n > l_n}} / P{{z1 Y_{{n,1}} > u_n}} near 1; it is {ratio:.4} at n = {} (l_n = {l_n})",
                        cfg.n
                    )));
                }
                e.hypotheses.push(format!(
                    "P{{N_n > l_n}} / P{{z1 Y_{{n,1}} > u_n}} = {ratio:.4} at n = {}",
                    cfg.n
                ));
            }
            for s in both {
                e.tail.push((s, p.k1));
                let pred = if predict_theta {
                    Predicted::Value(theta1)
                } else {
                    Predicted::Label(format!("{NOT_PREDICTED}: αχ₀ > 1 + (1 − αχ)/2 fails"))
                };
                e.theta.push((s, "u", pred));
            }
        }
        TheoremId::C3 | TheoremId::C4 => signed_expectations(id, cfg, &mut e)?,
    }
    Ok(e)
}

fn no_length_law(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.length_law.is_some() {
        return Err(refuse(
            "T3 aggregates exactly l_n terms; remove length_law or use T4/T6",
        ));
    }
    Ok(())
}

fn require_width(l_n: usize, d: usize, h: &mut Vec<String>) -> Result<()> {
    if l_n < d + 1 {
        return Err(refuse(format!(
            "need 1 ≤ d ≤ l_n − 1, got d = {d} and l_n = {l_n}"
        )));
    }
    h.push(format!("d = {d} ≤ l_n − 1 = {}", l_n - 1));
    Ok(())
}

fn require_tail_condition(
    cfg: &ExperimentConfig,
    alpha: f64,
    h: &mut Vec<String>,
) -> Result<crate::regvar::LengthDominantConditions> {
    let p = &cfg.array.profile;
    let ds = cfg
        .delta_star
        .ok_or_else(|| refuse("the length-dominant results need delta_star"))?;
    let cond = check_t5_conditions(alpha, cfg.chi, p.k1, p.k, ds)?;
    let chi0 = chi_upper(p.k1, p.k)?;
    if !cond.tail_condition {
        return Err(refuse(format!(
            "αχ₀ = {} does not exceed 1 + (α/k1)δ* = {}",
            alpha * chi0,
            1.0 + alpha / p.k1 * ds
        )));
    }
    h.push(format!(
        "αχ₀ = {} > 1 + (α/k1)δ* = {}",
        alpha * chi0,
        1.0 + alpha / p.k1 * ds
    ));
    Ok(cond)
}

fn signed_expectations(id: TheoremId, cfg: &ExperimentConfig, e: &mut Expectations) -> Result<()> {
    let s = cfg.signed.as_ref().ok_or_else(|| {
        refuse(format!(
            "{id} concerns real-valued weights; add a signed block"
        ))
    })?;
    e.hypotheses.push("both weight partitions nonempty".into());
    check_threshold(
        threshold_matches(&cfg.threshold, &cfg.array),
        "positive part: ",
        &mut e.hypotheses,
    )?;
    check_chi(s.chi_pos, &cfg.array, "positive part: ", &mut e.hypotheses)?;
    check_chi(
        s.chi_neg,
        &s.negative_array,
        "negative part: ",
        &mut e.hypotheses,
    )?;
    let l_pos = length_scale(cfg.n, s.chi_pos)?;
    let l_neg = length_scale(cfg.n, s.chi_neg)?;
    check_regime(
        s.alpha_pos,
        s.chi_pos,
        Regime::TermDominant,
        "positive part: ",
        &mut e.hypotheses,
    )?;
    check_regime(
        s.alpha_neg,
        s.chi_neg,
        Regime::TermDominant,
        "negative part: ",
        &mut e.hypotheses,
    )?;
    e.regime = Some(Regime::TermDominant);

    let (rd_pos, rd_neg) = if id == TheoremId::C3 {
        fixed_d(cfg.random_d.as_ref(), &cfg.array, true, &mut e.hypotheses)?;
        fixed_d(
            s.negative_random_d.as_ref(),
            &s.negative_array,
            true,
            &mut e.hypotheses,
        )?;
        (None, None)
    } else {
        let a = check_random_d(
            cfg.random_d.as_ref(),
            l_pos,
            "positive part: ",
            &mut e.hypotheses,
        )?;
        let b = check_random_d(
            s.negative_random_d.as_ref(),
            l_neg,
            "negative part: ",
            &mut e.hypotheses,
        )?;
        e.hypotheses
            .push("d⁺, d⁻, N_n⁺, N_n⁻ and the array are independent".into());
        (Some(a), Some(b))
    };

    let k_pos = cfg.array.profile.k1;
    let k_neg = s.negative_array.profile.k1;
    let pos = SideView {
        array: &cfg.array,
        weights: &cfg.weights.0,
        random_d: rd_pos.as_ref(),
        min_value: s.min_value,
    };
    let neg = SideView {
        array: &s.negative_array,
        weights: &s.negative_weights.0,
        random_d: rd_neg.as_ref(),
        min_value: s.min_value,
    };
    let (dom, max_kind, sum_kind, label, other, k_dom, k_other) = if k_pos <= k_neg {
        (
            pos,
            SeriesKind::YStar,
            SeriesKind::YSum,
            "u_pos",
            "u_neg",
            k_pos,
            k_neg,
        )
    } else {
        (
            neg,
            SeriesKind::NegYStar2,
            SeriesKind::NegYSum,
            "u_neg",
            "u_pos",
            k_neg,
            k_pos,
        )
    };
    e.hypotheses
        .push(format!("dominant part has k1 = {k_dom} ≤ {k_other}"));
    let orders = matches!(
        dom.array.coupling,
        Coupling::CumulativeSums | Coupling::OrderedRows { .. }
    );
    e.tail.push((max_kind, k_dom));
    if orders && id == TheoremId::C4 {
        e.informational_tail.push(sum_kind);
    } else {
        e.tail.push((sum_kind, k_dom));
    }
    if id == TheoremId::C3 {
        let theta = dom.array.minimal_theta(0);
        e.theta.push((max_kind, label, Predicted::Value(theta)));
        e.theta.push((sum_kind, label, Predicted::Value(theta)));
    } else {
        side_theta(&dom, cfg.threshold.y, max_kind, sum_kind, label, e)?;
    }
    if k_dom < k_other {
        let exponent = 1.0 - k_dom / k_other;
        for kind in [max_kind, sum_kind] {
            e.theta
                .push((kind, other, Predicted::Label(DOES_NOT_EXIST.into())));
            e.divergence.push((kind, other, exponent));
        }
    }
    Ok(())
}

fn estimate_pair(
    r: Result<EstimateReport>,
) -> (Result<(f64, Option<f64>)>, Option<EstimateReport>) {
    match r {
        Ok(rep) => (Ok((rep.point, rep.stderr)), Some(rep)),
        Err(e) => (Err(e), None),
    }
}

/// Check hypotheses, simulate, and compare estimates with predictions.
pub fn verify_theorem(
    id: TheoremId,
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let e = expectations(id, cfg)?;
    let tol = Tolerances::default();
    let res = run_scenario(cfg, opts)?;
    let mut predicted = BTreeMap::new();
    let mut estimated = BTreeMap::new();
    let mut informational = BTreeMap::new();
    let mut checks = Vec::new();

    for &(kind, k) in &e.tail {
        let key = format!("{}.tail_index", kind.label());
        predicted.insert(key.clone(), Predicted::Value(k));
        let (est, rep) = estimate_pair(res.hill(kind));
        let mut c = Check::evaluate(key.clone(), CheckKind::Relative, k, tol.tail_index_rel, est);
        let pooled = res.series(kind)?.pooled;
        if pooled < tol.min_pooled {
            c = c.underpowered(format!(
                "underpowered: {pooled} pooled values, need {}",
                tol.min_pooled
            ));
        }
        checks.push(c);
        if let Some(r) = rep {
            estimated.insert(key, r);
        }
    }
    for &kind in &e.informational_tail {
        if let Ok(r) = res.hill(kind) {
            informational.insert(format!("{}.tail_index", kind.label()), r);
        }
    }
    for (kind, label, pred) in &e.theta {
        let key = format!("{}.extremal_index@{label}", kind.label());
        predicted.insert(key.clone(), pred.clone());
        match pred {
            Predicted::Value(theta) => {
                let (est, rep) = estimate_pair(res.theta_def(*kind, label));
                let mut c = Check::evaluate(
                    key.clone(),
                    CheckKind::Absolute,
                    *theta,
                    tol.extremal_index_abs,
                    est,
                );
                if res.replications < tol.min_replications {
                    c = c.underpowered(format!(
                        "underpowered: {} replications, need {}",
                        res.replications, tol.min_replications
                    ));
                }
                checks.push(c);
                if let Some(r) = rep {
                    estimated.insert(key, r);
                }
            }
            Predicted::Label(_) => {
                if let Ok(r) = res.theta_def(*kind, label) {
                    informational.insert(key, r);
                }
            }
        }
    }
    for &(kind, label, tau) in &e.tau {
        let key = format!("{}.tau@{label}", kind.label());
        predicted.insert(key.clone(), Predicted::Value(tau));
        let est = res.tau(kind, label).map(|t| (t, None));
        checks.push(Check::evaluate(
            key,
            CheckKind::Relative,
            tau,
            tol.tau_rel,
            est,
        ));
    }
    for &(kind, label, center) in &e.falsify {
        let key = format!("{}.extremal_index@{label}.away_from_theta1", kind.label());
        let (est, _) = estimate_pair(res.theta_def(kind, label));
        checks.push(Check::evaluate(
            key,
            CheckKind::Outside,
            center,
            tol.extremal_index_abs,
            est,
        ));
    }
    if !e.divergence.is_empty() {
        let small_n = cfg.n / 10;
        if small_n == 0 {
            return Err(invalid("divergence checks need n ≥ 10"));
        }
        let small = run_scenario(
            &ExperimentConfig {
                n: small_n,
                ..cfg.clone()
            },
            opts,
        )?;
        let growth = cfg.n as f64 / small_n as f64;
        for &(kind, label, exponent) in &e.divergence {
            let key = format!("{}.tau_ratio@{label}", kind.label());
            let pred = growth.powf(exponent);
            predicted.insert(key.clone(), Predicted::Value(pred));
            let est = res
                .tau(kind, label)
                .and_then(|big| Ok((big / small.tau(kind, label)?, None)));
            let mut c = Check::evaluate(key, CheckKind::Relative, pred, tol.divergence_rel, est);
            c.note = Some(format!("τ̂(n = {}) / τ̂(n = {small_n})", cfg.n));
            checks.push(c);
        }
    }
    for s in &res.series {
        for t in &s.thresholds {
            let base = format!("{}@{}", s.kind.label(), t.label);
            if let Ok(r) = res.theta_intervals(s.kind, &t.label) {
                informational.insert(format!("{base}.theta_intervals"), r);
            }
            if let Ok(r) = res.theta_blocks(s.kind, &t.label) {
                informational.insert(format!("{base}.theta_blocks"), r);
            }
        }
    }
    if res.sandwich_violations > 0 {
        checks.push(Check {
            name: "sandwich".into(),
            kind: CheckKind::Absolute,
            predicted: 0.0,
            estimate: Some(res.sandwich_violations as f64),
            stderr: None,
            tolerance: 0.0,
            pass: false,
            note: Some("z1 Y_{t,1} ≤ Y* ≤ Y failed".into()),
        });
    }

    let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        theorem_id: id,
        hypotheses: e.hypotheses,
        regime: e.regime,
        predicted,
        estimated,
        informational,
        checks,
        tolerances: tol,
        pass,
        runtime_seconds: start.elapsed().as_secs_f64(),
        cap_frequency: res.cap_frequency(),
        sandwich_violations: res.sandwich_violations,
        l_n: res.l_n,
        config: cfg.clone(),
    })
}
