//! Closed-form regular-variation mathematics.
//!
//! A regularly varying tail is written `P{Y > x} = ℓ(x) x^{-k}` with a
//! slowly varying factor `ℓ`. The factor is restricted to a closed family
//! (constants and powers of the logarithm) so that de Bruijn conjugates,
//! normalising thresholds and uniform growth bounds are all explicit.

use std::cmp::Ordering;
use std::f64::consts::E;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Comparison tolerance used when an exponent cannot be recovered as a
/// small rational.
pub const EXPONENT_TOLERANCE: f64 = 1e-12;

/// Slowly varying factor `ℓ(x) = c` or `ℓ(x) = c (ln x)^β` (for `x > e`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SlowlyVarying {
    Constant { c: f64 },
    LogPower { c: f64, beta: f64 },
}

impl SlowlyVarying {
    pub const ONE: SlowlyVarying = SlowlyVarying::Constant { c: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let (c, beta) = self.parts();
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!(
                "slowly varying scale c = {c} must be positive and finite"
            )));
        }
        if !beta.is_finite() {
            return Err(invalid("log-power exponent must be finite"));
        }
        Ok(())
    }

    /// `(c, β)`, with `β = 0` for constants.
    pub fn parts(&self) -> (f64, f64) {
        match *self {
            SlowlyVarying::Constant { c } => (c, 0.0),
            SlowlyVarying::LogPower { c, beta } => (c, beta),
        }
    }

    /// Smallest argument (exclusive) at which the factor is defined.
    pub fn validity_point(&self) -> f64 {
        match self {
            SlowlyVarying::Constant { .. } => 0.0,
            SlowlyVarying::LogPower { .. } => E,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let min = self.validity_point();
        if !(x > min) {
            return Err(Error::OutOfDomain { x, min });
        }
        Ok(match *self {
            SlowlyVarying::Constant { c } => c,
            SlowlyVarying::LogPower { c, beta } => c * x.ln().powf(beta),
        })
    }

    /// `ℓ(x)^r`, which stays inside the family.
    pub fn powf(&self, r: f64) -> SlowlyVarying {
        match *self {
            SlowlyVarying::Constant { c } => SlowlyVarying::Constant { c: c.powf(r) },
            SlowlyVarying::LogPower { c, beta } => SlowlyVarying::LogPower {
                c: c.powf(r),
                beta: beta * r,
            },
        }
    }

    /// Limit of `self(x) / other(x)` as `x → ∞`; `None` when it diverges.
    pub fn ratio_limit(&self, other: &SlowlyVarying) -> Option<f64> {
        let (c1, b1) = self.parts();
        let (c2, b2) = other.parts();
        match b1.partial_cmp(&b2)? {
            Ordering::Equal => Some(c1 / c2),
            Ordering::Less => Some(0.0),
            Ordering::Greater => None,
        }
    }

    /// A point `x₀` beyond which `ℓ(x) ≤ A x^δ` holds for every `x > x₀`.
    pub fn uniform_bound_start(&self, a: f64, delta: f64) -> Result<f64> {
        if !(a > 1.0 && delta > 0.0) {
            return Err(invalid("uniform bound needs A > 1 and δ > 0"));
        }
        let (c, beta) = self.parts();
        let constant_part = (c / a).powf(1.0 / delta).max(0.0);
        match self {
            SlowlyVarying::Constant { .. } => Ok(constant_part),
            SlowlyVarying::LogPower { .. } if beta <= 0.0 => Ok(constant_part.max(E)),
            SlowlyVarying::LogPower { .. } => {
                // h(t) = ln(c/A) + β ln t − δ t with t = ln x is concave and
                // decreasing past t* = β/δ; x₀ = exp of its last root.
                let h = |t: f64| (c / a).ln() + beta * t.ln() - delta * t;
                let lo = (beta / delta).max(1.0);
                if h(lo) <= 0.0 {
                    return Ok(lo.exp().max(E));
                }
                let mut hi = 2.0 * lo;
                while h(hi) > 0.0 {
                    hi *= 2.0;
                }
                let t0 = bisect(h, lo, hi);
                Ok(t0.exp().max(E))
            }
        }
    }
}

/// Root of a function with `f(lo) > 0 ≥ f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Regularly varying tail `ℓ(x) x^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub k: f64,
    pub ell: SlowlyVarying,
}

impl TailSpec {
    pub fn new(k: f64, ell: SlowlyVarying) -> Result<Self> {
        let spec = TailSpec { k, ell };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pareto(k: f64) -> Self {
        TailSpec {
            k,
            ell: SlowlyVarying::ONE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(invalid(format!(
                "tail index k = {} must be positive",
                self.k
            )));
        }
        self.ell.validate()
    }

    fn raw(&self, x: f64) -> f64 {
        let (c, beta) = self.ell.parts();
        match self.ell {
            SlowlyVarying::Constant { .. } => c * x.powf(-self.k),
            SlowlyVarying::LogPower { .. } => (c.ln() + beta * x.ln().ln() - self.k * x.ln()).exp(),
        }
    }

    /// Point above which `ℓ(x) x^{-k}` lies in `(0, 1]` and is nonincreasing.
    pub fn x_min(&self) -> f64 {
        let (c, beta) = self.ell.parts();
        match self.ell {
            SlowlyVarying::Constant { .. } => c.powf(1.0 / self.k),
            SlowlyVarying::LogPower { .. } => {
                let start = E.max((beta / self.k).exp()) * (1.0 + f64::EPSILON);
                if self.raw(start) <= 1.0 {
                    return start;
                }
                let g = |t: f64| c.ln() + beta * t.ln() - self.k * t;
                let lo = start.ln();
                let mut hi = 2.0 * lo;
                while g(hi) > 0.0 {
                    hi *= 2.0;
                }
                bisect(g, lo, hi).exp()
            }
        }
    }

    /// `min(1, ℓ(x) x^{-k})`; rejects arguments at or below the validity point.
    pub fn survival(&self, x: f64) -> Result<f64> {
        let min = self.ell.validity_point();
        if !(x > min) || x.is_nan() {
            return Err(Error::OutOfDomain { x, min });
        }
        Ok(self.raw(x).min(1.0))
    }

    /// Upper quantile of the law whose survival is `ℓ(x) x^{-k}` above
    /// [`x_min`](Self::x_min) and which puts the remaining mass at `x_min`.
    pub fn upper_quantile(&self, p: f64) -> f64 {
        let x_min = self.x_min();
        match self.ell {
            SlowlyVarying::Constant { c } => (c / p).powf(1.0 / self.k).max(x_min),
            SlowlyVarying::LogPower { c, beta } => {
                if p >= self.raw(x_min) {
                    return x_min;
                }
                let target = p.ln();
                let g = |t: f64| c.ln() + beta * t.ln() - self.k * t - target;
                let lo = x_min.ln();
                let mut hi = 2.0 * lo.max(1.0);
                while g(hi) > 0.0 {
                    hi *= 2.0;
                }
                bisect(g, lo, hi).exp()
            }
        }
    }
}

/// Normalising threshold `u_n = y n^{1/k1} ℓ1♯(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRule {
    pub y: f64,
    pub k1: f64,
    pub ell1: SlowlyVarying,
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.y.is_finite() && self.y > 0.0) {
            return Err(invalid(format!(
                "threshold scale y = {} must be positive",
                self.y
            )));
        }
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(invalid(format!(
                "threshold index k1 = {} must be positive",
                self.k1
            )));
        }
        self.ell1.validate()
    }
}

/// Minimal-index profile of a scheme of series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesProfile {
    pub d: usize,
    pub k1: f64,
    pub k: f64,
    #[serde(default)]
    pub tail_indices: Vec<f64>,
}

impl SeriesProfile {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("profile needs d ≥ 1 minimal-index columns"));
        }
        if !(self.k1 > 0.0) {
            return Err(invalid("k1 must be positive"));
        }
        if !(self.k1 < self.k) {
            return Err(Error::DegenerateProfile {
                k1: self.k1,
                k: self.k,
            });
        }
        if let Some(bad) = self.tail_indices.iter().find(|&&ki| !(ki >= self.k)) {
            return Err(invalid(format!(
                "bulk tail index {bad} is below the profile infimum k = {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Asymptotic de Bruijn conjugate `ℓ♯`, satisfying `ℓ♯(x) ℓ(x ℓ♯(x)) → 1`.
pub fn debruijn_conjugate(ell: SlowlyVarying) -> SlowlyVarying {
    match ell {
        SlowlyVarying::Constant { c } => SlowlyVarying::Constant { c: 1.0 / c },
        SlowlyVarying::LogPower { c, beta } => SlowlyVarying::LogPower {
            c: 1.0 / c,
            beta: -beta,
        },
    }
}

/// `u_n = y n^{1/k1} ℓ1♯(n)`, where `ℓ1♯(x) = ℓ♯(x^{1/k1})` and `ℓ1 = ℓ^{-k1}`.
pub fn threshold_u(n: u64, rule: &ThresholdRule) -> Result<f64> {
    if n == 0 {
        return Err(invalid("threshold_u needs n ≥ 1"));
    }
    rule.validate()?;
    let n = n as f64;
    match rule.ell1 {
        SlowlyVarying::Constant { c } => Ok(rule.y * (c * n).powf(1.0 / rule.k1)),
        SlowlyVarying::LogPower { .. } => {
            let ell = rule.ell1.powf(-1.0 / rule.k1);
            let root = n.powf(1.0 / rule.k1);
            let sharp = debruijn_conjugate(ell).eval(root)?;
            Ok(rule.y * root * sharp)
        }
    }
}

/// Upper bound `χ₀ = (k − k1) / (k1 (k + 1))` for the length exponent.
pub fn chi_upper(k1: f64, k: f64) -> Result<f64> {
    if !(k1 > 0.0 && k.is_finite()) {
        return Err(invalid(format!(
            "tail indices must be positive (k1 = {k1}, k = {k})"
        )));
    }
    if !(k1 < k) {
        return Err(Error::DegenerateProfile { k1, k });
    }
    Ok((k - k1) / (k1 * (k + 1.0)))
}

/// `l_n = ⌊n^χ⌋`, at least one.
pub fn length_scale(n: u64, chi: f64) -> Result<usize> {
    if n == 0 {
        return Err(invalid("length_scale needs n ≥ 1"));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(invalid(format!(
            "length exponent χ = {chi} must be positive"
        )));
    }
    Ok(((n as f64).powf(chi).floor() as usize).max(1))
}

/// `⌊x^e⌋`, robust to `powf` landing just below an exact integer.
pub fn floor_power(x: f64, e: f64) -> f64 {
    let v = x.powf(e);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        v.floor()
    }
}

/// Extremal index of the weighted aggregate over `d` independent
/// minimal-index columns: `Σ θ_j z_j^{k1} / Σ z_j^{k1}`.
pub fn theta_weighted(thetas: &[f64], z: &[f64], k1: f64) -> Result<f64> {
    if thetas.is_empty() || thetas.len() != z.len() {
        return Err(invalid(format!(
            "need equally many extremal indices and weights (got {} and {})",
            thetas.len(),
            z.len()
        )));
    }
    if let Some(bad) = z.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(invalid(format!("weights must be positive, got {bad}")));
    }
    if let Some(bad) = thetas.iter().find(|&&t| !(0.0..=1.0).contains(&t)) {
        return Err(invalid(format!("extremal index {bad} outside [0, 1]")));
    }
    if !(k1 > 0.0) {
        return Err(invalid("k1 must be positive"));
    }
    let powers: Vec<f64> = z.iter().map(|w| w.powf(k1)).collect();
    let num: f64 = thetas.iter().zip(&powers).map(|(t, p)| t * p).sum();
    let den: f64 = powers.iter().sum();
    let lo = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((num / den).clamp(lo, hi))
}

/// Relation between the tails of the term count and of the heaviest term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `P{N_n > l_n} = o(P{Y_{n,1} > u_n})`, i.e. `αχ > 1`.
    TermDominant,
    /// `P{Y_{n,1} > u_n} = o(P{N_n > l_n})`, i.e. `αχ < 1`.
    LengthDominant,
    /// Equal exponents, `αχ = 1`.
    Balanced,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::TermDominant => "TermDominant",
            Regime::LengthDominant => "LengthDominant",
            Regime::Balanced => "Balanced",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

type Q = Ratio<i128>;

/// Recover `x` as `p/q` with `q ≤ 10⁶` when `p as f64 / q as f64 == x`.
pub fn small_rational(x: f64) -> Option<Ratio<i128>> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 1_000_000 {
            return None;
        }
        if k2 != 0 && (h2 as f64) / (k2 as f64) == x {
            return Some(Ratio::new(h2, k2));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
    }
    None
}

/// Exact-or-tolerant comparison of two expressions that have both a
/// rational and a floating evaluation.
fn compare(exact: Option<(Q, Q)>, approx: (f64, f64)) -> Ordering {
    if let Some((a, b)) = exact {
        return a.cmp(&b);
    }
    let (a, b) = approx;
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= EXPONENT_TOLERANCE * scale {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Classify `(α, χ)` by comparing `αχ` with one.
pub fn classify_regime(alpha: f64, chi: f64) -> Result<Regime> {
    if !(alpha > 0.0 && chi > 0.0) {
        return Err(invalid(format!(
            "α = {alpha} and χ = {chi} must be positive"
        )));
    }
    let exact = small_rational(alpha)
        .zip(small_rational(chi))
        .and_then(|(a, c)| a.checked_mul(&c))
        .map(|p| (p, Q::from_integer(1)));
    Ok(match compare(exact, (alpha * chi, 1.0)) {
        Ordering::Greater => Regime::TermDominant,
        Ordering::Less => Regime::LengthDominant,
        Ordering::Equal => Regime::Balanced,
    })
}

/// Outcome of the two extra inequalities required in the length-dominant regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthDominantConditions {
    /// `αχ₀ > 1 + (α / k1) δ*`: needed for the tail index.
    pub tail_condition: bool,
    /// `αχ₀ > 1 + (1 − αχ) / 2`: needed for the extremal index.
    pub extremal_condition: bool,
}

pub fn check_t5_conditions(
    alpha: f64,
    chi: f64,
    k1: f64,
    k: f64,
    delta_star: f64,
) -> Result<LengthDominantConditions> {
    let chi0 = chi_upper(k1, k)?;
    if !(alpha > 0.0 && chi > 0.0 && delta_star > 0.0) {
        return Err(invalid("α, χ and δ* must be positive"));
    }
    let lhs = alpha * chi0;
    let rhs_d = 1.0 + alpha / k1 * delta_star;
    let rhs_e = 1.0 + 0.5 * (1.0 - alpha * chi);

    let rationals = (|| {
        let (a, c, k1q, kq, ds) = (
            small_rational(alpha)?,
            small_rational(chi)?,
            small_rational(k1)?,
            small_rational(k)?,
            small_rational(delta_star)?,
        );
        let one = Q::from_integer(1);
        let chi0 = kq
            .checked_sub(&k1q)?
            .checked_mul(&k1q.checked_mul(&kq.checked_add(&one)?)?.recip())?;
        let lhs = a.checked_mul(&chi0)?;
        let rhs_d = one.checked_add(&a.checked_mul(&k1q.recip())?.checked_mul(&ds)?)?;
        let half = Q::new(1, 2);
        let rhs_e = one.checked_add(&half.checked_mul(&one.checked_sub(&a.checked_mul(&c)?)?)?)?;
        Some((lhs, rhs_d, rhs_e))
    })();

    let tail_condition =
        compare(rationals.map(|(l, d, _)| (l, d)), (lhs, rhs_d)) == Ordering::Greater;
    let extremal_condition =
        compare(rationals.map(|(l, _, e)| (l, e)), (lhs, rhs_e)) == Ordering::Greater;
    Ok(LengthDominantConditions {
        tail_condition,
        extremal_condition,
    })
}

/// `min(1, ℓ(x) x^{-k})`.
pub fn marginal_tail(spec: &TailSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    spec.survival(x)
}
