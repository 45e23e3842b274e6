//! Stationary column sequences with known tail and extremal indices, and
//! the doubly-indexed arrays built from them.
//!
//! Every column is driven by a unit-Fréchet core `W_t` (`P{W ≤ w} = e^{-1/w}`)
//! whose dynamics fix the extremal index:
//!
//! ```text
//! IID            W_t = Z_t                                  θ = 1
//! ARMAX(φ)       W_t = max(φ W_{t-1}, (1 - φ) Z_t)          θ = 1 - φ
//! MovingMax(m)   W_t = max(Z_t, ..., Z_{t+m-1}) / m          θ = 1 / m
//! ```
//!
//! A strictly increasing map then gives the requested margin, which leaves
//! the extremal index unchanged.

use ndarray::{Array2, ShapeBuilder};
use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::regvar::{SeriesProfile, SlowlyVarying, TailSpec};
use crate::seeds::{derive_seed, rng_from_seed, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ColumnDynamics {
    Iid,
    Armax { phi: f64 },
    MovingMax { m: usize },
}

impl ColumnDynamics {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ColumnDynamics::Iid => Ok(()),
            ColumnDynamics::Armax { phi } if (0.0..1.0).contains(&phi) => Ok(()),
            ColumnDynamics::Armax { phi } => Err(invalid(format!(
                "ARMAX coefficient φ = {phi} must lie in [0, 1)"
            ))),
            ColumnDynamics::MovingMax { m } if m >= 1 => Ok(()),
            ColumnDynamics::MovingMax { .. } => {
                Err(invalid("moving-maxima window must be at least 1"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginFamily {
    /// `P{Y > x} = 1 - exp(-c x^{-k})`; needs a constant slowly varying factor.
    Frechet,
    /// `P{Y > x} = min(1, ℓ(x) x^{-k})` exactly.
    Pareto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnModel {
    pub marginal: TailSpec,
    pub dynamics: ColumnDynamics,
    pub margin_family: MarginFamily,
}

impl ColumnModel {
    pub fn frechet(k: f64, dynamics: ColumnDynamics) -> Self {
        ColumnModel {
            marginal: TailSpec::pareto(k),
            dynamics,
            margin_family: MarginFamily::Frechet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.marginal.validate()?;
        self.dynamics.validate()?;
        if self.margin_family == MarginFamily::Frechet
            && !matches!(self.marginal.ell, SlowlyVarying::Constant { .. })
        {
            return Err(invalid(
                "Fréchet margins need a constant slowly varying factor; use the pareto family for log-power factors",
            ));
        }
        Ok(())
    }

    pub fn with_tail_index(&self, k: f64) -> Self {
        ColumnModel {
            marginal: TailSpec { k, ..self.marginal },
            ..*self
        }
    }

    /// Exact marginal survival `P{Y > x}` of the sampled law.
    pub fn survival(&self, x: f64) -> f64 {
        let TailSpec { k, ell } = self.marginal;
        match self.margin_family {
            MarginFamily::Frechet => {
                if x <= 0.0 {
                    return 1.0;
                }
                let (c, _) = ell.parts();
                -(-c * x.powf(-k)).exp_m1()
            }
            MarginFamily::Pareto => {
                if x < self.marginal.x_min() {
                    1.0
                } else {
                    self.marginal.survival(x).unwrap_or(1.0)
                }
            }
        }
    }

    /// Map a unit-Fréchet value to this margin.
    fn transform(&self, w: f64, x_min: f64) -> f64 {
        let TailSpec { k, ell } = self.marginal;
        match (self.margin_family, ell) {
            (MarginFamily::Frechet, _) => (ell.parts().0 * w).powf(1.0 / k),
            (MarginFamily::Pareto, SlowlyVarying::Constant { c }) => {
                let p = -(-1.0 / w).exp_m1();
                (c / p).powf(1.0 / k).max(x_min)
            }
            (MarginFamily::Pareto, SlowlyVarying::LogPower { .. }) => {
                let p = -(-1.0 / w).exp_m1();
                self.marginal.upper_quantile(p)
            }
        }
    }
}

fn unit_frechet<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -1.0 / u.ln()
}

/// Unit-Fréchet core path of the given dynamics.
fn core_path(dynamics: ColumnDynamics, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    match dynamics {
        ColumnDynamics::Iid => (0..n).map(|_| unit_frechet(&mut rng)).collect(),
        ColumnDynamics::Armax { phi } => {
            let mut out = Vec::with_capacity(n);
            let mut prev = 0.0_f64;
            for t in 0..n {
                let z = unit_frechet(&mut rng);
                // W_0 = Z_0 is already stationary
                let w = if t == 0 {
                    z
                } else {
                    (phi * prev).max((1.0 - phi) * z)
                };
                out.push(w);
                prev = w;
            }
            out
        }
        ColumnDynamics::MovingMax { m } => {
            let z: Vec<f64> = (0..n + m - 1).map(|_| unit_frechet(&mut rng)).collect();
            let scale = m as f64;
            z.windows(m)
                .map(|w| w.iter().copied().fold(f64::NEG_INFINITY, f64::max) / scale)
                .collect()
        }
    }
}

/// Stationary path of length `n`, deterministic in `seed`.
pub fn sample_column(model: &ColumnModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sample_column needs n ≥ 1"));
    }
    model.validate()?;
    let x_min = model.marginal.x_min();
    let mut path = core_path(model.dynamics, n, seed);
    for v in path.iter_mut() {
        *v = model.transform(*v, x_min);
    }
    Ok(path)
}

/// Known extremal index of the column's dynamics.
pub fn true_extremal_index(model: &ColumnModel) -> f64 {
    match model.dynamics {
        ColumnDynamics::Iid => 1.0,
        ColumnDynamics::Armax { phi } => 1.0 - phi,
        ColumnDynamics::MovingMax { m } => 1.0 / m as f64,
    }
}

/// Dependence between the minimal-index columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Coupling {
    /// Mutually independent columns, independent of the bulk.
    IndependentColumns,
    /// Column `i` is `c_i^{1/k1}` times an independent base column.
    ScaledMinimalColumns { c: Vec<f64> },
    /// All minimal columns multiplied rowwise by one factor `B_t ~ U[lo, hi]`.
    SharedBoundedFactor { lo: f64, hi: f64 },
    /// Column `j` is `ρ^{j-1}` times column 1.
    OrderedRows { rho: f64 },
    /// Column `i ≥ 2` is the sum of all previous columns.
    CumulativeSums,
}

/// The doubly-indexed array `{Y_{t,i}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayModel {
    pub profile: SeriesProfile,
    /// Models for the minimal-index columns; may hold more than `profile.d`
    /// entries when the number of minimal columns is drawn at random.
    pub minimal_columns: Vec<ColumnModel>,
    pub bulk_column_template: ColumnModel,
    pub coupling: Coupling,
}

impl ArrayModel {
    pub fn validate(&self) -> Result<()> {
        let p = &self.profile;
        p.validate()?;
        if self.minimal_columns.len() < p.d {
            return Err(invalid(format!(
                "profile declares d = {} minimal columns but only {} models are given",
                p.d,
                self.minimal_columns.len()
            )));
        }
        for (i, col) in self.minimal_columns.iter().enumerate() {
            col.validate()?;
            if (col.marginal.k - p.k1).abs() > 1e-12 * p.k1 {
                return Err(invalid(format!(
                    "minimal column {} has tail index {} but the profile minimum is k1 = {}",
                    i + 1,
                    col.marginal.k,
                    p.k1
                )));
            }
        }
        self.bulk_column_template.validate()?;
        if !(self.bulk_column_template.marginal.k >= p.k) {
            return Err(invalid(format!(
                "bulk template tail index {} is below k = {}",
                self.bulk_column_template.marginal.k, p.k
            )));
        }
        match &self.coupling {
            Coupling::IndependentColumns | Coupling::CumulativeSums => {}
            Coupling::ScaledMinimalColumns { c } => {
                if c.len() < p.d {
                    return Err(invalid(format!(
                        "scaled coupling needs {} constants, got {}",
                        p.d,
                        c.len()
                    )));
                }
                if c.iter().any(|&ci| !(ci > 0.0 && ci.is_finite())) {
                    return Err(invalid("scaling constants must be positive"));
                }
            }
            Coupling::SharedBoundedFactor { lo, hi } => {
                if !(*lo >= 1.0 && lo < hi && hi.is_finite()) {
                    return Err(invalid(format!(
                        "bounded factor needs 1 ≤ lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            Coupling::OrderedRows { rho } => {
                if !(*rho > 0.0 && *rho <= 1.0) {
                    return Err(invalid(format!("row ratio ρ = {rho} must lie in (0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Copy of the model with `d` minimal columns.
    pub fn with_d(&self, d: usize) -> Result<Self> {
        let mut m = self.clone();
        m.profile.d = d;
        m.validate()?;
        Ok(m)
    }

    /// Model of column `i` (zero-based) beyond the minimal block.
    pub fn bulk_column(&self, i: usize) -> ColumnModel {
        let offset = i - self.profile.d;
        let k = self
            .profile
            .tail_indices
            .get(offset)
            .copied()
            .unwrap_or(self.bulk_column_template.marginal.k);
        self.bulk_column_template.with_tail_index(k)
    }

    /// Ground-truth extremal index of minimal column `j` (zero-based) as it
    /// appears in the array.
    pub fn minimal_theta(&self, j: usize) -> f64 {
        match self.coupling {
            Coupling::OrderedRows { .. } | Coupling::CumulativeSums => {
                true_extremal_index(&self.minimal_columns[0])
            }
            _ => true_extremal_index(&self.minimal_columns[j]),
        }
    }
}

/// Simulate an `n × l` realisation of the array; column seeds derive from `seed`.
pub fn sample_array(model: &ArrayModel, n: usize, l: usize, seed: u64) -> Result<Array2<f64>> {
    model.validate()?;
    let d = model.profile.d;
    if n == 0 {
        return Err(invalid("sample_array needs n ≥ 1"));
    }
    if l < d {
        return Err(invalid(format!("array width l = {l} is below d = {d}")));
    }
    let col_seed = |i: usize| derive_seed(seed, &[tag::COLUMN, i as u64]);
    let mut data = Vec::with_capacity(n * l);

    let k1 = model.profile.k1;
    match &model.coupling {
        Coupling::IndependentColumns => {
            for j in 0..d {
                data.extend(sample_column(&model.minimal_columns[j], n, col_seed(j))?);
            }
        }
        Coupling::ScaledMinimalColumns { c } => {
            for (j, cj) in c.iter().enumerate().take(d) {
                let s = cj.powf(1.0 / k1);
                data.extend(
                    sample_column(&model.minimal_columns[j], n, col_seed(j))?
                        .into_iter()
                        .map(|v| s * v),
                );
            }
        }
        Coupling::SharedBoundedFactor { lo, hi } => {
            let mut rng = rng_from_seed(derive_seed(seed, &[tag::FACTOR]));
            let factor: Vec<f64> = (0..n).map(|_| rng.random_range(*lo..*hi)).collect();
            for j in 0..d {
                let col = sample_column(&model.minimal_columns[j], n, col_seed(j))?;
                data.extend(col.iter().zip(&factor).map(|(v, b)| v * b));
            }
        }
        Coupling::OrderedRows { rho } => {
            let base = sample_column(&model.minimal_columns[0], n, col_seed(0))?;
            for j in 0..d {
                let s = rho.powi(j as i32);
                data.extend(base.iter().map(|v| s * v));
            }
        }
        Coupling::CumulativeSums => {
            let base = sample_column(&model.minimal_columns[0], n, col_seed(0))?;
            let mut running = base.clone();
            data.extend_from_slice(&base);
            for _ in 1..d {
                data.extend_from_slice(&running);
                for (r, v) in running.iter_mut().zip(&data[data.len() - n..]) {
                    *r += *v;
                }
            }
        }
    }
    for i in d..l {
        data.extend(sample_column(&model.bulk_column(i), n, col_seed(i))?);
    }
    Ok(Array2::from_shape_vec((n, l).f(), data).expect("column-major buffer has n·l entries"))
}

/// Limits `c_i = lim P{Y_i > x} / (x^{-k1} ℓ1(x))` for the minimal columns,
/// where `ℓ1` is the slowly varying factor of the first column.
pub fn a2_constants(model: &ArrayModel) -> Result<Vec<f64>> {
    model.validate()?;
    let d = model.profile.d;
    let k1 = model.profile.k1;
    let ell1 = model.minimal_columns[0].marginal.ell;
    let ratio = |j: usize| -> Result<f64> {
        model.minimal_columns[j]
            .marginal
            .ell
            .ratio_limit(&ell1)
            .ok_or_else(|| {
                invalid(format!(
                "column {} has a heavier slowly varying factor than column 1; the limit diverges",
                j + 1
            ))
            })
    };
    match &model.coupling {
        Coupling::IndependentColumns => (0..d).map(ratio).collect(),
        Coupling::ScaledMinimalColumns { c } => (0..d).map(|j| Ok(c[j] * ratio(j)?)).collect(),
        Coupling::SharedBoundedFactor { lo, hi } => {
            let moment = (hi.powf(k1 + 1.0) - lo.powf(k1 + 1.0)) / ((k1 + 1.0) * (hi - lo));
            (0..d).map(|j| Ok(moment * ratio(j)?)).collect()
        }
        Coupling::OrderedRows { .. } | Coupling::CumulativeSums => Err(invalid(
            "coupling has no marginal-ratio constants; use the pathwise ordering analysis",
        )),
    }
}
