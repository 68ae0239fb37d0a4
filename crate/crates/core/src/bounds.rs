//! Closed-form error and degree bounds, and sweeps that compare the
//! implemented estimators against the lower-bound shapes.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::criteria::{self, Criterion};
use crate::estimators::Estimator;
use crate::measures::MeasureFamily;
use crate::numerics::{compensated_sum, log_binomial};
use crate::{Error, Result};

/// A named parameter of a bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Param {
    Int(i64),
    Real(f64),
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Int(v as i64)
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Real(v)
    }
}

/// The outcome of comparing two sides of an inequality.
///
/// `holds` records whether the comparison documented for `name` is true;
/// `margin` is `lhs − rhs` unless stated otherwise by the producer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub params: BTreeMap<String, Param>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub margin: f64,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, holds: bool, margin: f64) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            lhs,
            rhs,
            holds,
            margin,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Param>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstAlgError {
    pub value: f64,
    /// `value · √(2πn)`.
    pub ratio: f64,
}

/// Average error of the zero-query constant `½` under the uniform input
/// measure: `Σ_k C(n,k) 2^{−n} |½ − k/n|`.
pub fn const_alg_error_exact(n: usize) -> Result<ConstAlgError> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let nf = n as f64;
    let ln2n = nf * LN_2;
    let value = compensated_sum((0..=n).map(|k| {
        let w = (log_binomial(n, k).expect("k <= n") - ln2n).exp();
        w * (0.5 - k as f64 / nf).abs()
    }));
    Ok(ConstAlgError {
        value,
        ratio: value * (2.0 * PI * nf).sqrt(),
    })
}

/// Checks `C(n, n/2 ± c√n) > e^{−6c²−2} 2^n / √(2πn)` in log space, with
/// `n/2 ± c√n` rounded both down and up (four binomials in all).
///
/// `lhs` is the smallest of the four log-binomials, `rhs` the log of the
/// right-hand side, and `margin = lhs − rhs`.
pub fn lemma61_check(n: usize, c: f64) -> Result<BoundCheck> {
    if n < 4 {
        return Err(Error::domain(format!("n = {n} must be at least 4")));
    }
    let nf = n as f64;
    let c_max = nf.sqrt() / 6.0;
    if !(1.0..=c_max).contains(&c) {
        return Err(Error::domain(format!("c = {c} outside [1, {c_max}]")));
    }
    let offset = c * nf.sqrt();
    let centers = [nf / 2.0 + offset, nf / 2.0 - offset];
    let mut lhs = f64::INFINITY;
    let mut check = BoundCheck::new("lemma61", 0.0, 0.0, false, 0.0)
        .with("n", n)
        .with("c", c);
    for (label, x) in ["plus", "minus"].iter().zip(centers) {
        for (round, k) in [("floor", x.floor()), ("ceil", x.ceil())] {
            let k = k as usize;
            lhs = lhs.min(log_binomial(n, k)?);
            check = check.with(&format!("k_{label}_{round}"), k);
        }
    }
    let rhs = -6.0 * c * c - 2.0 + nf * LN_2 - 0.5 * (2.0 * PI * nf).ln();
    check.lhs = lhs;
    check.rhs = rhs;
    check.holds = lhs > rhs;
    check.margin = lhs - rhs;
    Ok(check)
}

/// `e^{−6(m+1)²−2} / √(2π)`, the per-string density constant for the proof
/// parameter `m >= 1`.
pub fn lemma31_constant(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let m1 = (m + 1) as f64;
    Ok((-6.0 * m1 * m1 - 2.0).exp() / (2.0 * PI).sqrt())
}

/// Smallest integer `m` with `1 − p + p/m < ½`; needs `p > ½`.
pub fn lemma31_min_m(p: f64) -> Result<usize> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::domain(format!("p = {p} must lie in (1/2, 1]")));
    }
    let mut m = (p / (p - 0.5)).floor() as usize + 1;
    // the quotient can round down across an integer, e.g. at p = 0.51
    while 1.0 - p + p / m as f64 >= 0.5 {
        m += 1;
    }
    Ok(m)
}

/// `√(n/|k1−k2|) + √(κ(n−κ))/|k1−k2|` with `κ ∈ {k1, k2}` farthest from
/// `n/2` (ties go to `k1`).
pub fn nayakwu_degree_bound(n: usize, k1: usize, k2: usize) -> Result<f64> {
    if k1 == k2 {
        return Err(Error::domain("k1 and k2 must differ"));
    }
    if k1.max(k2) > n {
        return Err(Error::domain(format!("weights {k1}, {k2} exceed n = {n}")));
    }
    let half = n as f64 / 2.0;
    let kappa = if (half - k1 as f64).abs() >= (half - k2 as f64).abs() {
        k1
    } else {
        k2
    } as f64;
    let gap = k1.abs_diff(k2) as f64;
    let nf = n as f64;
    Ok((nf / gap).sqrt() + (kappa * (nf - kappa)).sqrt() / gap)
}

/// Lower-bound shape a sweep divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloorShape {
    /// `min(n^{−1/2}, T^{−1})`: average probabilistic error, uniform inputs.
    MinSqrtNInvT,
    /// `T^{−1}`: uniform means, and the expected-error forms.
    InvT,
}

impl FloorShape {
    /// Evaluates the shape; `T = 0` reads `T^{−1}` as infinite.
    pub fn eval(&self, n: usize, t: usize) -> f64 {
        let inv_t = if t == 0 {
            f64::INFINITY
        } else {
            1.0 / t as f64
        };
        match self {
            FloorShape::MinSqrtNInvT => (1.0 / (n as f64).sqrt()).min(inv_t),
            FloorShape::InvT => inv_t,
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "min-sqrt-n-inv-t" => Some(FloorShape::MinSqrtNInvT),
            "inv-t" => Some(FloorShape::InvT),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub estimators: Vec<Estimator>,
    pub criterion: Criterion,
    pub n_grid: Vec<usize>,
    pub budget_grid: Vec<usize>,
    /// `p` for probabilistic criteria, `q` for expected ones.
    pub level: f64,
    pub measure: Option<MeasureFamily>,
    pub shape: FloorShape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub name: String,
    pub n: usize,
    /// Budget `M` (or `T`) of the grid point; the floor is evaluated here.
    #[serde(rename = "T")]
    pub t: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub measure: Option<String>,
    pub value: f64,
    pub floor: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Evaluates every estimator at every `(n, T)` grid point and divides by
/// the floor shape.
///
/// Average probabilistic sweeps only make sense for `T = o(n)`; they reject
/// budgets above `n/8`.
pub fn floor_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    if cfg.n_grid.is_empty() || cfg.budget_grid.is_empty() || cfg.estimators.is_empty() {
        return Err(Error::domain("sweep grids must be nonempty"));
    }
    if cfg.criterion.is_average() && cfg.measure.is_none() {
        return Err(Error::domain(format!(
            "criterion {} needs a measure",
            cfg.criterion
        )));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        if cfg.criterion == Criterion::AvgProb {
            if let Some(&t) = cfg.budget_grid.iter().find(|&&t| 8 * t > n) {
                return Err(Error::domain(format!(
                    "budget T = {t} exceeds n/8 = {} for an average probabilistic sweep",
                    n / 8
                )));
            }
        }
        let mu = cfg.measure.as_ref().map(|m| m.build(n)).transpose()?;
        for est in &cfg.estimators {
            for &t in &cfg.budget_grid {
                let report = criteria::evaluate(cfg.criterion, *est, n, t, cfg.level, mu.as_ref())?;
                let floor = cfg.shape.eval(n, t);
                rows.push(SweepRow {
                    name: est.to_string(),
                    n,
                    t,
                    p: report.p,
                    q: report.q,
                    measure: report.measure,
                    value: report.value,
                    floor,
                    ratio: report.value / floor,
                });
            }
        }
    }
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SweepTable {
        rows,
        min_ratio,
        max_ratio,
    })
}
