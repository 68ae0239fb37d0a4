//! Error functionals over exact outcome distributions.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::estimators::{Estimator, OutcomeDistribution, MERGE_TOLERANCE};
use crate::measures::SymmetricMeasure;
use crate::numerics::{compensated_sum, WeightClass};
use crate::{Error, Result};

/// Rounding slack when comparing accumulated probability against `p`.
pub const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Quantile,
    WorstProb,
    AvgProb,
    ExpectedLq,
    WorstExpected,
    AvgExpected,
}

impl Criterion {
    pub fn tag(&self) -> &'static str {
        match self {
            Criterion::Quantile => "quantile",
            Criterion::WorstProb => "worst-prob",
            Criterion::AvgProb => "avg-prob",
            Criterion::ExpectedLq => "expected-Lq",
            Criterion::WorstExpected => "worst-expected",
            Criterion::AvgExpected => "avg-expected",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        [
            Criterion::Quantile,
            Criterion::WorstProb,
            Criterion::AvgProb,
            Criterion::ExpectedLq,
            Criterion::WorstExpected,
            Criterion::AvgExpected,
        ]
        .into_iter()
        .find(|c| c.tag() == tag)
    }

    pub fn is_average(&self) -> bool {
        matches!(self, Criterion::AvgProb | Criterion::AvgExpected)
    }

    pub fn is_probabilistic(&self) -> bool {
        matches!(
            self,
            Criterion::Quantile | Criterion::WorstProb | Criterion::AvgProb
        )
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One evaluated error criterion with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub criterion: Criterion,
    /// Set once the value has been multiplied by `n` (count accuracy).
    pub count_scaled: bool,
    pub n: usize,
    pub queries: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub measure: Option<String>,
    pub value: f64,
}

impl ErrorReport {
    /// `worst-prob`, or `count:worst-prob` after scaling.
    pub fn criterion_tag(&self) -> String {
        if self.count_scaled {
            format!("count:{}", self.criterion)
        } else {
            self.criterion.to_string()
        }
    }
}

/// Smallest `γ` among the attained deviations `|a − â|` whose cumulative
/// probability reaches `p`.
pub fn quantile_error(d: &OutcomeDistribution, a: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!(
            "probability level p = {p} outside (0, 1]"
        )));
    }
    let mut devs: Vec<(f64, f64)> = d
        .atoms()
        .iter()
        .map(|at| ((a - at.estimate).abs(), at.prob))
        .collect();
    devs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut cumulative = 0.0;
    let mut i = 0;
    while i < devs.len() {
        // deviations that agree up to rounding form one tie group
        let start = devs[i].0;
        let mut gamma = start;
        while i < devs.len() && devs[i].0 - start <= MERGE_TOLERANCE {
            cumulative += devs[i].1;
            gamma = devs[i].0;
            i += 1;
        }
        if cumulative >= p - PROB_SLACK {
            return Ok(gamma);
        }
    }
    Ok(devs.last().map_or(0.0, |x| x.0))
}

/// `(Σ |a − â|^q P(â))^{1/q}`.
pub fn expected_error(d: &OutcomeDistribution, a: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    let moment = compensated_sum(
        d.atoms()
            .iter()
            .map(|at| (a - at.estimate).abs().powf(q) * at.prob),
    );
    Ok(moment.max(0.0).powf(1.0 / q))
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "moment order q = {q} outside [1, inf)"
        )))
    }
}

fn check_success_level(p: f64) -> Result<()> {
    if p > 0.5 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "probability level p = {p} outside (1/2, 1]"
        )))
    }
}

fn check_measure(mu: &SymmetricMeasure, n: usize) -> Result<()> {
    if mu.n() == n {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "measure is over n = {} but n = {n} was requested",
            mu.n()
        )))
    }
}

/// Evaluates `f` on every weight class in parallel; results stay in `k` order.
fn per_class<F>(est: Estimator, n: usize, budget: usize, f: F) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&OutcomeDistribution) -> Result<f64> + Sync,
{
    let classes: Vec<WeightClass> = WeightClass::all(n)?.collect();
    let evaluated = classes
        .into_par_iter()
        .map(|w| {
            let d = est.distribution(w, budget)?;
            Ok((f(&d)?, d.queries()))
        })
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let queries = evaluated[0].1;
    Ok((evaluated.into_iter().map(|(v, _)| v).collect(), queries))
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn weighted(values: &[f64], mu: &SymmetricMeasure) -> f64 {
    compensated_sum(values.iter().zip(mu.class_prob()).map(|(v, w)| v * w))
}

/// Per-class probabilistic errors `e((n,k), T, p)` for `k = 0..=n`.
pub fn quantile_profile(
    est: Estimator,
    n: usize,
    budget: usize,
    p: f64,
) -> Result<(Vec<f64>, usize)> {
    per_class(est, n, budget, |d| quantile_error(d, d.input().mean(), p))
}

/// Per-class expected errors for `k = 0..=n`.
pub fn expected_profile(
    est: Estimator,
    n: usize,
    budget: usize,
    q: f64,
) -> Result<(Vec<f64>, usize)> {
    check_q(q)?;
    per_class(est, n, budget, |d| expected_error(d, d.input().mean(), q))
}

pub fn worst_prob_error(est: Estimator, n: usize, budget: usize, p: f64) -> Result<ErrorReport> {
    check_success_level(p)?;
    let (values, queries) = quantile_profile(est, n, budget, p)?;
    Ok(ErrorReport {
        criterion: Criterion::WorstProb,
        count_scaled: false,
        n,
        queries,
        p: Some(p),
        q: None,
        measure: None,
        value: max_of(&values),
    })
}

pub fn avg_prob_error(
    est: Estimator,
    n: usize,
    budget: usize,
    p: f64,
    mu: &SymmetricMeasure,
) -> Result<ErrorReport> {
    check_success_level(p)?;
    check_measure(mu, n)?;
    let (values, queries) = quantile_profile(est, n, budget, p)?;
    Ok(ErrorReport {
        criterion: Criterion::AvgProb,
        count_scaled: false,
        n,
        queries,
        p: Some(p),
        q: None,
        measure: Some(mu.label().to_string()),
        value: weighted(&values, mu),
    })
}

pub fn worst_expected_error(
    est: Estimator,
    n: usize,
    budget: usize,
    q: f64,
) -> Result<ErrorReport> {
    let (values, queries) = expected_profile(est, n, budget, q)?;
    Ok(ErrorReport {
        criterion: Criterion::WorstExpected,
        count_scaled: false,
        n,
        queries,
        p: None,
        q: Some(q),
        measure: None,
        value: max_of(&values),
    })
}

pub fn avg_expected_error(
    est: Estimator,
    n: usize,
    budget: usize,
    q: f64,
    mu: &SymmetricMeasure,
) -> Result<ErrorReport> {
    check_measure(mu, n)?;
    let (values, queries) = expected_profile(est, n, budget, q)?;
    Ok(ErrorReport {
        criterion: Criterion::AvgExpected,
        count_scaled: false,
        n,
        queries,
        p: None,
        q: Some(q),
        measure: Some(mu.label().to_string()),
        value: weighted(&values, mu),
    })
}

/// Dispatches on the criterion tag. Average criteria require `mu`.
pub fn evaluate(
    criterion: Criterion,
    est: Estimator,
    n: usize,
    budget: usize,
    level: f64,
    mu: Option<&SymmetricMeasure>,
) -> Result<ErrorReport> {
    let need_mu =
        || mu.ok_or_else(|| Error::domain(format!("criterion {criterion} needs a measure")));
    match criterion {
        Criterion::WorstProb => worst_prob_error(est, n, budget, level),
        Criterion::AvgProb => avg_prob_error(est, n, budget, level, need_mu()?),
        Criterion::WorstExpected => worst_expected_error(est, n, budget, level),
        Criterion::AvgExpected => avg_expected_error(est, n, budget, level, need_mu()?),
        Criterion::Quantile | Criterion::ExpectedLq => Err(Error::domain(format!(
            "criterion {criterion} is per input; use a worst or average form"
        ))),
    }
}

/// Converts a mean-error report into the matching count-error report.
pub fn count_scaled(r: &ErrorReport) -> Result<ErrorReport> {
    if r.count_scaled {
        return Err(Error::domain("report is already count-scaled"));
    }
    Ok(ErrorReport {
        count_scaled: true,
        value: r.n as f64 * r.value,
        ..r.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovBound {
    pub delta: f64,
    pub p: f64,
}

/// Turns an expected-error budget `eps` into a probabilistic one:
/// accuracy `a·eps` at level `1 − a^{−q}`.
pub fn markov_quantile_bound(eps: f64, q: f64, a: f64) -> Result<MarkovBound> {
    if !(a > 2.0 && a.is_finite()) {
        return Err(Error::domain(format!(
            "Markov factor a = {a} must exceed 2"
        )));
    }
    check_q(q)?;
    if !(eps >= 0.0) {
        return Err(Error::domain(format!(
            "accuracy eps = {eps} must be nonnegative"
        )));
    }
    Ok(MarkovBound {
        delta: a * eps,
        p: 1.0 - a.powf(-q),
    })
}
