//! Permutation-invariant probability measures on `n`-bit inputs.
//!
//! A measure is stored by the total mass of each weight class; the
//! probability of an individual string is that mass split evenly over the
//! `C(n,k)` strings of the class.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::numerics::{compensated_sum, log_binomial};
use crate::{Error, Result};

const UNIT_MASS_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricMeasure {
    n: usize,
    class_prob: Vec<f64>,
    label: String,
}

impl SymmetricMeasure {
    /// All `2^n` inputs equally likely.
    pub fn uniform_inputs(n: usize) -> Result<Self> {
        check_n(n)?;
        let ln2n = n as f64 * std::f64::consts::LN_2;
        let raw = (0..=n)
            .map(|k| log_binomial(n, k).map(|l| (l - ln2n).exp()))
            .collect::<Result<Vec<_>>>()?;
        let total = compensated_sum(raw.iter().copied());
        Ok(Self {
            n,
            class_prob: raw.into_iter().map(|p| p / total).collect(),
            label: "uniform-inputs".into(),
        })
    }

    /// All `n + 1` values of the mean equally likely.
    pub fn uniform_means(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            class_prob: vec![1.0 / (n + 1) as f64; n + 1],
            label: "uniform-means".into(),
        })
    }

    /// Builds a measure from nonnegative class weights.
    ///
    /// Weights whose total is within 1% of one are rescaled to unit mass;
    /// anything further off is rejected.
    pub fn from_class_weights(weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::domain("a measure needs at least two weight classes"));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!(
                "class weight {bad} is not a probability"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > UNIT_MASS_TOLERANCE {
            return Err(Error::domain(format!(
                "class weights sum to {total}, more than 1% away from unit mass"
            )));
        }
        Ok(Self {
            n: weights.len() - 1,
            class_prob: weights.into_iter().map(|w| w / total).collect(),
            label: label.into(),
        })
    }

    /// Parses the plain-text format: `n` on the first line, then `n + 1`
    /// class weights. `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut entries = text.lines().enumerate().filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then_some((i + 1, body))
        });
        let (line, first) = entries.next().ok_or(Error::MeasureFile {
            line: 1,
            msg: "missing n".into(),
        })?;
        let n: usize = first.parse().map_err(|_| Error::MeasureFile {
            line,
            msg: format!("expected a positive integer n, found `{first}`"),
        })?;
        check_n(n).map_err(|e| Error::MeasureFile {
            line,
            msg: e.to_string(),
        })?;
        let mut weights = Vec::with_capacity(n + 1);
        for (line, body) in entries {
            let w: f64 = body.parse().map_err(|_| Error::MeasureFile {
                line,
                msg: format!("expected a decimal class weight, found `{body}`"),
            })?;
            weights.push(w);
        }
        if weights.len() != n + 1 {
            return Err(Error::MeasureFile {
                line: text.lines().count(),
                msg: format!("expected {} class weights, found {}", n + 1, weights.len()),
            });
        }
        Self::from_class_weights(weights, label)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, format!("file:{}", path.display()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn class_prob(&self) -> &[f64] {
        &self.class_prob
    }

    /// Probability of one particular string of weight `k`.
    pub fn per_string(&self, k: usize) -> Result<f64> {
        Ok(self.ln_per_string(k)?.exp())
    }

    /// Natural log of [`per_string`](Self::per_string); `-inf` on empty classes.
    pub fn ln_per_string(&self, k: usize) -> Result<f64> {
        let lc = log_binomial(self.n, k)?;
        Ok(self.class_prob[k].ln() - lc)
    }
}

impl fmt::Display for SymmetricMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::domain("number of variables n must be positive"))
    } else {
        Ok(())
    }
}

/// A measure named independently of `n`, instantiated per problem size.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureFamily {
    UniformInputs,
    UniformMeans,
    Fixed(SymmetricMeasure),
}

impl MeasureFamily {
    /// Accepts `uniform-inputs`, `uniform-means`, or a path to a measure file.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "uniform-inputs" | "mu1" => Ok(MeasureFamily::UniformInputs),
            "uniform-means" | "mu2" => Ok(MeasureFamily::UniformMeans),
            path => Ok(MeasureFamily::Fixed(SymmetricMeasure::load(Path::new(
                path,
            ))?)),
        }
    }

    pub fn build(&self, n: usize) -> Result<SymmetricMeasure> {
        match self {
            MeasureFamily::UniformInputs => SymmetricMeasure::uniform_inputs(n),
            MeasureFamily::UniformMeans => SymmetricMeasure::uniform_means(n),
            MeasureFamily::Fixed(mu) if mu.n() == n => Ok(mu.clone()),
            MeasureFamily::Fixed(mu) => Err(Error::domain(format!(
                "measure {} is over n = {}, not n = {n}",
                mu.label(),
                mu.n()
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            MeasureFamily::UniformInputs => "uniform-inputs".into(),
            MeasureFamily::UniformMeans => "uniform-means".into(),
            MeasureFamily::Fixed(mu) => mu.label().to_string(),
        }
    }
}

/// A run of consecutive weights `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexWindow {
    n: usize,
    lo: usize,
    hi: usize,
}

impl IndexWindow {
    pub fn new(n: usize, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::domain(format!("empty window {lo}..={hi}")));
        }
        if hi > n {
            return Err(Error::domain(format!("window {lo}..={hi} exceeds n = {n}")));
        }
        Ok(Self { n, lo, hi })
    }

    /// `{⌈n/4⌉, ..., ⌊3n/4⌋}`.
    pub fn middle_half(n: usize) -> Result<Self> {
        Self::new(n, n.div_ceil(4), 3 * n / 4)
    }

    /// `{n/2 − √n, ..., n/2 + √n}`, endpoints rounded inward and clamped.
    pub fn central_sqrt(n: usize) -> Result<Self> {
        let half = n as f64 / 2.0;
        let r = (n as f64).sqrt();
        let lo = (half - r).ceil().max(0.0) as usize;
        let hi = ((half + r).floor() as usize).min(n);
        Self::new(n, lo, hi)
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }

    /// `min k(n−k)/n²` over the window.
    pub fn balancedness(&self) -> f64 {
        let n = self.n as f64;
        self.iter()
            .map(|k| k as f64 * (n - k as f64) / (n * n))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub worst_ratio: f64,
    pub balancedness: f64,
}

/// Exact ties such as `(1/196)·98/0.5` may round just below one.
pub const RATIO_SLACK: f64 = 1e-12;

/// Checks `classProb[k] >= c/|I|` for every `k` in the window, which is the
/// per-string lower bound `c / (|I|·C(n,k))` restated per class.
pub fn thm31_condition(
    mu: &SymmetricMeasure,
    window: &IndexWindow,
    c: f64,
) -> Result<ConditionReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("constant c = {c} must be positive")));
    }
    if window.n != mu.n {
        return Err(Error::domain(format!(
            "window is over n = {} but the measure is over n = {}",
            window.n, mu.n
        )));
    }
    let width = window.len() as f64;
    let worst_ratio = window
        .iter()
        .map(|k| mu.class_prob[k] * width / c)
        .fold(f64::INFINITY, f64::min);
    Ok(ConditionReport {
        holds: worst_ratio >= 1.0 - RATIO_SLACK,
        worst_ratio,
        balancedness: window.balancedness(),
    })
}
