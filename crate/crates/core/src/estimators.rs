//! Exact outcome distributions of Boolean-mean estimators.
//!
//! Every estimator here is symmetric in the input bits, so its output
//! distribution depends on the input only through the weight class.

use std::f64::consts::PI;
use std::fmt;

use num::Complex;
use serde::Serialize;

use crate::numerics::{binomial_pmf, compensated_sum, log_binomial, WeightClass};
use crate::{Error, Result};

/// Estimates closer than this are treated as the same outcome.
pub const MERGE_TOLERANCE: f64 = 1e-12;
/// Atoms at or below this mass are dropped after merging.
pub const PRUNE_MASS: f64 = 1e-15;
/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Largest counter register simulated by [`ae_unitary_oracle`].
pub const ORACLE_MAX_M: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub estimate: f64,
    pub prob: f64,
}

/// A finite distribution over estimates `â ∈ [0,1]` for one weight class.
///
/// Atoms are sorted by estimate, with estimates closer than
/// [`MERGE_TOLERANCE`] merged into one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    input: WeightClass,
    queries: usize,
    atoms: Vec<Atom>,
}

impl OutcomeDistribution {
    pub fn from_atoms(
        input: WeightClass,
        queries: usize,
        raw: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let mut atoms = Vec::new();
        for (estimate, prob) in raw {
            if !(estimate.is_finite() && prob.is_finite()) || prob < 0.0 {
                return Err(Error::domain(format!("invalid atom ({estimate}, {prob})")));
            }
            if !(-MERGE_TOLERANCE..=1.0 + MERGE_TOLERANCE).contains(&estimate) {
                return Err(Error::domain(format!("estimate {estimate} outside [0, 1]")));
            }
            atoms.push(Atom {
                estimate: estimate.clamp(0.0, 1.0),
                prob,
            });
        }
        atoms.sort_by(|a, b| a.estimate.total_cmp(&b.estimate));

        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if atom.estimate - last.estimate <= MERGE_TOLERANCE => {
                    last.prob += atom.prob;
                }
                _ => merged.push(atom),
            }
        }
        merged.retain(|a| a.prob > PRUNE_MASS);

        let total = compensated_sum(merged.iter().map(|a| a.prob));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!(
                "outcome probabilities sum to {total}"
            )));
        }
        Ok(Self {
            input,
            queries,
            atoms: merged,
        })
    }

    pub fn input(&self) -> WeightClass {
        self.input
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.prob))
    }

    /// Pushes every estimate through `f` and re-merges coinciding outcomes.
    pub fn map_estimates(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_atoms(
            self.input,
            self.queries,
            self.atoms.iter().map(|a| (f(a.estimate), a.prob)),
        )
    }

    /// Rounds each estimate to the nearest multiple of `1/n`, i.e. reports
    /// the nearest integer count divided by `n`.
    pub fn round_to_count(&self) -> Result<Self> {
        let n = self.input.n() as f64;
        self.map_estimates(|e| (e * n).round() / n)
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        compensated_sum(
            self.atoms
                .iter()
                .filter(|a| pred(a.estimate))
                .map(|a| a.prob),
        )
    }
}

/// Total-variation distance, matching estimates within [`MERGE_TOLERANCE`].
pub fn total_variation(a: &OutcomeDistribution, b: &OutcomeDistribution) -> f64 {
    let (xs, ys) = (a.atoms(), b.atoms());
    let (mut i, mut j) = (0, 0);
    let mut acc = Vec::with_capacity(xs.len() + ys.len());
    while i < xs.len() || j < ys.len() {
        match (xs.get(i), ys.get(j)) {
            (Some(x), Some(y)) if (x.estimate - y.estimate).abs() <= MERGE_TOLERANCE => {
                acc.push((x.prob - y.prob).abs());
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.estimate < y.estimate => {
                acc.push(x.prob);
                i += 1;
            }
            (Some(_), Some(y)) | (None, Some(y)) => {
                acc.push(y.prob);
                j += 1;
            }
            (Some(x), None) => {
                acc.push(x.prob);
                i += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    0.5 * compensated_sum(acc)
}

/// The leakage kernel `sin²(Mπx) / (M² sin²(πx))`, one at integers.
fn fejer_kernel(m: usize, x: f64) -> f64 {
    let x = x - x.round();
    if x == 0.0 {
        return 1.0;
    }
    let ratio = (m as f64 * PI * x).sin() / (m as f64 * (PI * x).sin());
    ratio * ratio
}

fn eigenphase(w: WeightClass) -> f64 {
    w.mean().sqrt().asin() / PI
}

fn grid_estimate(j: usize, m: usize) -> f64 {
    let s = (PI * j as f64 / m as f64).sin();
    s * s
}

/// Amplitude estimation with an `M`-outcome counter register.
///
/// Outcome `j` reports `sin²(πj/M)` and occurs with probability
/// `½[F(j/M − ω) + F(j/M + ω)]` where `ω = arcsin(√a)/π`. The query count is
/// recorded as `M`.
pub fn ae_distribution(w: WeightClass, m: usize) -> Result<OutcomeDistribution> {
    if m < 2 {
        return Err(Error::domain(format!(
            "counter size M = {m} must be at least 2"
        )));
    }
    let omega = eigenphase(w);
    let mf = m as f64;
    let atoms = (0..m).map(|j| {
        let x = j as f64 / mf;
        let p = 0.5 * (fejer_kernel(m, x - omega) + fejer_kernel(m, x + omega));
        (grid_estimate(j, m), p)
    });
    OutcomeDistribution::from_atoms(w, m, atoms)
}

/// In-place discrete Fourier transform with kernel `e^{sign·2πi·xy/M}/√M`.
fn dft(v: &[Complex<f64>], sign: f64) -> Vec<Complex<f64>> {
    let m = v.len();
    let twiddle: Vec<Complex<f64>> = (0..m)
        .map(|t| Complex::from_polar(1.0, sign * 2.0 * PI * t as f64 / m as f64))
        .collect();
    let norm = 1.0 / (m as f64).sqrt();
    (0..m)
        .map(|y| {
            let mut acc = Complex::new(0.0, 0.0);
            for (x, amp) in v.iter().enumerate() {
                acc += amp * twiddle[(x * y) % m];
            }
            acc * norm
        })
        .collect()
}

/// Phase estimation simulated on its `2M`-dimensional state space.
///
/// The target lives in the plane spanned by the "bad" and "good" basis
/// states, where the Grover iterate acts as a rotation by `2θ`,
/// `sin²θ = a`. The counter starts in the Fourier transform of `|0⟩`,
/// controls `G^x` on branch `x`, and is measured after an inverse transform.
pub fn ae_unitary_oracle(w: WeightClass, m: usize) -> Result<OutcomeDistribution> {
    if !(2..=ORACLE_MAX_M).contains(&m) {
        return Err(Error::domain(format!(
            "oracle counter size M = {m} outside 2..={ORACLE_MAX_M}"
        )));
    }
    let theta = w.mean().sqrt().asin();
    let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let psi = [theta.cos(), theta.sin()];

    let mut counter = vec![Complex::new(0.0, 0.0); m];
    counter[0] = Complex::new(1.0, 0.0);
    let counter = dft(&counter, 1.0);

    // amplitudes[component][x]
    let mut bad = Vec::with_capacity(m);
    let mut good = Vec::with_capacity(m);
    for (x, amp) in counter.iter().enumerate() {
        let mut t = psi;
        for _ in 0..x {
            t = [c * t[0] - s * t[1], s * t[0] + c * t[1]];
        }
        bad.push(amp * t[0]);
        good.push(amp * t[1]);
    }
    let bad = dft(&bad, -1.0);
    let good = dft(&good, -1.0);

    let atoms = (0..m).map(|y| (grid_estimate(y, m), bad[y].norm_sqr() + good[y].norm_sqr()));
    OutcomeDistribution::from_atoms(w, m, atoms)
}

/// Order statistic used as the median of `r` draws: the lower median
/// `⌈r/2⌉` (the unique median when `r` is odd).
pub fn median_rank(r: usize) -> usize {
    r.div_ceil(2)
}

/// `P(Bin(r, f) >= m)` with `g = 1 − f` supplied separately for accuracy.
fn binomial_upper_tail(r: usize, m: usize, f: f64, g: f64) -> f64 {
    compensated_sum((m..=r).map(|i| {
        let lc = log_binomial(r, i).expect("i <= r");
        let term = lc.exp() * f.powi(i as i32) * g.powi((r - i) as i32);
        if term.is_finite() {
            term
        } else {
            0.0
        }
    }))
}

/// Distribution of the median of `r` independent runs of `d`.
///
/// Uses `P(median <= v) = P(Bin(r, F(v)) >= m)` and differences over the
/// support. Queries add up to `r·T`.
pub fn median_of_reps(d: &OutcomeDistribution, r: usize) -> Result<OutcomeDistribution> {
    if r == 0 {
        return Err(Error::domain("number of repetitions must be at least 1"));
    }
    if r == 1 {
        return Ok(d.clone());
    }
    let atoms = d.atoms();
    let m = median_rank(r);
    let mut below = 0.0;
    let mut suffix: Vec<f64> = vec![0.0; atoms.len() + 1];
    for i in (0..atoms.len()).rev() {
        suffix[i] = suffix[i + 1] + atoms[i].prob;
    }
    let mut prev_tail = 0.0;
    let mut out = Vec::with_capacity(atoms.len());
    for (i, atom) in atoms.iter().enumerate() {
        below += atom.prob;
        let tail = binomial_upper_tail(r, m, below.min(1.0), suffix[i + 1].max(0.0));
        out.push((atom.estimate, (tail - prev_tail).max(0.0)));
        prev_tail = tail;
    }
    OutcomeDistribution::from_atoms(d.input(), r * d.queries(), out)
}

/// Zero queries, always answers ½.
pub fn constant_half(w: WeightClass) -> OutcomeDistribution {
    OutcomeDistribution {
        input: w,
        queries: 0,
        atoms: vec![Atom {
            estimate: 0.5,
            prob: 1.0,
        }],
    }
}

/// `T` classical samples with replacement; reports the sample mean.
pub fn classical_bernoulli(w: WeightClass, t: usize) -> Result<OutcomeDistribution> {
    if t == 0 {
        return Err(Error::domain("classical sampling needs at least one query"));
    }
    let a = w.mean();
    let atoms = (0..=t)
        .map(|i| Ok((i as f64 / t as f64, binomial_pmf(t, i, a)?)))
        .collect::<Result<Vec<_>>>()?;
    OutcomeDistribution::from_atoms(w, t, atoms)
}

/// The partial function that is 1 on weight `k1` and 0 on weight `k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartialFnSpec {
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
}

impl PartialFnSpec {
    pub fn new(n: usize, k1: usize, k2: usize) -> Result<Self> {
        if !(k2 < k1 && k1 <= n) {
            return Err(Error::domain(format!(
                "need 0 <= k2 < k1 <= n, got n={n} k1={k1} k2={k2}"
            )));
        }
        Ok(Self { n, k1, k2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistinguisherOutcome {
    pub accept1: f64,
    pub accept2: f64,
    pub fail1: f64,
    pub fail2: f64,
}

/// Probability that the thresholding test `|k1 − n·â| < threshold` accepts.
pub fn acceptance_probability(d: &OutcomeDistribution, k1: usize, threshold: f64) -> f64 {
    let n = d.input().n() as f64;
    let k1 = k1 as f64;
    d.mass_where(|e| (k1 - n * e).abs() < threshold)
}

/// Runs the thresholding distinguisher for `f_{k1,k2}` on both classes.
pub fn distinguisher(
    dk1: &OutcomeDistribution,
    dk2: &OutcomeDistribution,
    spec: PartialFnSpec,
    threshold: f64,
) -> Result<DistinguisherOutcome> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!(
            "threshold {threshold} must be positive"
        )));
    }
    let (w1, w2) = (dk1.input(), dk2.input());
    if w1.n() != spec.n || w2.n() != spec.n {
        return Err(Error::domain(
            "distribution size does not match the partial function",
        ));
    }
    if w1.k() != spec.k1 || w2.k() != spec.k2 {
        return Err(Error::domain("distributions must be for weights k1 and k2"));
    }
    if dk1.queries() != dk2.queries() {
        return Err(Error::domain(format!(
            "query budgets differ: {} vs {}",
            dk1.queries(),
            dk2.queries()
        )));
    }
    let accept1 = acceptance_probability(dk1, spec.k1, threshold);
    let accept2 = acceptance_probability(dk2, spec.k1, threshold);
    Ok(DistinguisherOutcome {
        accept1,
        accept2,
        fail1: 1.0 - accept1,
        fail2: accept2,
    })
}

/// Selects one of the implemented estimators.
///
/// The budget passed to [`Estimator::distribution`] is the counter size `M`
/// for the amplitude-estimation family and the sample count for the
/// classical baseline; the constant ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    AmplitudeEstimation { round_to_count: bool },
    AmplitudeOracle,
    MedianOfReps { reps: usize, round_to_count: bool },
    ConstantHalf,
    ClassicalBernoulli,
}

impl Estimator {
    pub const AE: Estimator = Estimator::AmplitudeEstimation {
        round_to_count: false,
    };

    pub fn median(reps: usize) -> Self {
        Estimator::MedianOfReps {
            reps,
            round_to_count: false,
        }
    }

    pub fn distribution(&self, w: WeightClass, budget: usize) -> Result<OutcomeDistribution> {
        match *self {
            Estimator::AmplitudeEstimation { round_to_count } => {
                let d = ae_distribution(w, budget)?;
                if round_to_count {
                    d.round_to_count()
                } else {
                    Ok(d)
                }
            }
            Estimator::AmplitudeOracle => ae_unitary_oracle(w, budget),
            Estimator::MedianOfReps {
                reps,
                round_to_count,
            } => {
                let mut d = ae_distribution(w, budget)?;
                if round_to_count {
                    d = d.round_to_count()?;
                }
                median_of_reps(&d, reps)
            }
            Estimator::ConstantHalf => Ok(constant_half(w)),
            Estimator::ClassicalBernoulli => classical_bernoulli(w, budget),
        }
    }

    /// True for the estimators built on quantum phase estimation.
    pub fn is_quantum(&self) -> bool {
        matches!(
            self,
            Estimator::AmplitudeEstimation { .. }
                | Estimator::AmplitudeOracle
                | Estimator::MedianOfReps { .. }
        )
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let round = |r: bool| if r { "+count" } else { "" };
        match *self {
            Estimator::AmplitudeEstimation { round_to_count } => {
                write!(f, "ae{}", round(round_to_count))
            }
            Estimator::AmplitudeOracle => f.write_str("ae-oracle"),
            Estimator::MedianOfReps {
                reps,
                round_to_count,
            } => {
                write!(f, "median-reps{}:r={reps}", round(round_to_count))
            }
            Estimator::ConstantHalf => f.write_str("constant"),
            Estimator::ClassicalBernoulli => f.write_str("bernoulli"),
        }
    }
}
