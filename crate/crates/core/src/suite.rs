//! Reproducible checks, one per headline claim, shared by the `check`
//! subcommands and the acceptance tests.
//!
//! Each check returns a [`SuiteOutcome`]: the comparisons it asserted, any
//! informational comparisons, and a one-line summary.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    const_alg_error_exact, floor_sweep, lemma31_constant, lemma31_min_m, lemma61_check,
    nayakwu_degree_bound, BoundCheck, FloorShape, SweepConfig, SweepTable,
};
use crate::criteria::{
    expected_error, quantile_error, worst_expected_error, worst_prob_error, Criterion,
};
use crate::estimators::{
    ae_distribution, ae_unitary_oracle, distinguisher, total_variation, Estimator, PartialFnSpec,
};
use crate::measures::MeasureFamily;
use crate::numerics::WeightClass;
use crate::poly::{acceptance_poly_of_distinguisher, min_degree_lp, DEGREE_TOLERANCE};
use crate::report::{bound_checks_csv, fmt_float, sweep_csv, to_json};
use crate::Result;

/// Success probability used by the floor and zero-error checks.
pub const P_FLOOR: f64 = 8.0 / (PI * PI);

/// Recorded lower ratio for the uniform-inputs floor sweep at `n = 4096`,
/// `M = 8..512` (measured minimum 0.39892, reached by the constant).
pub const FLOOR_C0_UNIFORM_INPUTS: f64 = 0.39;
/// Recorded lower ratio for the uniform-means floor sweep (measured
/// minimum 0.71929, four-fold median at `M = 256`).
pub const FLOOR_C0_UNIFORM_MEANS: f64 = 0.71;
/// Largest allowed `max ratio / min ratio` in the uniform-inputs sweep.
pub const FLOOR_BAND: f64 = 100.0;
/// Recorded upper constant for `M ·` worst expected error of the four-fold
/// median at `n = 256`, `M = 8..128` (measured maximum 1.8378 at `M = 128`).
pub const MEDIAN_SHAPE_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    /// Number of elementary comparisons evaluated.
    pub evaluated: usize,
    /// Asserted comparisons; `passed` is their conjunction.
    pub checks: Vec<BoundCheck>,
    /// Reported but not asserted.
    pub notes: Vec<BoundCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<SweepTable>,
}

impl SuiteOutcome {
    fn new(name: &str, evaluated: usize, checks: Vec<BoundCheck>, summary: String) -> Self {
        Self {
            name: name.to_string(),
            passed: checks.iter().all(|c| c.holds),
            summary,
            evaluated,
            checks,
            notes: Vec::new(),
            table: None,
        }
    }

    /// The sweep table for floor checks, otherwise every check and note.
    pub fn csv(&self) -> String {
        match &self.table {
            Some(t) => sweep_csv(t),
            None => {
                let all: Vec<BoundCheck> = self.checks.iter().chain(&self.notes).cloned().collect();
                bound_checks_csv(&all)
            }
        }
    }

    pub fn json(&self) -> Result<String> {
        to_json(self)
    }
}

fn upper_check(name: &str, value: f64, limit: f64) -> BoundCheck {
    BoundCheck::new(name, value, limit, value <= limit, limit - value)
}

fn lower_check(name: &str, value: f64, limit: f64) -> BoundCheck {
    BoundCheck::new(name, value, limit, value >= limit, value - limit)
}

/// Constant-½ error under uniform inputs: the ratio to `(2πn)^{−1/2}` is
/// within 5% of one at `n`, and closer to one at `4n` than at `n/4`.
pub fn const_alg(n: usize) -> Result<SuiteOutcome> {
    let r = const_alg_error_exact(n)?.ratio;
    let band = BoundCheck::new(
        "const-alg-ratio",
        r,
        1.0,
        (0.95..=1.05).contains(&r),
        0.05 - (r - 1.0).abs(),
    )
    .with("n", n);
    let small = n / 4;
    let large = 4 * n;
    let dev_small = (const_alg_error_exact(small.max(1))?.ratio - 1.0).abs();
    let dev_large = (const_alg_error_exact(large)?.ratio - 1.0).abs();
    let trend = BoundCheck::new(
        "const-alg-convergence",
        dev_large,
        dev_small,
        dev_large < dev_small,
        dev_small - dev_large,
    )
    .with("n_small", small.max(1))
    .with("n_large", large);
    let summary = format!("ratio({n}) = {}", fmt_float(r));
    Ok(SuiteOutcome::new(
        "const-alg",
        3,
        vec![band, trend],
        summary,
    ))
}

/// The grid `1, 1.25, ... <= √n/6`; empty for `n < 36`.
pub fn lemma61_grid(n: usize) -> Vec<f64> {
    let c_max = (n as f64).sqrt() / 6.0;
    (0..)
        .map(|j| 1.0 + j as f64 / 4.0)
        .take_while(|&c| c <= c_max)
        .collect()
}

/// Every `n` in the range and every grid `c`. Reports failures and the
/// tightest check.
pub fn lemma61(n_min: usize, n_max: usize) -> Result<SuiteOutcome> {
    let per_n: Vec<Vec<BoundCheck>> = (n_min.max(4)..=n_max)
        .into_par_iter()
        .map(|n| {
            lemma61_grid(n)
                .into_iter()
                .map(|c| lemma61_check(n, c))
                .collect()
        })
        .collect::<Result<_>>()?;
    let all: Vec<BoundCheck> = per_n.into_iter().flatten().collect();
    let evaluated = all.len();
    let mut checks: Vec<BoundCheck> = all.iter().filter(|c| !c.holds).cloned().collect();
    let tightest = all
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .cloned();
    if let Some(t) = &tightest {
        checks.push(BoundCheck {
            name: "lemma61-tightest".into(),
            ..t.clone()
        });
    }
    let summary = format!(
        "{evaluated} (n, c) pairs, {} failures, smallest log margin {}",
        all.iter().filter(|c| !c.holds).count(),
        tightest.map_or("n/a".into(), |t| fmt_float(t.margin))
    );
    Ok(SuiteOutcome::new("lemma61", evaluated, checks, summary))
}

pub const AE_EXACT_TV: f64 = 1e-8;
pub const AE_EXACT_MASS: f64 = 1e-9;

/// Closed-form amplitude-estimation distribution against the unitary
/// simulation for all `n` in range, all `k`, and each `M`.
pub fn ae_exact(n_max: usize, budgets: &[usize]) -> Result<SuiteOutcome> {
    let cases: Vec<(usize, usize, usize)> = (2..=n_max)
        .flat_map(|n| (0..=n).flat_map(move |k| budgets.iter().map(move |&m| (n, k, m))))
        .collect();
    let stats: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|&(n, k, m)| {
            let w = WeightClass::new(n, k)?;
            let exact = ae_distribution(w, m)?;
            let oracle = ae_unitary_oracle(w, m)?;
            let mass = (exact.total_mass() - 1.0)
                .abs()
                .max((oracle.total_mass() - 1.0).abs());
            Ok((total_variation(&exact, &oracle), mass))
        })
        .collect::<Result<_>>()?;
    let tv = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let mass = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let checks = vec![
        upper_check("ae-oracle-max-tv", tv, AE_EXACT_TV).with("n_max", n_max),
        upper_check("ae-max-mass-deviation", mass, AE_EXACT_MASS).with("n_max", n_max),
    ];
    let summary = format!(
        "{} cases, max TV {}, max |mass − 1| {}",
        cases.len(),
        fmt_float(tv),
        fmt_float(mass)
    );
    Ok(SuiteOutcome::new("ae-exact", cases.len(), checks, summary))
}

/// Worst probabilistic error of count-rounded amplitude estimation.
pub fn zero_error(n: usize, m: usize, p: f64) -> Result<SuiteOutcome> {
    let est = Estimator::AmplitudeEstimation {
        round_to_count: true,
    };
    let v = worst_prob_error(est, n, m, p)?.value;
    let raw = worst_prob_error(Estimator::AE, n, m, p)?.value;
    let check = BoundCheck::new("zero-error", v, 0.0, v == 0.0, -v)
        .with("n", n)
        .with("M", m)
        .with("p", p);
    let mut out = SuiteOutcome::new(
        "zero-error",
        1,
        vec![check],
        format!("worst error {}", fmt_float(v)),
    );
    out.notes.push(
        BoundCheck::new("zero-error-unrounded", raw, 0.0, raw == 0.0, -raw)
            .with("n", n)
            .with("M", m)
            .with("p", p),
    );
    Ok(out)
}

/// Estimators compared against the lower-bound floors.
pub fn floor_estimators() -> Vec<Estimator> {
    vec![
        Estimator::AE,
        Estimator::median(2),
        Estimator::median(4),
        Estimator::ConstantHalf,
        Estimator::ClassicalBernoulli,
    ]
}

pub fn power_grid(lo: usize, hi: usize) -> Vec<usize> {
    std::iter::successors(Some(lo.max(1)), |&m| Some(m * 2))
        .take_while(|&m| m <= hi)
        .collect()
}

/// Average probabilistic error over a measure, divided by its floor shape.
///
/// Uniform inputs use `min(n^{−1/2}, M^{−1})` and also bound the spread of
/// ratios; uniform means use `M^{−1}`. Pass `c0 = None` to use the
/// recorded constant for the measure.
pub fn floors(
    measure: MeasureFamily,
    n: usize,
    budgets: &[usize],
    p: f64,
    c0: Option<f64>,
) -> Result<SuiteOutcome> {
    let (shape, recorded, band) = match measure {
        MeasureFamily::UniformInputs => (FloorShape::MinSqrtNInvT, FLOOR_C0_UNIFORM_INPUTS, true),
        _ => (FloorShape::InvT, FLOOR_C0_UNIFORM_MEANS, false),
    };
    let c0 = c0.unwrap_or(recorded);
    let table = floor_sweep(&SweepConfig {
        estimators: floor_estimators(),
        criterion: Criterion::AvgProb,
        n_grid: vec![n],
        budget_grid: budgets.to_vec(),
        level: p,
        measure: Some(measure.clone()),
        shape,
    })?;
    let label = measure.label();
    let mut checks = vec![lower_check("floor-min-ratio", table.min_ratio, c0)
        .with("n", n)
        .with("p", p)];
    if band {
        let spread = table.max_ratio / table.min_ratio;
        checks.push(upper_check("floor-ratio-band", spread, FLOOR_BAND).with("n", n));
    }
    let summary = format!(
        "{label}: ratios in [{}, {}], recorded c0 = {}",
        fmt_float(table.min_ratio),
        fmt_float(table.max_ratio),
        fmt_float(c0)
    );
    let mut out = SuiteOutcome::new("floors", table.rows.len(), checks, summary);
    out.table = Some(table);
    if p > 0.5 {
        let m = lemma31_min_m(p)?;
        let c = lemma31_constant(m)?;
        out.notes.push(
            BoundCheck::new("lemma31-constant", c, 0.0, c > 0.0, c)
                .with("m", m)
                .with("p", p),
        );
    }
    Ok(out)
}

/// Levels `a` and moments `q` of the Markov comparison.
pub const MARKOV_A: [f64; 3] = [2.5, 3.0, 4.0];
pub const MARKOV_Q: [f64; 2] = [1.0, 2.0];

/// Draws `samples` (estimator, n, k, M) instances with a seeded generator
/// and checks `quantile_error(p = 1 − a^{−q}) <= a · expected_error(q)`.
pub fn markov(samples: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = [
        Estimator::AE,
        Estimator::AmplitudeEstimation {
            round_to_count: true,
        },
        Estimator::median(2),
        Estimator::median(3),
        Estimator::median(4),
        Estimator::ConstantHalf,
        Estimator::ClassicalBernoulli,
    ];
    let draws: Vec<(Estimator, usize, usize, usize)> = (0..samples)
        .map(|_| {
            let est = pool[rng.gen_range(0..pool.len())];
            let n = rng.gen_range(1..=64);
            let k = rng.gen_range(0..=n);
            let m = rng.gen_range(2..=64);
            (est, n, k, m)
        })
        .collect();
    let results: Vec<Vec<BoundCheck>> = draws
        .par_iter()
        .map(|&(est, n, k, m)| {
            let w = WeightClass::new(n, k)?;
            let d = est.distribution(w, m)?;
            let mut out = Vec::new();
            for q in MARKOV_Q {
                let e = expected_error(&d, w.mean(), q)?;
                for a in MARKOV_A {
                    let p = 1.0 - a.powf(-q);
                    let lhs = quantile_error(&d, w.mean(), p)?;
                    let rhs = a * e;
                    out.push(
                        BoundCheck::new("markov", lhs, rhs, lhs <= rhs, rhs - lhs)
                            .with("n", n)
                            .with("k", k)
                            .with("M", m)
                            .with("a", a)
                            .with("q", q),
                    );
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let all: Vec<BoundCheck> = results.into_iter().flatten().collect();
    let violations: Vec<BoundCheck> = all.iter().filter(|c| !c.holds).cloned().collect();
    let summary = format!(
        "{} instances, {} comparisons, {} violations",
        samples,
        all.len(),
        violations.len()
    );
    Ok(SuiteOutcome::new("markov", all.len(), violations, summary))
}

/// `M ·` worst expected `L1` error of the `r`-fold median of amplitude
/// estimation, bounded by one constant across the budgets.
pub fn median_shape(
    n: usize,
    budgets: &[usize],
    reps: usize,
    constant: Option<f64>,
) -> Result<SuiteOutcome> {
    let limit = constant.unwrap_or(MEDIAN_SHAPE_CONSTANT);
    let checks: Vec<BoundCheck> = budgets
        .iter()
        .map(|&m| {
            let v = worst_expected_error(Estimator::median(reps), n, m, 1.0)?.value;
            Ok(upper_check("median-shape", v * m as f64, limit)
                .with("n", n)
                .with("M", m)
                .with("r", reps))
        })
        .collect::<Result<_>>()?;
    let max = checks.iter().map(|c| c.lhs).fold(0.0, f64::max);
    let summary = format!(
        "max M·error {} against {}",
        fmt_float(max),
        fmt_float(limit)
    );
    Ok(SuiteOutcome::new(
        "median-shape",
        checks.len(),
        checks,
        summary,
    ))
}

/// Quantum estimators whose acceptance polynomials are degree-checked.
pub fn degree_law_estimators() -> Vec<Estimator> {
    vec![
        Estimator::AE,
        Estimator::AmplitudeEstimation {
            round_to_count: true,
        },
        Estimator::AmplitudeOracle,
        Estimator::median(2),
        Estimator::median(3),
    ]
}

/// Every distinguisher instance with `n <= n_max`, `2 <= M <= m_max`,
/// `k2 < k1`, and thresholds `(k1 − k2)/2` and `1/2`.
pub fn degree_law(n_max: usize, m_max: usize) -> Result<SuiteOutcome> {
    let mut cases = Vec::new();
    for est in degree_law_estimators() {
        for n in 1..=n_max {
            for k1 in 1..=n {
                for k2 in 0..k1 {
                    for m in 2..=m_max {
                        for thr in [(k1 - k2) as f64 / 2.0, 0.5] {
                            cases.push((est, n, k1, k2, m, thr));
                        }
                    }
                }
            }
        }
    }
    let results: Vec<BoundCheck> = cases
        .par_iter()
        .map(|&(est, n, k1, k2, m, thr)| {
            let poly =
                acceptance_poly_of_distinguisher(est, PartialFnSpec::new(n, k1, k2)?, m, thr)?;
            let deg = poly.values.min_degree() as f64;
            let bound = poly.degree_bound as f64;
            Ok(upper_check(&format!("degree-law:{est}"), deg, bound)
                .with("n", n)
                .with("k1", k1)
                .with("k2", k2)
                .with("M", m)
                .with("threshold", thr))
        })
        .collect::<Result<_>>()?;
    let violations: Vec<BoundCheck> = results.iter().filter(|c| !c.holds).cloned().collect();
    let max_deg = results.iter().map(|c| c.lhs).fold(0.0, f64::max);
    let summary = format!(
        "{} instances at tol {}, {} violations, max degree {}",
        results.len(),
        fmt_float(DEGREE_TOLERANCE),
        violations.len(),
        max_deg
    );
    Ok(SuiteOutcome::new(
        "degree-law",
        results.len(),
        violations,
        summary,
    ))
}

/// Pairs `k2 < k1` with both weights balanced: `k(n − k) >= n²/8`.
pub fn balanced_pairs(n: usize) -> Vec<(usize, usize)> {
    let ok = |k: usize| 8 * k * (n - k) >= n * n;
    (0..=n)
        .filter(|&k1| ok(k1))
        .flat_map(|k1| (0..k1).filter(|&k2| ok(k2)).map(move |k2| (k1, k2)))
        .collect()
}

/// LP degrees over balanced pairs: monotone when the gap widens (in either
/// endpoint), monotone in `c` over `c_grid`, and bounded below by a fitted
/// `β ·` the closed-form degree bound.
pub fn degree_lp(ns: &[usize], c: f64, c_grid: &[f64]) -> Result<SuiteOutcome> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut evaluated = 0;
    let mut beta = f64::INFINITY;
    for &n in ns {
        let pairs = balanced_pairs(n);
        let degrees: Vec<usize> = pairs
            .par_iter()
            .map(|&(k1, k2)| Ok(min_degree_lp(PartialFnSpec::new(n, k1, k2)?, c)?.degree))
            .collect::<Result<_>>()?;
        evaluated += pairs.len();
        let lookup = |k1: usize, k2: usize| {
            pairs
                .iter()
                .position(|&p| p == (k1, k2))
                .map(|i| degrees[i])
        };
        let mut gap_violations = 0;
        for (&(k1, k2), &d) in pairs.iter().zip(&degrees) {
            for wider in [
                lookup(k1 + 1, k2),
                k2.checked_sub(1).and_then(|k| lookup(k1, k)),
            ] {
                if wider.is_some_and(|w| w > d) {
                    gap_violations += 1;
                }
            }
        }
        checks.push(
            BoundCheck::new(
                "degree-lp-gap-monotone",
                gap_violations as f64,
                0.0,
                gap_violations == 0,
                -(gap_violations as f64),
            )
            .with("n", n)
            .with("c", c),
        );
        let mut beta_n = f64::INFINITY;
        for (&(k1, k2), &d) in pairs.iter().zip(&degrees) {
            beta_n = beta_n.min(d as f64 / nayakwu_degree_bound(n, k1, k2)?);
        }
        notes.push(
            BoundCheck::new("degree-lp-beta", beta_n, 0.0, beta_n > 0.0, beta_n)
                .with("n", n)
                .with("c", c)
                .with("max_degree", degrees.iter().copied().max().unwrap_or(0)),
        );
        beta = beta.min(beta_n);

        if !c_grid.is_empty() {
            let mut sorted = c_grid.to_vec();
            sorted.sort_by(f64::total_cmp);
            let per_pair: Vec<Vec<usize>> = pairs
                .par_iter()
                .map(|&(k1, k2)| {
                    let spec = PartialFnSpec::new(n, k1, k2)?;
                    sorted
                        .iter()
                        .map(|&c| Ok(min_degree_lp(spec, c)?.degree))
                        .collect()
                })
                .collect::<Result<_>>()?;
            evaluated += pairs.len() * sorted.len();
            let violations = per_pair
                .iter()
                .filter(|ds| ds.windows(2).any(|w| w[1] > w[0]))
                .count();
            checks.push(
                BoundCheck::new(
                    "degree-lp-c-monotone",
                    violations as f64,
                    0.0,
                    violations == 0,
                    -(violations as f64),
                )
                .with("n", n)
                .with("c_min", sorted[0])
                .with("c_max", sorted[sorted.len() - 1]),
            );
        }
    }
    checks.push(BoundCheck::new("degree-lp-beta", beta, 0.0, beta > 0.0, beta).with("c", c));
    let summary = format!(
        "{evaluated} LP degree searches, fitted beta = {}",
        fmt_float(beta)
    );
    let mut out = SuiteOutcome::new("degree-lp", evaluated, checks, summary);
    out.notes = notes;
    Ok(out)
}

pub const DISTINGUISHER_FAIL: f64 = 0.19;
pub const DISTINGUISHER_SLACK: f64 = 1e-12;

/// Thresholding distinguisher built from amplitude estimation: threshold
/// `n ·` worst quantile error at `p`, all pairs with `k1 − k2 >= min_gap`,
/// failure probabilities at most `1 − p` (plus slack).
///
/// A note repeats the sweep with the threshold moved up by one ulp, which
/// admits outcomes exactly at the error quantile.
pub fn distinguisher_check(n: usize, m: usize, p: f64, min_gap: usize) -> Result<SuiteOutcome> {
    let limit = 1.0 - p + DISTINGUISHER_SLACK;
    let dists = WeightClass::all(n)?
        .map(|w| ae_distribution(w, m))
        .collect::<Result<Vec<_>>>()?;
    let mut max_err: f64 = 0.0;
    for d in &dists {
        max_err = max_err.max(quantile_error(d, d.input().mean(), p)?);
    }
    let threshold = n as f64 * max_err;
    let worst_fail = |thr: f64| -> Result<(f64, usize, usize, usize)> {
        let mut worst = (0.0, 0, 0, 0);
        for k1 in 0..=n {
            for k2 in 0..k1 {
                if k1 - k2 < min_gap {
                    continue;
                }
                let out =
                    distinguisher(&dists[k1], &dists[k2], PartialFnSpec::new(n, k1, k2)?, thr)?;
                let f = out.fail1.max(out.fail2);
                if f > worst.0 {
                    worst = (f, k1, k2, worst.3);
                }
                worst.3 += 1;
            }
        }
        Ok(worst)
    };
    let (fail, k1, k2, pairs) = worst_fail(threshold)?;
    let check = upper_check("distinguisher-fail", fail, limit)
        .with("n", n)
        .with("M", m)
        .with("p", p)
        .with("threshold", threshold)
        .with("k1", k1)
        .with("k2", k2);
    let above = f64::from_bits(threshold.to_bits() + 1);
    let (fail_up, k1u, k2u, _) = worst_fail(above)?;
    let summary = format!(
        "threshold {}, worst failure {} at (k1, k2) = ({k1}, {k2}); {} with the threshold one ulp higher",
        fmt_float(threshold),
        fmt_float(fail),
        fmt_float(fail_up)
    );
    let mut out = SuiteOutcome::new("distinguisher", pairs, vec![check], summary);
    out.notes.push(
        upper_check("distinguisher-fail-above-threshold", fail_up, limit)
            .with("threshold", above)
            .with("k1", k1u)
            .with("k2", k2u),
    );
    Ok(out)
}
