//! Symmetrized acceptance polynomials and their degrees.
//!
//! A symmetric function of `n` bits is a function of the Hamming weight, so
//! it is fully described by its values on the nodes `0..=n`. The degree of
//! the unique interpolant through those values is what the polynomial method
//! compares against twice the query count.

use num::BigRational;
use serde::Serialize;

use crate::estimators::{acceptance_probability, Estimator, PartialFnSpec};
use crate::lp::{find_feasible, BoxRows, Scalar};
use crate::numerics::{compensated_sum, WeightClass};
use crate::{Error, Result};

/// Default relative tolerance for degree extraction.
pub const DEGREE_TOLERANCE: f64 = 1e-8;
/// Largest `n` accepted by [`symmetrize`].
pub const TRUTH_TABLE_MAX_N: usize = 20;
/// Largest `n` solved with exact rational pivoting.
pub const EXACT_LP_MAX_N: usize = 40;
/// Largest `n` accepted by [`min_degree_lp`].
pub const LP_MAX_N: usize = 80;

/// Values of a univariate polynomial at the integer nodes `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnivariatePolyValues {
    n: usize,
    values: Vec<f64>,
    min_degree: usize,
}

impl UnivariatePolyValues {
    /// Wraps node values; the minimal degree is cached at [`DEGREE_TOLERANCE`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("node values must be finite and nonempty"));
        }
        let min_degree = minimal_degree(&values, DEGREE_TOLERANCE);
        Ok(Self {
            n: values.len() - 1,
            values,
            min_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_degree(&self) -> usize {
        self.min_degree
    }
}

/// Averages a truth table over each Hamming-weight class.
pub fn symmetrize(truth_table: &[f64], n: usize) -> Result<UnivariatePolyValues> {
    if n > TRUTH_TABLE_MAX_N {
        return Err(Error::domain(format!(
            "truth tables are limited to n <= {TRUTH_TABLE_MAX_N}"
        )));
    }
    if truth_table.len() != 1usize << n {
        return Err(Error::domain(format!(
            "truth table has {} entries, expected 2^{n}",
            truth_table.len()
        )));
    }
    if let Some(v) = truth_table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!(
            "truth table entry {v} outside [0, 1]"
        )));
    }
    let mut sums = vec![Vec::new(); n + 1];
    for (x, &v) in truth_table.iter().enumerate() {
        sums[x.count_ones() as usize].push(v);
    }
    let values = sums
        .into_iter()
        .map(|class| compensated_sum(class.iter().copied()) / class.len() as f64)
        .collect();
    UnivariatePolyValues::new(values)
}

/// Smallest `d` whose order-`d+1` forward differences all lie within
/// `tol · max|values|`. Capped at `n`, where no such differences exist.
pub fn minimal_degree(values: &[f64], tol: f64) -> usize {
    let n = values.len().saturating_sub(1);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let cutoff = tol * scale;
    let mut diffs = values.to_vec();
    for d in 0..n {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.iter().all(|v| v.abs() <= cutoff) {
            return d;
        }
    }
    n
}

/// A degree found by [`min_degree_lp`] with the polynomial that attains it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeWitness {
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    pub c: f64,
    pub degree: usize,
    /// Monomial coefficients in `k`, ascending powers.
    pub coefficients: Vec<f64>,
    /// Whether the verdict came from exact rational pivoting.
    #[serde(skip)]
    pub exact: bool,
}

/// Chebyshev polynomials `T_0..T_d` evaluated at `x = (2k − n)/n`.
fn chebyshev_row<S: Scalar>(n: usize, k: usize, d: usize) -> Vec<S> {
    let x = S::from_ratio(2 * k as i64 - n as i64, n as i64);
    let two_x = x.clone() + x.clone();
    let mut row: Vec<S> = Vec::with_capacity(d + 1);
    row.push(S::one());
    if d >= 1 {
        row.push(x);
    }
    for j in 2..=d {
        let next = two_x.clone() * row[j - 1].clone() - row[j - 2].clone();
        row.push(next);
    }
    row
}

fn separation_rows<S: Scalar>(spec: PartialFnSpec, c: f64, d: usize, slack: f64) -> BoxRows<S> {
    let n = spec.n;
    let slack = S::from_f64(slack);
    let c = S::from_f64(c);
    let mut rows = BoxRows {
        coeffs: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for k in 0..=n {
        let (lo, hi) = if k == spec.k1 {
            (S::one() - c.clone(), S::one())
        } else if k == spec.k2 {
            (S::zero(), c.clone())
        } else {
            (S::zero(), S::one())
        };
        rows.coeffs.push(chebyshev_row(n, k, d));
        rows.lower.push(lo - slack.clone());
        rows.upper.push(hi + slack.clone());
    }
    rows
}

/// Converts Chebyshev coefficients on `x = (2k − n)/n` to monomials in `k`.
fn chebyshev_to_monomial<S: Scalar>(n: usize, cheb: &[S]) -> Vec<S> {
    let d = cheb.len().saturating_sub(1);
    // x as a polynomial in k
    let x = vec![S::from_ratio(-1, 1), S::from_ratio(2, n as i64)];
    let mul = |a: &[S], b: &[S]| {
        let mut out = vec![S::zero(); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                out[i + j] = out[i + j].clone() + ai.clone() * bj.clone();
            }
        }
        out
    };
    let mut result = vec![S::zero(); d + 1];
    let mut t_prev: Vec<S> = vec![S::one()];
    let mut t_cur: Vec<S> = x.clone();
    for (j, cj) in cheb.iter().enumerate() {
        let tj: &[S] = if j == 0 { &t_prev } else { &t_cur };
        for (r, t) in result.iter_mut().zip(tj) {
            *r = r.clone() + cj.clone() * t.clone();
        }
        if j >= 1 {
            let two_x: Vec<S> = x.iter().map(|v| v.clone() + v.clone()).collect();
            let mut next = mul(&two_x, &t_cur);
            for (nv, p) in next.iter_mut().zip(&t_prev) {
                *nv = nv.clone() - p.clone();
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
    }
    result
}

fn degree_search<S: Scalar>(spec: PartialFnSpec, c: f64, slack: f64) -> Result<(usize, Vec<f64>)> {
    for d in 0..=spec.n {
        let rows = separation_rows::<S>(spec, c, d, slack);
        if let Some(cheb) = find_feasible(&rows)? {
            let mono = chebyshev_to_monomial(spec.n, &cheb);
            return Ok((d, mono.iter().map(Scalar::to_f64).collect()));
        }
    }
    Err(Error::Lp(format!(
        "no separating polynomial found for {spec:?}"
    )))
}

/// Smallest degree of a polynomial that is `>= 1 − c` at `k1`, `<= c` at
/// `k2`, and stays in `[0, 1]` on every node `0..=n`.
///
/// Degrees are tried upward from zero. Up to `n = 40` the feasibility tests
/// run in exact rational arithmetic; above that in floating point with the
/// bounds widened by [`crate::lp::F64_TOLERANCE`].
pub fn min_degree_lp(spec: PartialFnSpec, c: f64) -> Result<DegreeWitness> {
    if !(0.0..0.5).contains(&c) {
        return Err(Error::domain(format!(
            "approximation constant c = {c} outside [0, 1/2)"
        )));
    }
    if spec.n > LP_MAX_N {
        return Err(Error::domain(format!(
            "LP degree oracle is limited to n <= {LP_MAX_N}"
        )));
    }
    let exact = spec.n <= EXACT_LP_MAX_N;
    let (degree, coefficients) = if exact {
        degree_search::<BigRational>(spec, c, 0.0)?
    } else {
        degree_search::<f64>(spec, c, crate::lp::F64_TOLERANCE)?
    };
    Ok(DegreeWitness {
        n: spec.n,
        k1: spec.k1,
        k2: spec.k2,
        c,
        degree,
        coefficients,
        exact,
    })
}

impl DegreeWitness {
    /// Evaluates the witness at node `k`.
    pub fn eval(&self, k: usize) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * k as f64 + c)
    }
}

/// Acceptance probabilities of the thresholding distinguisher on every
/// weight class, with the query count they were produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptancePoly {
    pub values: UnivariatePolyValues,
    pub queries: usize,
    /// `2·queries`.
    pub degree_bound: usize,
}

impl AcceptancePoly {
    pub fn within_bound(&self) -> bool {
        self.values.min_degree() <= self.degree_bound
    }
}

/// `values[k] = P(|k1 − n·â| < threshold)` on class `(n, k)`.
///
/// For a symmetric estimator this is already the symmetrized acceptance
/// polynomial, so no truth table is needed.
pub fn acceptance_poly_of_distinguisher(
    est: Estimator,
    spec: PartialFnSpec,
    budget: usize,
    threshold: f64,
) -> Result<AcceptancePoly> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!(
            "threshold {threshold} must be positive"
        )));
    }
    let mut values = Vec::with_capacity(spec.n + 1);
    let mut queries = 0;
    for w in WeightClass::all(spec.n)? {
        let d = est.distribution(w, budget)?;
        queries = d.queries();
        values.push(acceptance_probability(&d, spec.k1, threshold));
    }
    Ok(AcceptancePoly {
        values: UnivariatePolyValues::new(values)?,
        queries,
        degree_bound: 2 * queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetrize_examples() {
        let and = symmetrize(&[0.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(and.values(), &[0.0, 0.0, 1.0]);
        let c = symmetrize(&[0.3; 8], 3).unwrap();
        assert!(c.values().iter().all(|v| (v - 0.3).abs() < 1e-16));
        assert_eq!(c.min_degree(), 0);
        let xor = symmetrize(&[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(xor.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(xor.min_degree(), 2);

        assert!(symmetrize(&[0.0; 7], 3).is_err());
        assert!(symmetrize(&[0.0, 2.0], 1).is_err());
        assert!(symmetrize(&[], 21).is_err());
    }

    #[test]
    fn minimal_degree_examples() {
        assert_eq!(minimal_degree(&[0.0, 0.0, 1.0], 1e-8), 2);
        assert_eq!(minimal_degree(&[0.0, 0.5, 1.0], 1e-8), 1);
        // 0.5 − 0.25 k + 0.03 k² − 0.001 k³ on 11 nodes
        let vals: Vec<f64> = (0..=10)
            .map(|k| {
                let k = k as f64;
                0.5 - 0.25 * k + 0.03 * k * k - 0.001 * k * k * k
            })
            .collect();
        assert_eq!(minimal_degree(&vals, 1e-8), 3);
        assert_eq!(minimal_degree(&[0.0; 5], 1e-8), 0);
    }

    proptest! {
        #[test]
        fn symmetrize_preserves_range(n in 1usize..=10, seed in any::<u64>()) {
            let table: Vec<f64> = (0..1u64 << n)
                .map(|x| ((x.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ seed) % 1000) as f64 / 999.0)
                .collect();
            let lo = table.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sym = symmetrize(&table, n).unwrap();
            prop_assert!(sym.values().iter().all(|v| *v >= lo - 1e-15 && *v <= hi + 1e-15));
        }

        #[test]
        fn degree_recovered_from_samples(
            d in 0usize..=10,
            extra in 2usize..=12,
            coeffs in prop::collection::vec(-1.0f64..1.0, 11),
        ) {
            // Chebyshev-type sampling keeps the values well scaled
            let n = d + extra;
            let mut lead = coeffs[d];
            if lead.abs() < 0.1 {
                lead = 0.5;
            }
            let vals: Vec<f64> = (0..=n)
                .map(|k| {
                    let x = (2.0 * k as f64 - n as f64) / n as f64;
                    let mut row = vec![1.0, x];
                    for j in 2..=d {
                        row.push(2.0 * x * row[j - 1] - row[j - 2]);
                    }
                    (0..d).map(|j| coeffs[j] * row[j]).sum::<f64>() + lead * row[d]
                })
                .collect();
            prop_assert_eq!(minimal_degree(&vals, 1e-8), d);
        }
    }

    #[test]
    fn lp_examples() {
        let w = min_degree_lp(PartialFnSpec::new(2, 2, 0).unwrap(), 0.0).unwrap();
        assert_eq!(w.degree, 1);
        assert!(w.exact);
        assert!((w.eval(0)).abs() < 1e-12 && (w.eval(2) - 1.0).abs() < 1e-12);

        let w = min_degree_lp(PartialFnSpec::new(4, 4, 0).unwrap(), 1.0 / 3.0).unwrap();
        assert_eq!(w.degree, 1);

        assert!(min_degree_lp(PartialFnSpec::new(4, 4, 0).unwrap(), 0.5).is_err());
        assert!(min_degree_lp(PartialFnSpec::new(81, 4, 0).unwrap(), 0.2).is_err());
    }

    fn assert_witness_valid(w: &DegreeWitness, tol: f64) {
        for k in 0..=w.n {
            let v = w.eval(k);
            assert!(v >= -tol && v <= 1.0 + tol, "k={k} v={v}");
        }
        assert!(w.eval(w.k1) >= 1.0 - w.c - tol);
        assert!(w.eval(w.k2) <= w.c + tol);
    }

    #[test]
    fn lp_witnesses_satisfy_constraints() {
        for (n, k1, k2, c) in [
            (10, 6, 4, 0.2),
            (12, 7, 5, 0.1),
            (20, 11, 9, 0.3),
            (40, 24, 20, 0.49),
        ] {
            let spec = PartialFnSpec::new(n, k1, k2).unwrap();
            let w = min_degree_lp(spec, c).unwrap();
            assert_witness_valid(&w, 1e-9);
            if w.degree > 0 {
                // one degree less must be infeasible
                let rows = separation_rows::<BigRational>(spec, c, w.degree - 1, 0.0);
                assert!(find_feasible(&rows).unwrap().is_none());
            }
        }
    }

    #[test]
    fn float_path_matches_exact_path() {
        for (n, k1, k2, c) in [(16, 9, 7, 0.1), (20, 12, 8, 0.25), (30, 16, 14, 0.2)] {
            let spec = PartialFnSpec::new(n, k1, k2).unwrap();
            let exact = degree_search::<BigRational>(spec, c, 0.0).unwrap().0;
            let float = degree_search::<f64>(spec, c, crate::lp::F64_TOLERANCE)
                .unwrap()
                .0;
            assert_eq!(exact, float, "{spec:?}");
        }
        let w = min_degree_lp(PartialFnSpec::new(60, 32, 28).unwrap(), 0.3).unwrap();
        assert!(!w.exact);
        assert_witness_valid(&w, 1e-6);
    }

    #[test]
    fn acceptance_poly_examples() {
        let spec = PartialFnSpec::new(8, 6, 2).unwrap();
        let acc = acceptance_poly_of_distinguisher(Estimator::ConstantHalf, spec, 4, 3.0).unwrap();
        assert!(acc
            .values
            .values()
            .iter()
            .all(|&v| v == acc.values.values()[0]));
        assert_eq!(acc.values.min_degree(), 0);
        assert_eq!(acc.degree_bound, 0);
        assert!(acc.within_bound());

        for thr in [0.5, 1.0, 2.5, 4.0] {
            let acc =
                acceptance_poly_of_distinguisher(Estimator::AmplitudeOracle, spec, 4, thr).unwrap();
            assert!(acc.values.min_degree() <= 8, "thr={thr}");
        }

        let spec = PartialFnSpec::new(10, 7, 3).unwrap();
        let acc =
            acceptance_poly_of_distinguisher(Estimator::ClassicalBernoulli, spec, 2, 5.0).unwrap();
        assert_eq!(acc.degree_bound, 4);
        assert!(acc.within_bound());
        assert!(acc.values.min_degree() <= 2);
    }
}
