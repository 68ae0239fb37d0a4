//! Combinatorial primitives in exact and log space.
//!
//! Binomial coefficients are computed exactly in 128-bit integers for
//! `n <= 60` and otherwise through a saddle-point form of Stirling's series:
//!
//! ```text
//! ln C(n,k) = n·H(k/n) + ½·ln(n / (2π k (n−k))) + s(n) − s(k) − s(n−k)
//! ```
//!
//! where `H` is the entropy in nats and `s(m) = ln m! − (m+½) ln m + m − ½ ln 2π`
//! is the Stirling error. Every term is well conditioned, so the absolute error
//! stays near one ulp of the result even for `n` in the millions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest `n` handled by the exact integer path.
pub const EXACT_MAX_N: usize = 60;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// An input equivalence class: all `n`-bit strings with Hamming weight `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightClass {
    n: usize,
    k: usize,
}

impl WeightClass {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("number of variables n must be positive"));
        }
        if k > n {
            return Err(Error::WeightOutOfRange { n, k });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The Boolean mean `k/n`.
    pub fn mean(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Iterates over every class `(n, 0), ..., (n, n)`.
    pub fn all(n: usize) -> Result<impl Iterator<Item = WeightClass>> {
        WeightClass::new(n, 0)?;
        Ok((0..=n).map(move |k| WeightClass { n, k }))
    }
}

/// Number of strings in a weight class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassCount {
    Exact(u128),
    /// Natural logarithm of the count.
    Log(f64),
}

impl ClassCount {
    pub fn ln(&self) -> f64 {
        match *self {
            ClassCount::Exact(c) => (c as f64).ln(),
            ClassCount::Log(l) => l,
        }
    }

    /// The count as a double; `inf` once it leaves the double range.
    pub fn to_f64(&self) -> f64 {
        match *self {
            ClassCount::Exact(c) => c as f64,
            ClassCount::Log(l) => l.exp(),
        }
    }
}

/// `C(n, k)` in 128-bit arithmetic. Only valid for `n <= EXACT_MAX_N`.
fn exact_binomial(n: usize, k: usize) -> u128 {
    debug_assert!(n <= EXACT_MAX_N && k <= n);
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) is divisible by i at every step
        acc = acc * (n as u128 - k as u128 + i) / i;
    }
    acc
}

/// Stirling error `ln m! − (m+½) ln m + m − ½ ln 2π` for `m >= 1`.
fn stirling_error(m: usize) -> f64 {
    debug_assert!(m >= 1);
    if m <= 15 {
        let fact: u128 = (1..=m as u128).product();
        let mf = m as f64;
        return (fact as f64).ln() - (mf + 0.5) * mf.ln() + mf - HALF_LN_2PI;
    }
    let x = m as f64;
    let x2 = x * x;
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    (S0 - (S1 - (S2 - (S3 - S4 / x2) / x2) / x2) / x2) / x
}

fn saddle_log_binomial(n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let rest = (n - k) as f64;
    let frac = kf / nf;
    // n·H(k/n) written as a sum of two nonnegative terms
    let entropy = -kf * frac.ln() - rest * (-frac).ln_1p();
    let prefactor = 0.5 * (nf / (kf * rest)).ln() - HALF_LN_2PI;
    entropy + prefactor + stirling_error(n) - stirling_error(k) - stirling_error(n - k)
}

/// Natural log of `C(n, k)`.
pub fn log_binomial(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::WeightOutOfRange { n, k });
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if n <= EXACT_MAX_N {
        return Ok((exact_binomial(n, k) as f64).ln());
    }
    Ok(saddle_log_binomial(n, k))
}

/// Size of the weight class: exact for `n <= 60`, log-space beyond.
pub fn class_count(w: WeightClass) -> ClassCount {
    if w.n <= EXACT_MAX_N {
        ClassCount::Exact(exact_binomial(w.n, w.k))
    } else {
        ClassCount::Log(saddle_or_zero(w.n, w.k))
    }
}

fn saddle_or_zero(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    if k == 0 {
        0.0
    } else {
        saddle_log_binomial(n, k)
    }
}

/// Binomial probability `C(n,k) a^k (1−a)^(n−k)` evaluated in log space.
pub fn binomial_pmf(n: usize, k: usize, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!(
            "success probability {a} outside [0, 1]"
        )));
    }
    let lc = log_binomial(n, k)?;
    if a == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if a == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    Ok((lc + k as f64 * a.ln() + (n - k) as f64 * (-a).ln_1p()).exp())
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence, accumulated in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigUint;
    use num::{One, ToPrimitive};
    use proptest::prelude::*;

    fn big_binomial(n: usize, k: usize) -> BigUint {
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for i in 0..k {
            num *= BigUint::from(n - i);
            den *= BigUint::from(i + 1);
        }
        num / den
    }

    fn big_ln(x: &BigUint) -> f64 {
        let bits = x.bits();
        if bits <= 64 {
            return x.to_f64().unwrap().ln();
        }
        let shift = bits - 64;
        let top = (x >> shift).to_f64().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    #[test]
    fn mean_examples() {
        assert_eq!(WeightClass::new(10, 5).unwrap().mean(), 0.5);
        assert_eq!(WeightClass::new(3, 0).unwrap().mean(), 0.0);
        assert_eq!(WeightClass::new(7, 7).unwrap().mean(), 1.0);
        assert!(WeightClass::new(3, 4).is_err());
        assert!(WeightClass::new(0, 0).is_err());
    }

    #[test]
    fn log_binomial_examples() {
        assert_eq!(log_binomial(17, 0).unwrap(), 0.0);
        assert_eq!(log_binomial(1000, 0).unwrap(), 0.0);
        assert!((log_binomial(4, 2).unwrap() - 6f64.ln()).abs() < 1e-15);
        assert!(log_binomial(4, 5).is_err());
    }

    #[test]
    fn log_binomial_matches_big_integer_oracle() {
        for n in 1..=200 {
            for k in 0..=n {
                let want = big_ln(&big_binomial(n, k));
                let got = log_binomial(n, k).unwrap();
                assert!((got - want).abs() <= 1e-10, "n={n} k={k}: {got} vs {want}");
            }
        }
        let want = big_ln(&big_binomial(100, 60));
        assert!((log_binomial(100, 60).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn log_binomial_large_n_small_k() {
        for &n in &[1_000usize, 100_000, 1_000_000] {
            for k in [1usize, 2, 3, 10, 40] {
                let want = big_ln(&big_binomial(n, k));
                let got = log_binomial(n, k).unwrap();
                assert!((got - want).abs() <= 1e-10, "n={n} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn class_count_examples() {
        let c = |n, k| class_count(WeightClass::new(n, k).unwrap());
        assert_eq!(c(3, 2), ClassCount::Exact(3));
        assert_eq!(c(2, 1), ClassCount::Exact(2));
        assert_eq!(c(60, 30), ClassCount::Exact(118_264_581_564_861_424));
        assert_eq!(
            big_binomial(60, 30),
            BigUint::from(118_264_581_564_861_424u128)
        );
        match c(61, 30) {
            ClassCount::Log(l) => assert!((l - big_ln(&big_binomial(61, 30))).abs() < 1e-12),
            other => panic!("expected log path, got {other:?}"),
        }
    }

    #[test]
    fn binomial_weights_normalize() {
        for n in (1..=10_000).step_by(97).chain([10_000]) {
            let ln2n = n as f64 * std::f64::consts::LN_2;
            let total =
                compensated_sum((0..=n).map(|k| (log_binomial(n, k).unwrap() - ln2n).exp()));
            assert!((total - 1.0).abs() <= 1e-9, "n={n}: {total}");
        }
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    proptest! {
        #[test]
        fn symmetry_is_exact(n in 1usize..10_000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as usize;
            prop_assert_eq!(log_binomial(n, k).unwrap(), log_binomial(n, n - k).unwrap());
        }

        #[test]
        fn pascal_identity(n in 2usize..10_000, frac in 0.0f64..=1.0) {
            let k = 1 + ((n as f64 - 2.0) * frac).round() as usize;
            let lhs = log_binomial(n, k).unwrap();
            let a = log_binomial(n - 1, k - 1).unwrap();
            let b = log_binomial(n - 1, k).unwrap();
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            let rhs = hi + (lo - hi).exp().ln_1p();
            // relative error of C(n,k) itself, i.e. absolute error of its log
            prop_assert!((lhs - rhs).abs() <= 1e-9, "n={} k={} {} {}", n, k, lhs, rhs);
        }
    }
}
