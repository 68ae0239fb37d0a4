//! Dense primal simplex for feasibility of box-constrained linear systems.
//!
//! The solver answers whether some `x ∈ R^d` satisfies
//! `lower_i <= a_i · x <= upper_i` for every row. It runs phase one of the
//! textbook simplex method with Bland's rule, so over exact rationals it
//! terminates and its verdict is exact. The same code runs over `f64` with
//! an absolute pivot tolerance.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Arithmetic the simplex needs from its number type.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact for rationals.
    fn from_f64(x: f64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Sign, with values inside the type's tolerance reported as `Equal`.
    fn sign(&self) -> Ordering;
    fn to_f64(&self) -> f64;
}

/// Pivot and feasibility tolerance of the floating-point path.
pub const F64_TOLERANCE: f64 = 1e-9;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn sign(&self) -> Ordering {
        if *self > F64_TOLERANCE {
            Ordering::Greater
        } else if *self < -F64_TOLERANCE {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num::One::one()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn sign(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Rows `lower_i <= a_i · x <= upper_i` over free variables `x`.
#[derive(Debug, Clone)]
pub struct BoxRows<S> {
    pub coeffs: Vec<Vec<S>>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
}

impl<S: Scalar> BoxRows<S> {
    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    /// True when `x` satisfies every row (within the scalar's tolerance).
    pub fn satisfied_by(&self, x: &[S]) -> bool {
        self.coeffs
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(row, (lo, hi))| {
                let v = dot(row, x);
                (v.clone() - lo.clone()).sign() != Ordering::Less
                    && (hi.clone() - v).sign() != Ordering::Less
            })
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

const MAX_PIVOTS: usize = 200_000;

/// Column kinds of the standard-form tableau.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Col {
    Plus(usize),
    Minus(usize),
    Slack,
    Artificial,
}

/// Finds a feasible point, or `None` if the rows are inconsistent.
pub fn find_feasible<S: Scalar>(rows: &BoxRows<S>) -> Result<Option<Vec<S>>> {
    let d = rows.dim();
    if rows.coeffs.iter().any(|r| r.len() != d)
        || rows.lower.len() != rows.coeffs.len()
        || rows.upper.len() != rows.coeffs.len()
    {
        return Err(Error::Lp("ragged constraint rows".into()));
    }

    // each box row becomes `a·x <= upper` and `−a·x <= −lower`
    let mut ineqs: Vec<(Vec<S>, S)> = Vec::with_capacity(2 * rows.coeffs.len());
    for (a, (lo, hi)) in rows.coeffs.iter().zip(rows.lower.iter().zip(&rows.upper)) {
        ineqs.push((a.clone(), hi.clone()));
        ineqs.push((a.iter().map(|v| -v.clone()).collect(), -lo.clone()));
    }
    let m = ineqs.len();
    let n_art = ineqs
        .iter()
        .filter(|(_, b)| b.sign() == Ordering::Less)
        .count();

    let mut cols: Vec<Col> = Vec::new();
    for j in 0..d {
        cols.push(Col::Plus(j));
        cols.push(Col::Minus(j));
    }
    let slack0 = cols.len();
    cols.extend(std::iter::repeat_n(Col::Slack, m));
    let art0 = cols.len();
    cols.extend(std::iter::repeat_n(Col::Artificial, n_art));
    let width = cols.len();

    // tableau rows hold `width` coefficients followed by the right-hand side
    let mut tab: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut art = art0;
    for (i, (a, b)) in ineqs.into_iter().enumerate() {
        let mut row = vec![S::zero(); width + 1];
        let flip = b.sign() == Ordering::Less;
        let sgn = |v: S| if flip { -v } else { v };
        for (j, v) in a.into_iter().enumerate() {
            row[2 * j] = sgn(v.clone());
            row[2 * j + 1] = sgn(-v);
        }
        row[slack0 + i] = sgn(S::one());
        row[width] = sgn(b);
        if flip {
            row[art] = S::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(slack0 + i);
        }
        tab.push(row);
    }

    // phase-one objective: minimize the sum of artificials
    let mut obj = vec![S::zero(); width + 1];
    for (row, &b) in tab.iter().zip(&basis) {
        if b >= art0 {
            for (o, v) in obj.iter_mut().zip(row) {
                *o = o.clone() - v.clone();
            }
        }
    }
    for o in obj.iter_mut().skip(art0).take(n_art) {
        *o = S::zero();
    }

    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..width).find(|&j| obj[j].sign() == Ordering::Less) else {
            // obj[width] holds minus the artificial mass
            if (-obj[width].clone()).sign() == Ordering::Greater {
                return Ok(None);
            }
            let mut x = vec![S::zero(); d];
            for (row, &b) in tab.iter().zip(&basis) {
                match cols[b] {
                    Col::Plus(j) => x[j] = x[j].clone() + row[width].clone(),
                    Col::Minus(j) => x[j] = x[j].clone() - row[width].clone(),
                    _ => {}
                }
            }
            return Ok(Some(x));
        };

        let mut leave: Option<(usize, S)> = None;
        for (r, row) in tab.iter().enumerate() {
            if row[enter].sign() != Ordering::Greater {
                continue;
            }
            let ratio = row[width].clone() / row[enter].clone();
            leave = match leave {
                None => Some((r, ratio)),
                Some((best, best_ratio)) => match (ratio.clone() - best_ratio.clone()).sign() {
                    Ordering::Less => Some((r, ratio)),
                    Ordering::Equal if basis[r] < basis[best] => Some((r, ratio)),
                    _ => Some((best, best_ratio)),
                },
            };
        }
        let Some((r, _)) = leave else {
            // phase one is bounded below by zero
            return Err(Error::Lp("unbounded phase-one objective".into()));
        };
        pivot(&mut tab, &mut obj, r, enter);
        basis[r] = enter;
    }
    Err(Error::Lp(format!(
        "no convergence after {MAX_PIVOTS} pivots"
    )))
}

fn pivot<S: Scalar>(tab: &mut [Vec<S>], obj: &mut [S], r: usize, c: usize) {
    let piv = tab[r][c].clone();
    for v in tab[r].iter_mut() {
        *v = v.clone() / piv.clone();
    }
    let prow = tab[r].clone();
    let eliminate = |row: &mut [S]| {
        let factor = row[c].clone();
        if factor.sign() == Ordering::Equal {
            return;
        }
        for (v, p) in row.iter_mut().zip(&prow) {
            if p.sign() != Ordering::Equal {
                *v = v.clone() - factor.clone() * p.clone();
            }
        }
    };
    for (i, row) in tab.iter_mut().enumerate() {
        if i != r {
            eliminate(row);
        }
    }
    eliminate(obj);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::from_ratio(num, den)
    }

    #[test]
    fn interval_intersection() {
        // 1 <= x <= 2 and 1.5 <= x <= 3
        let rows = BoxRows {
            coeffs: vec![vec![q(1, 1)], vec![q(1, 1)]],
            lower: vec![q(1, 1), q(3, 2)],
            upper: vec![q(2, 1), q(3, 1)],
        };
        let x = find_feasible(&rows).unwrap().unwrap();
        assert!(rows.satisfied_by(&x));

        let rows = BoxRows {
            coeffs: vec![vec![q(1, 1)], vec![q(1, 1)]],
            lower: vec![q(1, 1), q(5, 2)],
            upper: vec![q(2, 1), q(3, 1)],
        };
        assert!(find_feasible(&rows).unwrap().is_none());
    }

    #[test]
    fn two_dimensional_triangle() {
        // x >= 0, y >= 0, x + y <= 1, x − y in [0.25, 0.5]
        let rows = BoxRows {
            coeffs: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                vec![1.0, -1.0],
            ],
            lower: vec![0.0, 0.0, -10.0, 0.25],
            upper: vec![10.0, 10.0, 1.0, 0.5],
        };
        let x = find_feasible(&rows).unwrap().unwrap();
        assert!(rows.satisfied_by(&x), "{x:?}");

        let mut tight = rows.clone();
        tight.lower[3] = 1.5;
        tight.upper[3] = 2.0;
        assert!(find_feasible(&tight).unwrap().is_none());
    }

    #[test]
    fn negative_solution_uses_split_variables() {
        let rows = BoxRows {
            coeffs: vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)]],
            lower: vec![q(-5, 1), q(-4, 1)],
            upper: vec![q(-5, 1), q(-4, 1)],
        };
        let x = find_feasible(&rows).unwrap().unwrap();
        assert_eq!(x, vec![q(-3, 1), q(1, 1)]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows = BoxRows {
            coeffs: vec![vec![1.0, 0.0], vec![1.0]],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        assert!(find_feasible(&rows).is_err());
    }
}
