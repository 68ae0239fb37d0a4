//! Exact error analysis of Boolean-mean estimators.
//!
//! The crate evaluates outcome distributions of amplitude estimation, its
//! median-boosted variant, a zero-query constant and a classical sampling
//! baseline on every weight class of `n`-bit inputs, and measures them under
//! worst-case and average-case error criteria. Alongside sit the closed-form
//! bounds those criteria are compared against and the polynomial machinery
//! (symmetrization, minimal degree, an LP degree oracle) behind the lower
//! bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod bounds;
pub mod criteria;
pub mod estimators;
pub mod lp;
pub mod measures;
pub mod numerics;
pub mod poly;
pub mod report;
pub mod suite;

pub use error::{Error, Result};

pub use bounds::BoundCheck;
pub use criteria::{Criterion, ErrorReport};
pub use estimators::{Atom, Estimator, OutcomeDistribution, PartialFnSpec};
pub use measures::{IndexWindow, SymmetricMeasure};
pub use numerics::{ClassCount, WeightClass};
pub use poly::UnivariatePolyValues;
