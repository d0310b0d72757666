//! Dense convex quadratic programming with controlled perturbations.
//!
//! The crate solves problems of the form
//!
//! ```text
//!     minimize     ½ xᵀHx + cᵀx
//!     subject to   Ax = b,  x ≥ 0
//! ```
//!
//! with an infeasible primal-dual path-following interior point method whose
//! bounds are relaxed to `x ≥ -λ`, `s ≥ -φ`. The relaxed iterates are used to
//! predict the optimal active set, after which the reduced problem is finished
//! with a primal active-set method (crossover).
//!
//! Module map:
//!
//! - [`linalg`]: least squares, symmetric indefinite solves, spectral tools
//! - [`model`]: problem data, iterates, residuals and partitions
//! - [`perturb`]: perfect perturbations and the active-set preserving point
//! - [`ipm`]: the perturbed (and unperturbed) interior point method
//! - [`predict`]: threshold predictors and prediction ratios
//! - [`errbound`]: LCP embedding and error-bound residual terms
//! - [`asqp`]: sub-problem extraction, active-set solver, crossover scores
//! - [`gen`]: seeded random test problem generators
//! - [`io`]: QPS reading/writing, standard-form conversion, CSV reports
//! - [`harness`]: batch experiments over problem suites

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asqp;
pub mod errbound;
mod error;
pub mod gen;
pub mod harness;
pub mod io;
pub mod ipm;
pub mod linalg;
pub mod model;
pub mod perturb;
pub mod predict;

pub use error::{Error, Result};
pub use model::{IndexSet, Iterate, Perturbation, StandardQP, Tripartition};
