//! Smooth oracles, structured domains, the simple convex regularizer and the
//! constrained problem bundle shared by every solver component.

mod domain;
mod oracle;
mod problem;
mod regularizer;

pub use domain::{DomainKind, DomainSet, ACTIVE_TOL, MEMBERSHIP_TOL};
pub use oracle::{gradient_check, FnOracle, OracleMeta, Quadratic, SharedOracle, SmoothOracle, Vector};
pub use problem::ConstrainedProblem;
pub use regularizer::Regularizer;

use crate::error::Result;

/// Euclidean projection of `x` onto `domain`.
pub fn project_domain(domain: &DomainSet, x: &Vector) -> Result<Vector> {
    domain.project(x)
}

/// Proximal map of `step * g` at `x`.
pub fn prox(g: &Regularizer, x: &Vector, step: f64) -> Result<Vector> {
    g.prox(x, step)
}

/// Distance from `v` to `-N_X(x)`.
pub fn dist_to_neg_normal_cone(domain: &DomainSet, x: &Vector, v: &Vector) -> Result<f64> {
    domain.dist_to_neg_normal_cone(x, v)
}
