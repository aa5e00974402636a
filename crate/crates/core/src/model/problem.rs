use std::fmt;

use super::{Regularizer, SharedOracle, Vector};
use crate::error::{Error, Result};

/// `min f0(x) + g(x)  s.t.  f_i(x) <= 0, c_j(x) = 0`.
#[derive(Clone)]
pub struct ConstrainedProblem {
    pub f0: SharedOracle,
    pub ineq: Vec<SharedOracle>,
    pub eq: Vec<SharedOracle>,
    pub reg: Regularizer,
}

impl ConstrainedProblem {
    pub fn new(
        f0: SharedOracle,
        ineq: Vec<SharedOracle>,
        eq: Vec<SharedOracle>,
        reg: Regularizer,
    ) -> Result<Self> {
        let d = reg.dim();
        for o in std::iter::once(&f0).chain(&ineq).chain(&eq) {
            if o.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: o.dim(),
                });
            }
        }
        Ok(Self { f0, ineq, eq, reg })
    }

    pub fn dim(&self) -> usize {
        self.reg.dim()
    }

    /// Number of inequality constraints.
    pub fn m(&self) -> usize {
        self.ineq.len()
    }

    /// Number of equality constraints.
    pub fn n(&self) -> usize {
        self.eq.len()
    }

    pub fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point"));
        }
        Ok(())
    }

    pub fn ineq_values(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.m(), self.ineq.iter().map(|f| f.value(x)))
    }

    pub fn eq_values(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.n(), self.eq.iter().map(|c| c.value(x)))
    }

    /// `f0(x) + g(x)`.
    pub fn objective(&self, x: &Vector) -> f64 {
        self.f0.value(x) + self.reg.value(x)
    }

    /// `sqrt(|c(x)|^2 + |[f(x)]_+|^2)`.
    pub fn infeasibility(&self, x: &Vector) -> f64 {
        let f = self.ineq_values(x);
        let c = self.eq_values(x);
        (c.norm_squared() + f.map(|v| v.max(0.0)).norm_squared()).sqrt()
    }

    /// `max_i [f_i(x)]_+`, zero when there are no inequalities.
    pub fn max_violation(&self, x: &Vector) -> f64 {
        self.ineq_values(x).iter().fold(0.0f64, |a, &v| a.max(v))
    }

    /// `grad f0 + J_f' lambda + J_c' y`.
    pub fn lagrangian_gradient(&self, x: &Vector, lambda: &Vector, y: &Vector) -> Vector {
        let mut v = self.f0.gradient(x);
        for (fi, &li) in self.ineq.iter().zip(lambda.iter()) {
            if li != 0.0 {
                v += fi.gradient(x) * li;
            }
        }
        for (cj, &yj) in self.eq.iter().zip(y.iter()) {
            if yj != 0.0 {
                v += cj.gradient(x) * yj;
            }
        }
        v
    }
}

impl fmt::Debug for ConstrainedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstrainedProblem")
            .field("dim", &self.dim())
            .field("m", &self.m())
            .field("n", &self.n())
            .field("reg", &self.reg)
            .finish()
    }
}
