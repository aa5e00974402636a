use std::sync::Arc;

use crate::adapapg::CompositeSubproblem;
use crate::error::{Error, Result};
use crate::model::{ConstrainedProblem, OracleMeta, SmoothOracle, Vector};

use super::WeakConvexityProfile;

/// Smooth part of the k-th subproblem:
/// `f0(x) + gamma/2 |x - x_bar|^2 + beta/2 (|c(x)|^2 + |[f(x)]_+|^2)`.
pub struct PenaltyObjective {
    problem: ConstrainedProblem,
    x_bar: Vector,
    gamma: f64,
    beta: f64,
    meta: OracleMeta,
    strong_convexity: Option<f64>,
}

impl PenaltyObjective {
    pub fn new(problem: ConstrainedProblem, x_bar: Vector, gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config("gamma_k and beta_k must be positive"));
        }
        problem.check_point(&x_bar)?;
        let (meta, strong_convexity) = declared_constants(&problem, gamma, beta);
        Ok(Self {
            problem,
            x_bar,
            gamma,
            beta,
            meta,
            strong_convexity,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn x_bar(&self) -> &Vector {
        &self.x_bar
    }

    /// `gamma - Gamma` when the problem declares the constants needed for it;
    /// `None` otherwise (the inner solver adapts its estimate anyway).
    pub fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }
}

/// Smoothness `L_f0 + gamma + beta sum B (B + L)` over all constraints and
/// weak convexity `max(0, Gamma - gamma)`.
fn declared_constants(p: &ConstrainedProblem, gamma: f64, beta: f64) -> (OracleMeta, Option<f64>) {
    let mut smooth = p.f0.meta().smoothness.map(|l| l + gamma);
    for o in p.ineq.iter().chain(&p.eq) {
        let m = o.meta();
        smooth = match (smooth, m.bound, m.smoothness) {
            (Some(s), Some(b), Some(l)) => Some(s + beta * b * (b + l)),
            _ => None,
        };
    }
    let strong = WeakConvexityProfile::from_problem(p)
        .ok()
        .map(|w| gamma - w.gamma_k(beta));
    let meta = OracleMeta {
        smoothness: smooth,
        weak_convexity: strong.map(|s| (-s).max(0.0)),
        bound: None,
    };
    (meta, strong)
}

impl SmoothOracle for PenaltyObjective {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        let p = &self.problem;
        let mut pen = 0.0;
        for f in &p.ineq {
            let v = f.value(x).max(0.0);
            pen += v * v;
        }
        for c in &p.eq {
            let v = c.value(x);
            pen += v * v;
        }
        p.f0.value(x) + 0.5 * self.gamma * (x - &self.x_bar).norm_squared() + 0.5 * self.beta * pen
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let p = &self.problem;
        let (f0, mut g) = p.f0.value_and_gradient(x);
        let diff = x - &self.x_bar;
        g.axpy(self.gamma, &diff, 1.0);
        let mut pen = 0.0;
        for f in &p.ineq {
            let (v, gf) = f.value_and_gradient(x);
            let v = v.max(0.0);
            if v > 0.0 {
                pen += v * v;
                g.axpy(self.beta * v, &gf, 1.0);
            }
        }
        for c in &p.eq {
            let (v, gc) = c.value_and_gradient(x);
            pen += v * v;
            g.axpy(self.beta * v, &gc, 1.0);
        }
        (f0 + 0.5 * self.gamma * diff.norm_squared() + 0.5 * self.beta * pen, g)
    }

    fn meta(&self) -> OracleMeta {
        self.meta
    }
}

/// Builds `phi_k + g` for the given proximal center and parameters.
pub fn make_subproblem(p: &ConstrainedProblem, x_bar: &Vector, gamma: f64, beta: f64) -> Result<CompositeSubproblem> {
    let phi = PenaltyObjective::new(p.clone(), x_bar.clone(), gamma, beta)?;
    CompositeSubproblem::new(Arc::new(phi), p.reg.clone())
}

/// Penalty multipliers `lambda = beta [f]_+`, `y = beta c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub lambda: Vector,
    pub y: Vector,
}

/// Dual residual `S`, infeasibility `F` and complementarity residual `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    pub s: f64,
    pub f: f64,
    pub c: f64,
}

impl StationarityReport {
    pub fn max_sfc(&self) -> f64 {
        self.s.max(self.f).max(self.c)
    }

    pub fn max_sf(&self) -> f64 {
        self.s.max(self.f)
    }
}

/// Residuals of the penalty multipliers at `x`.
pub fn metrics(p: &ConstrainedProblem, x: &Vector, beta: f64) -> Result<(StationarityReport, Multipliers)> {
    p.check_point(x)?;
    if !(beta > 0.0) {
        return Err(Error::config("beta_k must be positive"));
    }
    let fv = p.ineq_values(x);
    let cv = p.eq_values(x);
    let lambda = fv.map(|v| beta * v.max(0.0));
    let y = &cv * beta;
    let grad = p.lagrangian_gradient(x, &lambda, &y);
    let s = p.reg.dist_neg_subdiff(x, &grad)?;
    let f = (cv.norm_squared() + fv.map(|v| v.max(0.0)).norm_squared()).sqrt();
    let c = lambda.iter().zip(fv.iter()).map(|(l, v)| (l * v).abs()).sum();
    Ok((StationarityReport { s, f, c }, Multipliers { lambda, y }))
}
