use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Strictly feasible reference point data, needed for the multiplier bounds
/// under convex constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPoint {
    /// `dist(x_feas, boundary of X)`.
    pub dist_to_boundary: f64,
    /// `min_i |f_i(x_feas)|`; `None` when there are no inequalities.
    pub min_abs_f: Option<f64>,
    /// `max_i B_{f_i}`.
    pub max_bound: f64,
}

/// Problem constants consumed by the complexity formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetInputs {
    /// Bound on `|f0|` and `|grad f0|` over `X`.
    pub b_f0: f64,
    /// Bound on `|g|` over `X`.
    pub g: f64,
    /// Diameter of `X`.
    pub d: f64,
    /// Bound on the subgradients of `g`.
    pub m: f64,
    pub rho0: f64,
    pub rho_c: f64,
    /// Non-singularity constant (weakly convex constraints).
    pub nu: Option<f64>,
    /// Proximal weight (convex constraints).
    pub gamma: Option<f64>,
    /// Penalty weight; required by the growing-penalty variants, optional
    /// for the feasible-start variant (defaults to the recommended value).
    pub beta: Option<f64>,
    /// `|c(x0)|^2` and `|[f(x0)]_+|^2`.
    pub init_eq_sq: f64,
    pub init_ineq_sq: f64,
    pub interior: Option<InteriorPoint>,
    /// `(lambda_max, lambda_min)` of `A A'` for affine equalities `Ax = b`.
    pub spectral: Option<(f64, f64)>,
}

impl BudgetInputs {
    pub fn new(b_f0: f64, g: f64, d: f64, m: f64) -> Self {
        Self {
            b_f0,
            g,
            d,
            m,
            rho0: 0.0,
            rho_c: 0.0,
            nu: None,
            gamma: None,
            beta: None,
            init_eq_sq: 0.0,
            init_ineq_sq: 0.0,
            interior: None,
            spectral: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetVariant {
    Convex,
    Nonconvex,
    ConstantFeasible,
}

/// Evaluated constants. Fields that do not apply to the variant are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BudgetReport {
    /// Recommended (feasible start) or supplied penalty weight.
    pub beta: f64,
    /// Recommended number of outer iterations.
    pub k: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub k_prime: Option<u64>,
    pub c3: Option<f64>,
    pub m_lambda: Option<f64>,
    pub m_y: Option<f64>,
    pub k3: Option<f64>,
    pub k4: Option<f64>,
    pub k5: Option<f64>,
}

impl BudgetReport {
    pub fn k_outer(&self) -> u64 {
        if self.k >= u64::MAX as f64 {
            u64::MAX
        } else {
            self.k as u64
        }
    }
}

fn need(v: Option<f64>, what: &str) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(Error::config(format!("{what} must be positive, got {x}"))),
        None => Err(Error::MissingMetadata(what.to_string())),
    }
}

/// `Q = D (B_f0 + gamma D + M)`.
pub fn q_constant(inp: &BudgetInputs, gamma: f64) -> f64 {
    inp.d * (inp.b_f0 + gamma * inp.d + inp.m)
}

/// `M_lambda = Q / min_i |f_i(x_feas)|`, zero without inequalities.
pub fn m_lambda(inp: &BudgetInputs, gamma: f64) -> Result<f64> {
    match inp.interior.and_then(|p| p.min_abs_f) {
        Some(mf) => Ok(q_constant(inp, gamma) / need(Some(mf), "min |f_i(x_feas)|")?),
        None => Ok(0.0),
    }
}

/// `M_y = Q sqrt(l_max)/l_min (1/D + 1/dist(x_feas, dX) + max B_fi / min |f_i|)`,
/// zero without equality constraints.
pub fn m_y(inp: &BudgetInputs, gamma: f64) -> Result<f64> {
    let Some((lmax, lmin)) = inp.spectral else {
        return Ok(0.0);
    };
    let ip = inp
        .interior
        .ok_or_else(|| Error::MissingMetadata("interior point for the equality multiplier bound".into()))?;
    let lmin = need(Some(lmin), "lambda_min(AA')")?;
    let dist = need(Some(ip.dist_to_boundary), "dist(x_feas, boundary)")?;
    let ratio = match ip.min_abs_f {
        Some(mf) => ip.max_bound / need(Some(mf), "min |f_i(x_feas)|")?,
        None => 0.0,
    };
    Ok(q_constant(inp, gamma) * lmax.sqrt() / lmin * (1.0 / inp.d + 1.0 / dist + ratio))
}

/// `beta = (36 (B_f0 + G) + 3 pi^2 D) / eps^2`.
pub fn feasible_start_beta(b_f0: f64, g: f64, d: f64, eps: f64) -> f64 {
    (36.0 * (b_f0 + g) + 3.0 * PI * PI * d) / (eps * eps)
}

/// `C3 = (2 rho0 + 2 beta rho_c)(4 (B_f0 + G) + pi^2 D / 3)`.
pub fn c3_constant(rho0: f64, rho_c: f64, beta: f64, b_f0: f64, g: f64, d: f64) -> f64 {
    (2.0 * rho0 + 2.0 * beta * rho_c) * (4.0 * (b_f0 + g) + PI * PI * d / 3.0)
}

/// Closed-form complexity constants and the recommended outer iteration
/// count for the requested regime.
pub fn theory_budget(inp: &BudgetInputs, variant: BudgetVariant, eps: f64) -> Result<BudgetReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::config("eps must be positive"));
    }
    if !(inp.d > 0.0) || inp.b_f0 < 0.0 || inp.g < 0.0 || inp.m < 0.0 || inp.rho0 < 0.0 || inp.rho_c < 0.0 {
        return Err(Error::config("bounds must be non-negative and D positive"));
    }
    let (b, g, d, m) = (inp.b_f0, inp.g, inp.d, inp.m);
    match variant {
        BudgetVariant::Convex => {
            let gamma = need(inp.gamma, "gamma")?;
            let beta = need(inp.beta, "beta")?;
            let ml = m_lambda(inp, gamma)?;
            let my = m_y(inp, gamma)?;
            let c1 = 2.0 * b
                + 2.0 * g
                + 0.5 * beta * inp.init_eq_sq
                + 0.5 * beta * inp.init_ineq_sq
                + 3.0 / beta * (2.0 * d + my * my + ml * ml);
            let w = d + my * my + ml * ml;
            let bracket = (2.0 * gamma * c1).sqrt() + 4.0 * w.sqrt() / beta + 8.0 * w / beta;
            let k = (6.0 / (beta * eps)).max(4.0 / (eps * eps) * bracket * bracket).ceil();
            Ok(BudgetReport {
                beta,
                k,
                c1: Some(c1),
                m_lambda: Some(ml),
                m_y: Some(my),
                ..Default::default()
            })
        }
        BudgetVariant::Nonconvex => {
            let beta = need(inp.beta, "beta")?;
            let nu = need(inp.nu, "nu")?;
            let (rho0, rho_c) = (inp.rho0, inp.rho_c);
            let nu2 = nu * nu;
            let kp_raw = (32.0 * rho0 / (3.0 * nu2 * beta))
                .powf(0.75)
                .max(32.0 * rho_c / (3.0 * nu2))
                .ceil()
                - 1.0;
            let k_prime = kp_raw.max(0.0) as u64;
            let tail: f64 = (0..k_prime)
                .map(|k| {
                    let kp = (k + 1) as f64;
                    let gk = 2.0 * (rho0 + beta * kp.cbrt() * rho_c);
                    8.0 * gk * gk * d * d / (3.0 * nu2 * beta * kp.powf(4.0 / 3.0))
                })
                .sum();
            let inv = 1.0 / beta + b + m;
            let c2 = 4.0
                * (2.0 * b
                    + 2.0 * g
                    + 0.5 * beta * inp.init_eq_sq
                    + 0.5 * beta * inp.init_ineq_sq
                    + 8.0 / (3.0 * nu2 * beta) * inv * inv
                    + 4.0 * d / beta)
                + tail;
            let a = 1.0 + 1.0 / (nu * beta);
            let k3 = 3.0 / eps
                * (4.0 / beta
                    + 4.0 / (nu * beta * beta)
                    + 9.0 / (2.0 * nu2 * beta.powi(3))
                    + 6.0 * c2 * (rho0 / beta + rho_c) / nu2);
            let k4 = 18.0 * rho0 * c2 / (eps * eps) * a * a;
            let inner5 = a * (2.0 * beta * rho_c * c2).sqrt()
                + (3.0 * b + 3.0 * m) / (2.0 * nu * beta)
                + 9.0 * (b + m) * (b + m) / (2.0 * nu2 * beta);
            let k5 = 27.0 / eps.powi(3) * inner5.powi(3);
            Ok(BudgetReport {
                beta,
                k: k3.max(k4).max(k5).ceil(),
                c2: Some(c2),
                k_prime: Some(k_prime),
                k3: Some(k3),
                k4: Some(k4),
                k5: Some(k5),
                ..Default::default()
            })
        }
        BudgetVariant::ConstantFeasible => {
            let rec = feasible_start_beta(b, g, d, eps);
            let beta = match inp.beta {
                Some(v) => need(Some(v), "beta")?,
                None => rec,
            };
            let c3 = c3_constant(inp.rho0, inp.rho_c, beta, b, g, d);
            let k = (9.0 * c3 / (eps * eps)).max(PI * PI / (2.0 * eps)).ceil();
            Ok(BudgetReport {
                beta: rec,
                k,
                c3: Some(c3),
                ..Default::default()
            })
        }
    }
}
