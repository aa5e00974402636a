use crate::error::{Error, Result};
use crate::model::ConstrainedProblem;

/// Inner tolerance rule for [`Schedule::Scaled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsRule {
    /// `1 / (k+1)^2`
    InverseSquare,
    /// `1 / (beta_k (k+1))`
    PenaltyScaled,
}

/// Generator of the outer parameters `(gamma_k, beta_k, eps_hat_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Convex constraints: `gamma_k = gamma`, `beta_k = beta sqrt(k+1)`,
    /// `eps_hat_k = 1 / (beta_k (k+1))`. `rho0`, when known, must be below
    /// `gamma`.
    ConvexSqrt { gamma: f64, beta: f64, rho0: Option<f64> },
    /// Weakly convex constraints: `beta_k = beta (k+1)^{1/3}`,
    /// `gamma_k = 2 (rho0 + beta_k rho_c)`, `eps_hat_k = 1 / (beta (k+1)^{4/3})`.
    NonconvexCbrt { beta: f64, rho0: f64, rho_c: f64 },
    /// Feasible start: `beta_k = beta`, `gamma_k = 2 (rho0 + beta rho_c)`,
    /// `eps_hat_k = 1 / (k+1)^2`.
    ConstantFeasible { beta: f64, rho0: f64, rho_c: f64 },
    /// Practical variant used by the classification experiments:
    /// `gamma_k = gamma (k+1)^power`, `beta_k = beta (k+1)^power`.
    Scaled { gamma: f64, beta: f64, power: f64, eps: EpsRule },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValues {
    pub gamma: f64,
    pub beta: f64,
    pub eps_hat: f64,
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::ConvexSqrt { gamma, beta, rho0 } => {
                if let Some(r) = rho0 {
                    if !nonneg(r) {
                        return Err(Error::config("rho0 must be non-negative"));
                    }
                    if !(gamma > r) {
                        return Err(Error::config(format!(
                            "the convex schedule requires gamma_k = gamma > rho0 (gamma = {gamma}, rho0 = {r})"
                        )));
                    }
                }
                if !positive(gamma) || !positive(beta) {
                    return Err(Error::config("gamma and beta must be positive"));
                }
            }
            Schedule::NonconvexCbrt { beta, rho0, rho_c } | Schedule::ConstantFeasible { beta, rho0, rho_c } => {
                if !positive(beta) || !nonneg(rho0) || !nonneg(rho_c) {
                    return Err(Error::config("need beta > 0 and rho0, rho_c >= 0"));
                }
                if rho0 + rho_c <= 0.0 {
                    return Err(Error::config("rho0 + rho_c must be positive so that gamma_k > 0"));
                }
            }
            Schedule::Scaled { gamma, beta, power, .. } => {
                if !positive(gamma) || !positive(beta) || !nonneg(power) {
                    return Err(Error::config("need gamma, beta > 0 and power >= 0"));
                }
            }
        }
        Ok(())
    }

    /// `(gamma_k, beta_k, eps_hat_k)`.
    pub fn values(&self, k: usize) -> Result<ScheduleValues> {
        self.validate()?;
        let kp = (k + 1) as f64;
        Ok(match *self {
            Schedule::ConvexSqrt { gamma, beta, .. } => {
                let b = beta * kp.sqrt();
                ScheduleValues {
                    gamma,
                    beta: b,
                    eps_hat: 1.0 / (b * kp),
                }
            }
            Schedule::NonconvexCbrt { beta, rho0, rho_c } => {
                let b = beta * kp.cbrt();
                ScheduleValues {
                    gamma: 2.0 * (rho0 + b * rho_c),
                    beta: b,
                    eps_hat: 1.0 / (beta * kp.powf(4.0 / 3.0)),
                }
            }
            Schedule::ConstantFeasible { beta, rho0, rho_c } => ScheduleValues {
                gamma: 2.0 * (rho0 + beta * rho_c),
                beta,
                eps_hat: 1.0 / (kp * kp),
            },
            Schedule::Scaled { gamma, beta, power, eps } => {
                let s = kp.powf(power);
                let b = beta * s;
                ScheduleValues {
                    gamma: gamma * s,
                    beta: b,
                    eps_hat: match eps {
                        EpsRule::InverseSquare => 1.0 / (kp * kp),
                        EpsRule::PenaltyScaled => 1.0 / (b * kp),
                    },
                }
            }
        })
    }

    /// Guaranteed strong convexity `gamma_k - Gamma_k` of the k-th
    /// subproblem, when the schedule carries enough information.
    pub fn strong_convexity(&self, k: usize) -> Option<f64> {
        let v = self.values(k).ok()?;
        match *self {
            Schedule::ConvexSqrt { gamma, rho0, .. } => rho0.map(|r| gamma - r),
            Schedule::NonconvexCbrt { rho0, rho_c, .. } | Schedule::ConstantFeasible { rho0, rho_c, .. } => {
                Some(v.gamma - (rho0 + v.beta * rho_c))
            }
            Schedule::Scaled { .. } => None,
        }
        .filter(|m| *m > 0.0)
    }

    pub fn requires_feasible_start(&self) -> bool {
        matches!(self, Schedule::ConstantFeasible { .. })
    }
}

/// `(rho0, rho_c)` with `rho_c = sum_i rho_i B_{f_i} + sum_j sigma_j B_{c_j}`,
/// so that the k-th penalty objective is `(rho0 + beta_k rho_c)`-weakly convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakConvexityProfile {
    pub rho0: f64,
    pub rho_c: f64,
}

impl WeakConvexityProfile {
    /// Reads the constants from oracle metadata. A missing weak convexity
    /// constant falls back to the declared smoothness constant; the value
    /// bound `B` of every constraint is required.
    pub fn from_problem(p: &ConstrainedProblem) -> Result<Self> {
        let rho = |meta: crate::model::OracleMeta, what: &str| -> Result<f64> {
            meta.weak_convexity
                .or(meta.smoothness)
                .ok_or_else(|| Error::MissingMetadata(format!("weak convexity or smoothness of {what}")))
        };
        let rho0 = rho(p.f0.meta(), "f0")?;
        let mut rho_c = 0.0;
        for (i, o) in p.ineq.iter().chain(&p.eq).enumerate() {
            let meta = o.meta();
            let name = format!("constraint {i}");
            let b = meta
                .bound
                .ok_or_else(|| Error::MissingMetadata(format!("bound of {name}")))?;
            rho_c += rho(meta, &name)? * b;
        }
        Ok(Self { rho0, rho_c })
    }

    /// `Gamma_k = rho0 + beta_k rho_c`.
    pub fn gamma_k(&self, beta_k: f64) -> f64 {
        self.rho0 + beta_k * self.rho_c
    }
}
