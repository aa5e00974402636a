//! Adaptive accelerated proximal gradient method for strongly convex
//! composite problems `min phi(x) + r(x)`.
//!
//! The solver keeps running estimates of the smoothness constant (by a
//! multiplicative line search) and of the strong convexity modulus (by
//! restarting with a smaller estimate whenever the proximal gradient mapping
//! fails to shrink at the rate the current estimate promises). It stops once
//! the first-order measure `omega(x) = min_{xi in dr(x)} |grad phi(x) + xi|`
//! drops below the requested tolerance.

use crate::error::{Error, Result};
use crate::model::{Regularizer, SharedOracle, SmoothOracle, Vector};

/// `phi + r` with `phi` smooth and strongly convex, `r` simple.
#[derive(Clone)]
pub struct CompositeSubproblem {
    pub phi: SharedOracle,
    pub r: Regularizer,
}

impl CompositeSubproblem {
    pub fn new(phi: SharedOracle, r: Regularizer) -> Result<Self> {
        if phi.dim() != r.dim() {
            return Err(Error::DimensionMismatch {
                expected: r.dim(),
                found: phi.dim(),
            });
        }
        Ok(Self { phi, r })
    }
}

/// Tuning knobs. Defaults follow the experimental settings used for the
/// classification benchmark: `L_ini = 10`, `mu_0 = 1`, `gamma_inc = 1.5`,
/// `gamma_dec = gamma_sc = 1.2`, `theta_sc = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdapConfig {
    pub l_min: f64,
    pub gamma_inc: f64,
    pub gamma_dec: f64,
    pub gamma_sc: f64,
    pub theta_sc: f64,
    pub mu0: f64,
    pub l_ini: f64,
    pub eps_hat: f64,
    pub max_prox_steps: u64,
}

impl Default for AdapConfig {
    fn default() -> Self {
        Self {
            l_min: 1.0,
            gamma_inc: 1.5,
            gamma_dec: 1.2,
            gamma_sc: 1.2,
            theta_sc: 0.5,
            mu0: 1.0,
            l_ini: 10.0,
            eps_hat: 1e-6,
            max_prox_steps: 1_000_000,
        }
    }
}

impl AdapConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.l_min) || !pos(self.mu0) || !pos(self.l_ini) || !pos(self.eps_hat) {
            return Err(Error::config("L_min, mu_0, L_ini and eps_hat must be positive"));
        }
        if !(self.gamma_inc > 1.0 && self.gamma_inc.is_finite()) {
            return Err(Error::config("gamma_inc must exceed 1"));
        }
        if !(self.gamma_dec >= 1.0 && self.gamma_dec.is_finite()) {
            return Err(Error::config("gamma_dec must be at least 1"));
        }
        if !(self.gamma_sc > 1.0 && self.gamma_sc.is_finite()) {
            return Err(Error::config("gamma_sc must exceed 1"));
        }
        if !(self.theta_sc > 0.0 && self.theta_sc < 1.0) {
            return Err(Error::config("theta_sc must lie in (0, 1)"));
        }
        if self.l_min < self.mu0 {
            return Err(Error::config("L_min must be at least mu_0"));
        }
        if self.max_prox_steps == 0 {
            return Err(Error::config("max_prox_steps must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one (accelerated) line search.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// Base point `w` the accepted step was taken from.
    pub w: Vector,
    pub x_next: Vector,
    /// Accepted local Lipschitz estimate.
    pub m: f64,
    /// Proximal gradient mapping `m (w - x_next)`.
    pub p: Vector,
    /// Local constant `|grad phi(x_next) - grad phi(w)| / |x_next - w|`.
    pub s: f64,
    /// Momentum coefficient; 1 for the plain line search.
    pub alpha: f64,
    pub prox_steps_used: u64,
    /// `grad phi(x_next)`, reused by the caller for the optimality measure.
    pub grad_next: Vector,
}

/// One evaluated proximal gradient step, reported to observers.
#[derive(Debug, Clone, Copy)]
pub struct ProbeEvent<'a> {
    pub w: &'a Vector,
    pub x_next: &'a Vector,
    pub l: f64,
    pub accepted: bool,
}

/// Result of [`adapapg_solve`].
#[derive(Debug, Clone)]
pub struct AdapOutcome {
    pub x_hat: Vector,
    pub m_hat: f64,
    pub mu_hat: f64,
    /// Proximal gradient steps, counting every line-search probe.
    pub prox_steps: u64,
    /// `omega(x_hat)`.
    pub omega: f64,
    /// The step budget ran out before `omega <= eps_hat`; `x_hat` is the best
    /// iterate seen.
    pub budget_exhausted: bool,
    /// The strong convexity estimate hit its floor and stopped decreasing.
    pub mu_floored: bool,
    pub restarts: usize,
    pub mu_decreases: usize,
}

const MU_FLOOR: f64 = 1e-12;

/// `psi_L(w; x) = phi(w) + <grad phi(w), x - w> + L/2 |x - w|^2 + r(x)`.
pub fn local_model(phi: &dyn SmoothOracle, r: &Regularizer, w: &Vector, x: &Vector, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::config("L must be positive"));
    }
    let (fw, gw) = phi.value_and_gradient(w);
    Ok(model_value(fw, &gw, r, w, x, l))
}

fn model_value(fw: f64, gw: &Vector, r: &Regularizer, w: &Vector, x: &Vector, l: f64) -> f64 {
    let rx = r.value(x);
    if rx.is_infinite() {
        return f64::INFINITY;
    }
    let d = x - w;
    fw + gw.dot(&d) + 0.5 * l * d.norm_squared() + rx
}

/// Proximal gradient step from `w`: `T`, the mapping `L (w - T)` and the
/// local constant `S_L(w)` (zero when `T = w`).
#[derive(Debug, Clone)]
pub struct ProxGradStep {
    pub t: Vector,
    pub gmap: Vector,
    pub s: f64,
}

pub fn prox_grad_step(phi: &dyn SmoothOracle, r: &Regularizer, w: &Vector, l: f64) -> Result<ProxGradStep> {
    if !(l > 0.0) {
        return Err(Error::config("L must be positive"));
    }
    if w.len() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            found: w.len(),
        });
    }
    let gw = phi.gradient(w);
    let t = step_from(r, w, &gw, l);
    let gt = phi.gradient(&t);
    let s = local_constant(&gw, &gt, w, &t);
    let gmap = (w - &t) * l;
    Ok(ProxGradStep { t, gmap, s })
}

fn step_from(r: &Regularizer, w: &Vector, gw: &Vector, l: f64) -> Vector {
    r.prox_unchecked(&(w - gw / l), 1.0 / l)
}

fn local_constant(gw: &Vector, gt: &Vector, w: &Vector, t: &Vector) -> f64 {
    let dx = (t - w).norm();
    if dx == 0.0 {
        0.0
    } else {
        (gt - gw).norm() / dx
    }
}

/// `min_{xi in dr(x)} |grad phi(x) + xi|`.
pub fn omega(phi: &dyn SmoothOracle, r: &Regularizer, x: &Vector) -> Result<f64> {
    r.dist_neg_subdiff(x, &phi.gradient(x))
}

struct Budget {
    used: u64,
    limit: u64,
}

impl Budget {
    fn take(&mut self) -> Result<()> {
        if self.used >= self.limit {
            return Err(Error::LineSearchFailed(self.limit));
        }
        self.used += 1;
        Ok(())
    }
}

type Observer<'o> = Option<&'o mut dyn FnMut(ProbeEvent<'_>)>;

/// Shared probe loop. `base(L)` returns the base point for probe `L` and the
/// momentum coefficient used to build it.
#[allow(clippy::too_many_arguments)]
fn search(
    phi: &dyn SmoothOracle,
    r: &Regularizer,
    l_t: f64,
    gamma_inc: f64,
    budget: &mut Budget,
    observer: &mut Observer<'_>,
    mut base: impl FnMut(f64) -> (Vector, f64),
    fixed_base: bool,
) -> Result<StepResult> {
    let start = budget.used;
    let mut l = l_t / gamma_inc;
    let mut cached: Option<(Vector, f64, Vector)> = None;
    loop {
        l *= gamma_inc;
        if !l.is_finite() {
            return Err(Error::NonFinite("line search estimate"));
        }
        budget.take()?;
        let (w, alpha) = base(l);
        let (fw, gw) = match (&cached, fixed_base) {
            (Some((_, fw, gw)), true) => (*fw, gw.clone()),
            _ => {
                let (fw, gw) = phi.value_and_gradient(&w);
                if fixed_base {
                    cached = Some((w.clone(), fw, gw.clone()));
                }
                (fw, gw)
            }
        };
        let t = step_from(r, &w, &gw, l);
        let (ft, gt) = phi.value_and_gradient(&t);
        if ft.is_nan() {
            return Err(Error::NonFinite("objective at trial point"));
        }
        let accepted = descent_holds(fw, &gw, ft, &gt, r, &w, &t, l);
        if let Some(obs) = observer.as_mut() {
            obs(ProbeEvent {
                w: &w,
                x_next: &t,
                l,
                accepted,
            });
        }
        if accepted {
            let s = local_constant(&gw, &gt, &w, &t);
            let p = (&w - &t) * l;
            return Ok(StepResult {
                w,
                x_next: t,
                m: l,
                p,
                s,
                alpha,
                prox_steps_used: budget.used - start,
                grad_next: gt,
            });
        }
    }
}

/// Size of the quadratic model term `L/2 |T - w|^2`, relative to
/// `max(1, |phi(w)|, |phi(T)|)`, below which the value-based descent test is
/// dominated by rounding and the curvature form is used instead.
pub const VALUE_NOISE_TOL: f64 = 1e-10;

pub fn in_value_noise(fw: f64, ft: f64, l: f64, dd: f64) -> bool {
    0.5 * l * dd < VALUE_NOISE_TOL * ft.abs().max(fw.abs()).max(1.0)
}

/// Sufficient descent test `F(T) <= psi_L(w; T)`. When the two function
/// values agree to within rounding, the Bregman term is replaced by its
/// second-order equivalent `<grad phi(T) - grad phi(w), T - w> / 2`, which
/// does not suffer from cancellation.
#[allow(clippy::too_many_arguments)]
pub fn descent_holds(
    fw: f64,
    gw: &Vector,
    ft: f64,
    gt: &Vector,
    r: &Regularizer,
    w: &Vector,
    t: &Vector,
    l: f64,
) -> bool {
    let d = t - w;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return true;
    }
    if !in_value_noise(fw, ft, l, dd) {
        ft + r.value(t) <= model_value(fw, gw, r, w, t, l)
    } else {
        (gt - gw).dot(&d) <= l * dd
    }
}

fn check_start(r: &Regularizer, x: &Vector) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("starting point"));
    }
    r.domain().ensure_contains(x)
}

/// Backtracking proximal gradient step from `x_t`: probes `L_t`,
/// `gamma_inc L_t`, ... until `F(T_L(x_t)) <= psi_L(x_t; T_L(x_t))`.
pub fn line_search(
    phi: &dyn SmoothOracle,
    r: &Regularizer,
    x_t: &Vector,
    l_t: f64,
    cfg: &AdapConfig,
) -> Result<StepResult> {
    if !(l_t > 0.0) {
        return Err(Error::config("L_t must be positive"));
    }
    check_start(r, x_t)?;
    let mut budget = Budget {
        used: 0,
        limit: cfg.max_prox_steps,
    };
    search(phi, r, l_t, cfg.gamma_inc, &mut budget, &mut None, |_| (x_t.clone(), 1.0), true)
}

/// Accelerated step: for every probe `L`, `alpha = sqrt(mu / L)` and the
/// extrapolated base point is
/// `x_t + alpha (1 - alpha_prev) / (alpha_prev (1 + alpha)) (x_t - x_prev)`.
#[allow(clippy::too_many_arguments)]
pub fn accel_line_search(
    phi: &dyn SmoothOracle,
    r: &Regularizer,
    x_t: &Vector,
    x_prev: &Vector,
    l_t: f64,
    mu: f64,
    alpha_prev: f64,
    cfg: &AdapConfig,
) -> Result<StepResult> {
    if !(mu > 0.0) || !(alpha_prev > 0.0 && alpha_prev <= 1.0) || !(l_t > 0.0) {
        return Err(Error::config("need mu > 0, 0 < alpha_prev <= 1 and L_t > 0"));
    }
    check_start(r, x_t)?;
    if x_prev.len() != x_t.len() {
        return Err(Error::DimensionMismatch {
            expected: x_t.len(),
            found: x_prev.len(),
        });
    }
    let mut budget = Budget {
        used: 0,
        limit: cfg.max_prox_steps,
    };
    accel_inner(phi, r, x_t, x_prev, l_t, mu, alpha_prev, cfg.gamma_inc, &mut budget, &mut None)
}

#[allow(clippy::too_many_arguments)]
fn accel_inner(
    phi: &dyn SmoothOracle,
    r: &Regularizer,
    x_t: &Vector,
    x_prev: &Vector,
    l_t: f64,
    mu: f64,
    alpha_prev: f64,
    gamma_inc: f64,
    budget: &mut Budget,
    observer: &mut Observer<'_>,
) -> Result<StepResult> {
    let diff = x_t - x_prev;
    let no_momentum = alpha_prev == 1.0 || diff.iter().all(|&v| v == 0.0);
    search(
        phi,
        r,
        l_t,
        gamma_inc,
        budget,
        observer,
        |l| {
            let alpha = (mu / l).sqrt();
            if no_momentum {
                return (x_t.clone(), alpha);
            }
            let coef = alpha * (1.0 - alpha_prev) / (alpha_prev * (1.0 + alpha));
            (x_t + &diff * coef, alpha)
        },
        no_momentum,
    )
}

/// Runs the adaptive accelerated method from `x_ini` until
/// `omega(x) <= cfg.eps_hat` or `cfg.max_prox_steps` is spent.
pub fn adapapg_solve(sub: &CompositeSubproblem, x_ini: &Vector, cfg: &AdapConfig) -> Result<AdapOutcome> {
    run(sub, x_ini, cfg, None)
}

/// [`adapapg_solve`] that reports every evaluated proximal gradient step.
pub fn adapapg_solve_observed(
    sub: &CompositeSubproblem,
    x_ini: &Vector,
    cfg: &AdapConfig,
    observer: &mut dyn FnMut(ProbeEvent<'_>),
) -> Result<AdapOutcome> {
    run(sub, x_ini, cfg, Some(observer))
}

fn run(
    sub: &CompositeSubproblem,
    x_ini: &Vector,
    cfg: &AdapConfig,
    mut observer: Observer<'_>,
) -> Result<AdapOutcome> {
    cfg.validate()?;
    let phi = sub.phi.as_ref();
    let r = &sub.r;
    check_start(r, x_ini)?;
    let mut budget = Budget {
        used: 0,
        limit: cfg.max_prox_steps,
    };
    let l_ini = cfg.l_ini.max(cfg.l_min);

    let init = match search(
        phi,
        r,
        l_ini,
        cfg.gamma_inc,
        &mut budget,
        &mut observer,
        |_| (x_ini.clone(), 1.0),
        true,
    ) {
        Ok(s) => s,
        Err(Error::LineSearchFailed(_)) => {
            let om = r.dist_neg_subdiff(x_ini, &phi.gradient(x_ini))?;
            return Ok(AdapOutcome {
                x_hat: x_ini.clone(),
                m_hat: l_ini,
                mu_hat: cfg.mu0,
                prox_steps: budget.used,
                omega: om,
                budget_exhausted: true,
                mu_floored: false,
                restarts: 0,
                mu_decreases: 0,
            });
        }
        Err(e) => return Err(e),
    };

    let mut best_omega = r.dist_neg_subdiff(&init.x_next, &init.grad_next)?;
    let mut best_x = init.x_next.clone();
    let mut out = AdapOutcome {
        x_hat: init.x_next.clone(),
        m_hat: init.m,
        mu_hat: cfg.mu0,
        prox_steps: budget.used,
        omega: best_omega,
        budget_exhausted: false,
        mu_floored: false,
        restarts: 0,
        mu_decreases: 0,
    };
    let mut p_ref_norm = init.p.norm();
    if p_ref_norm == 0.0 {
        // x_ini is already a fixed point of the proximal gradient map
        return Ok(out);
    }
    let mut m_ref = init.m;
    let mut s_ref = init.s;

    let mut epoch_x0 = init.x_next;
    let mut epoch_l0 = init.m;
    let mut x_t = epoch_x0.clone();
    let mut x_prev = epoch_x0.clone();
    let mut l_t = epoch_l0;
    let mut mu = cfg.mu0;
    let mut alpha_prev = 1.0;
    let mut tau = 1.0;

    loop {
        let step = match accel_inner(
            phi,
            r,
            &x_t,
            &x_prev,
            l_t,
            mu,
            alpha_prev,
            cfg.gamma_inc,
            &mut budget,
            &mut observer,
        ) {
            Ok(s) => s,
            Err(Error::LineSearchFailed(_)) => {
                out.x_hat = best_x;
                out.omega = best_omega;
                out.mu_hat = mu;
                out.prox_steps = budget.used;
                out.budget_exhausted = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let tau_next = tau * (1.0 - step.alpha);
        let om = r.dist_neg_subdiff(&step.x_next, &step.grad_next)?;
        out.m_hat = step.m;
        if om < best_omega {
            best_omega = om;
            best_x = step.x_next.clone();
        }
        if om <= cfg.eps_hat {
            out.x_hat = step.x_next;
            out.omega = om;
            out.mu_hat = mu;
            out.prox_steps = budget.used;
            return Ok(out);
        }

        let p_norm = step.p.norm();
        if p_norm <= cfg.theta_sc * p_ref_norm {
            // enough progress: new epoch from the latest iterate
            out.restarts += 1;
            epoch_x0 = step.x_next.clone();
            epoch_l0 = step.m;
            p_ref_norm = p_norm;
            m_ref = step.m;
            s_ref = step.s;
            x_t = step.x_next;
            x_prev = x_t.clone();
            l_t = epoch_l0;
            alpha_prev = 1.0;
            tau = 1.0;
        } else if 2.0 * (2.0 * tau).sqrt() * (step.m / mu) * (1.0 + s_ref / m_ref) <= cfg.theta_sc
            && mu / cfg.gamma_sc >= MU_FLOOR
        {
            // progress too slow for the current estimate: shrink mu and
            // restart the epoch
            out.mu_decreases += 1;
            mu /= cfg.gamma_sc;
            x_t = epoch_x0.clone();
            x_prev = epoch_x0.clone();
            l_t = epoch_l0;
            alpha_prev = 1.0;
            tau = 1.0;
        } else {
            if 2.0 * (2.0 * tau).sqrt() * (step.m / mu) * (1.0 + s_ref / m_ref) <= cfg.theta_sc {
                out.mu_floored = true;
            }
            l_t = cfg.l_min.max(step.m / cfg.gamma_dec);
            x_prev = std::mem::replace(&mut x_t, step.x_next);
            alpha_prev = step.alpha;
            tau = tau_next;
        }
    }
}
