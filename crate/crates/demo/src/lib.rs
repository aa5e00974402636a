//! Browser demo: three operations returning JSON for the page in `www/`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ippp::adapapg::{adapapg_solve_observed, AdapConfig, CompositeSubproblem};
use ippp::ippp::{ippp_solve_observed, EpsRule, IpppSettings, Schedule, SelectOption, WeakConvexityProfile};
use ippp::model::{ConstrainedProblem, DomainSet, Quadratic, Regularizer, SharedOracle};

/// Radius of the disk that bounds both toy problems.
pub const DISK_RADIUS: f64 = 2.0;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn pair(v: &DVector<f64>) -> Value {
    json!([v[0], v[1]])
}

/// Minimizes `1/2 x'Hx + q'x` over the disk of radius `radius`, starting at
/// the origin. Returns the accepted iterates, the minimizer and step counts.
pub fn inner_path(h11: f64, h12: f64, h22: f64, q1: f64, q2: f64, radius: f64, eps: f64) -> Result<Value, String> {
    let h = DMatrix::from_row_slice(2, 2, &[h11, h12, h12, h22]);
    let eig = h.clone().symmetric_eigen().eigenvalues;
    if eig.min() <= 0.0 {
        return Err(format!("H must be positive definite (eigenvalues {:.3}, {:.3})", eig[0], eig[1]));
    }
    let phi: SharedOracle = Arc::new(Quadratic::new(h, DVector::from_vec(vec![q1, q2]), 0.0));
    let reg = Regularizer::indicator(DomainSet::ball(2, radius).map_err(err)?);
    let sub = CompositeSubproblem::new(phi, reg).map_err(err)?;
    let cfg = AdapConfig {
        eps_hat: eps,
        max_prox_steps: 100_000,
        ..AdapConfig::default()
    };
    let mut path = vec![json!([0.0, 0.0])];
    let mut probes = 0usize;
    let out = adapapg_solve_observed(&sub, &DVector::zeros(2), &cfg, &mut |ev| {
        probes += 1;
        if ev.accepted {
            path.push(pair(ev.x_next));
        }
    })
    .map_err(err)?;
    Ok(json!({
        "path": path,
        "x": pair(&out.x_hat),
        "omega": out.omega,
        "prox_steps": out.prox_steps,
        "rejected": probes - (path.len() - 1),
        "restarts": out.restarts,
    }))
}

/// `min 1/2 |x - a|^2` over the disk of radius 2 subject to the non-convex
/// constraint `1 - |x|^2 <= 0` (stay outside the unit disk).
pub fn toy_problem(a1: f64, a2: f64) -> Result<ConstrainedProblem, String> {
    let a = DVector::from_vec(vec![a1, a2]);
    let f0 = Quadratic::new(DMatrix::identity(2, 2), -&a, 0.5 * a.norm_squared()).with_bound_on_ball(DISK_RADIUS);
    let f1 = Quadratic::new(DMatrix::identity(2, 2) * -2.0, DVector::zeros(2), 1.0).with_bound_on_ball(DISK_RADIUS);
    let reg = Regularizer::indicator(DomainSet::ball(2, DISK_RADIUS).map_err(err)?);
    ConstrainedProblem::new(Arc::new(f0), vec![Arc::new(f1)], vec![], reg).map_err(err)
}

fn schedule_for(p: &ConstrainedProblem, kind: &str, gamma: f64, beta: f64) -> Result<Schedule, String> {
    match kind {
        "nonconvex" => {
            let w = WeakConvexityProfile::from_problem(p).map_err(err)?;
            Ok(Schedule::NonconvexCbrt {
                beta,
                rho0: w.rho0,
                rho_c: w.rho_c,
            })
        }
        "scaled" => Ok(Schedule::Scaled {
            gamma,
            beta,
            power: 1.0 / 3.0,
            eps: EpsRule::PenaltyScaled,
        }),
        "convex" => Ok(Schedule::ConvexSqrt { gamma, beta, rho0: None }),
        other => Err(format!("unknown schedule '{other}'")),
    }
}

/// Runs the outer method on the toy problem from `(x1, x2)` and returns the
/// prox centers with their per-iteration metrics.
#[allow(clippy::too_many_arguments)]
pub fn outer_path(
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    schedule: &str,
    gamma: f64,
    beta: f64,
    k_max: usize,
) -> Result<Value, String> {
    let p = toy_problem(a1, a2)?;
    let st = IpppSettings::new(schedule_for(&p, schedule, gamma, beta)?, SelectOption::I, 1e-4, k_max.clamp(1, 5000));
    let x0 = DVector::from_vec(vec![x1, x2]);
    let mut centers = vec![pair(&x0)];
    let out = ippp_solve_observed(&p, &st, &x0, &mut |ev| centers.push(pair(ev.x_next))).map_err(err)?;
    let rows: Vec<Value> = out
        .trace
        .records
        .iter()
        .map(|r| json!({"k": r.k, "gamma": r.gamma, "beta": r.beta, "objective": r.objective, "S": r.s, "F": r.f, "steps": r.cum_steps}))
        .collect();
    Ok(json!({
        "centers": centers,
        "records": rows,
        "x_out": pair(&out.x_out),
        "lambda": out.multipliers.lambda[0],
        "selected": out.trace.r_index,
        "status": format!("{:?}", out.status),
    }))
}

/// The first `k` values of `(gamma_k, beta_k, eps_hat_k)` for a schedule.
pub fn schedule_curves(kind: &str, gamma: f64, beta: f64, k: usize) -> Result<Value, String> {
    let p = toy_problem(0.0, 0.0)?;
    let s = schedule_for(&p, kind, gamma, beta)?;
    s.validate().map_err(err)?;
    let mut g = Vec::new();
    let mut b = Vec::new();
    let mut e = Vec::new();
    for i in 0..k.clamp(1, 10_000) {
        let v = s.values(i).map_err(err)?;
        g.push(v.gamma);
        b.push(v.beta);
        e.push(v.eps_hat);
    }
    Ok(json!({"gamma": g, "beta": b, "eps_hat": e}))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = innerPath)]
pub fn inner_path_js(h11: f64, h12: f64, h22: f64, q1: f64, q2: f64, radius: f64, eps: f64) -> Result<String, JsValue> {
    to_js(inner_path(h11, h12, h22, q1, q2, radius, eps))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = outerPath)]
pub fn outer_path_js(
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    schedule: &str,
    gamma: f64,
    beta: f64,
    k_max: usize,
) -> Result<String, JsValue> {
    to_js(outer_path(a1, a2, x1, x2, schedule, gamma, beta, k_max))
}

#[wasm_bindgen(js_name = scheduleCurves)]
pub fn schedule_curves_js(kind: &str, gamma: f64, beta: f64, k: usize) -> Result<String, JsValue> {
    to_js(schedule_curves(kind, gamma, beta, k))
}
