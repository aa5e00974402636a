//! First-order certification: KKT residuals against given multipliers, the
//! multiplier-free stationarity measure, a nonnegative least-squares kernel,
//! and an empirical estimate of the non-singularity constant.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data_io::format_g;
use crate::error::{Error, Result};
use crate::ippp::Multipliers;
use crate::model::{ConstrainedProblem, Vector};

/// Multipliers at or below this value count as zero for the active-set rule.
pub const MULTIPLIER_ZERO_TOL: f64 = 1e-12;
/// `f_i(x) >= -ACTIVE_CONSTRAINT_TOL` puts constraint `i` in the active set.
pub const ACTIVE_CONSTRAINT_TOL: f64 = 1e-12;
/// Samples with infeasibility at or below this are skipped by the estimator.
pub const INFORMATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    EpsStationary,
    WeakEpsStationary,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::EpsStationary => "eps_stationary",
            Verdict::WeakEpsStationary => "weak_eps_stationary",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KKTReport {
    pub eps: f64,
    /// `dist(grad f0 + J_f' lambda + J_c' y, -dg(x))`
    pub dual_residual: f64,
    /// `sqrt(|c|^2 + |[f]_+|^2)`
    pub primal_residual: f64,
    /// `sum |lambda_i f_i|`
    pub comp_residual: f64,
    /// Every multiplier is nonnegative and vanishes on strictly inactive
    /// constraints.
    pub active_set_valid: bool,
    pub verdict: Verdict,
}

impl KKTReport {
    /// Flat `key=value` block, one pair per line.
    pub fn to_kv(&self) -> String {
        format!(
            "eps={}\ndual_residual={}\nprimal_residual={}\ncomp_residual={}\nactive_set_valid={}\nverdict={}\n",
            format_g(self.eps),
            format_g(self.dual_residual),
            format_g(self.primal_residual),
            format_g(self.comp_residual),
            self.active_set_valid,
            self.verdict.as_str()
        )
    }
}

pub fn eps_stationary_check(p: &ConstrainedProblem, x: &Vector, mult: &Multipliers, eps: f64) -> Result<KKTReport> {
    p.check_point(x)?;
    if mult.lambda.len() != p.m() {
        return Err(Error::DimensionMismatch {
            expected: p.m(),
            found: mult.lambda.len(),
        });
    }
    if mult.y.len() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: mult.y.len(),
        });
    }
    let fv = p.ineq_values(x);
    let cv = p.eq_values(x);
    let grad = p.lagrangian_gradient(x, &mult.lambda, &mult.y);
    let dual = p.reg.dist_neg_subdiff(x, &grad)?;
    let primal = (cv.norm_squared() + fv.map(|v| v.max(0.0)).norm_squared()).sqrt();
    let comp = mult.lambda.iter().zip(fv.iter()).map(|(l, f)| (l * f).abs()).sum();
    let active_set_valid = mult
        .lambda
        .iter()
        .zip(fv.iter())
        .all(|(&l, &f)| l >= -MULTIPLIER_ZERO_TOL && (f >= -ACTIVE_CONSTRAINT_TOL || l <= MULTIPLIER_ZERO_TOL));
    let weak = dual <= eps && primal <= eps;
    let verdict = if weak && comp <= eps && active_set_valid {
        Verdict::EpsStationary
    } else if weak {
        Verdict::WeakEpsStationary
    } else {
        Verdict::Fail
    };
    Ok(KKTReport {
        eps,
        dual_residual: dual,
        primal_residual: primal,
        comp_residual: comp,
        active_set_valid,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: Vector,
    /// `|Ax - b|`
    pub residual: f64,
    /// Largest violation of the optimality conditions
    /// `w = A'(b - Ax) <= 0` on zero coordinates and `w = 0` on positive ones.
    pub kkt_violation: f64,
    pub iterations: usize,
}

fn lstsq(a: &DMatrix<f64>, cols: &[usize], b: &Vector) -> Vector {
    let sub = a.select_columns(cols);
    let svd = sub.svd(true, true);
    let tol = 1e-13 * svd.singular_values.max().max(1e-300) * cols.len().max(a.nrows()) as f64;
    svd.solve(b, tol).unwrap_or_else(|_| Vector::zeros(cols.len()))
}

/// `min |Ax - b|` subject to `x >= 0` by the Lawson-Hanson active-set method.
pub fn nnls(a: &DMatrix<f64>, b: &Vector) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if n == 0 {
        return Err(Error::config("nnls needs at least one column"));
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nnls input"));
    }
    let cap = n * 30;
    let scale = (a.norm() * b.norm()).max(1e-300);
    let tol = 1e-12 * scale;
    let mut x = Vector::zeros(n);
    let mut passive = vec![false; n];
    let mut iters = 0;
    let mut w = a.tr_mul(&(b - a * &x));
    loop {
        let cand = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            iters += 1;
            if iters > cap {
                return Err(Error::IterationCap(cap));
            }
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let zp = lstsq(a, &cols, b);
            let mut z = Vector::zeros(n);
            for (k, &c) in cols.iter().enumerate() {
                z[c] = zp[k];
            }
            if cols.iter().all(|&c| z[c] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &c in &cols {
                if z[c] <= 0.0 {
                    let d = x[c] - z[c];
                    if d > 0.0 {
                        alpha = alpha.min(x[c] / d);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            x += (&z - &x) * alpha;
            let small = 1e-14 * x.amax();
            for &c in &cols {
                if x[c] <= small {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = a.tr_mul(&(b - a * &x));
    }
    let r = b - a * &x;
    w = a.tr_mul(&r);
    let kkt_violation = (0..n)
        .map(|j| if x[j] > 0.0 { w[j].abs() } else { w[j].max(0.0) })
        .fold(0.0, f64::max);
    Ok(NnlsSolution {
        x,
        residual: r.norm(),
        kkt_violation,
        iterations: iters,
    })
}

/// Columns of the cone problem behind the multiplier-free measure: active
/// inequality gradients, `+-` equality gradients, and normal-cone rays.
pub fn stationarity_generators(p: &ConstrainedProblem, x: &Vector) -> Result<Vec<Vector>> {
    p.check_point(x)?;
    if !p.reg.is_pure_indicator() {
        return Err(Error::UnsupportedRegularizer(
            "the stationarity measure needs an indicator regularizer",
        ));
    }
    p.reg.domain().ensure_contains(x)?;
    let mut cols = Vec::new();
    for f in &p.ineq {
        if f.value(x) >= -ACTIVE_CONSTRAINT_TOL {
            cols.push(f.gradient(x));
        }
    }
    for c in &p.eq {
        let g = c.gradient(x);
        cols.push(-&g);
        cols.push(g);
    }
    cols.extend(p.reg.domain().normal_cone_generators(x)?);
    Ok(cols)
}

/// `min_{lambda >= 0, y} dist(grad f0 + sum_{i in I(x)} lambda_i grad f_i +
/// sum_j y_j grad c_j, -N_X(x))` with `I(x) = {i : f_i(x) >= 0}`.
pub fn stationarity_measure(p: &ConstrainedProblem, x: &Vector) -> Result<f64> {
    let cols = stationarity_generators(p, x)?;
    let b = -p.f0.gradient(x);
    cone_residual(&cols, &b)
}

/// `min_{z >= 0} |sum_l z_l col_l - b|`, `|b|` for an empty set.
pub fn cone_residual(cols: &[Vector], b: &Vector) -> Result<f64> {
    if cols.is_empty() {
        return Ok(b.norm());
    }
    let a = DMatrix::from_columns(cols);
    Ok(nnls(&a, b)?.residual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonsingularityEstimate {
    pub nu: f64,
    pub informative: usize,
}

/// Minimum over seeded uniform samples `x in X` of
/// `dist(J_c' c + J_f' [f]_+, -N_X(x)) / sqrt(|c|^2 + |[f]_+|^2)`, skipping
/// samples that are (numerically) feasible.
pub fn estimate_nonsingularity(p: &ConstrainedProblem, n_samples: usize, seed: u64) -> Result<NonsingularityEstimate> {
    if n_samples == 0 {
        return Err(Error::config("n_samples must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = p.reg.domain();
    let mut nu = f64::INFINITY;
    let mut informative = 0;
    for _ in 0..n_samples {
        let x = dom.sample_uniform(&mut rng);
        let mut v = Vector::zeros(p.dim());
        let mut sq = 0.0;
        for f in &p.ineq {
            let (val, g) = f.value_and_gradient(&x);
            if val > 0.0 {
                v.axpy(val, &g, 1.0);
                sq += val * val;
            }
        }
        for c in &p.eq {
            let (val, g) = c.value_and_gradient(&x);
            v.axpy(val, &g, 1.0);
            sq += val * val;
        }
        let inf = sq.sqrt();
        if inf <= INFORMATIVE_TOL {
            continue;
        }
        informative += 1;
        nu = nu.min(dom.dist_to_neg_normal_cone(&x, &v)? / inf);
    }
    if informative == 0 {
        return Err(Error::AllSamplesFeasible(n_samples));
    }
    Ok(NonsingularityEstimate { nu, informative })
}
