//! Problem builders: multi-class Neyman-Pearson classification and small
//! synthetic instances with known certificates.
//!
//! # mNPC metadata
//!
//! For class `k` with points `xi` (count `N`), the loss is
//! `l_k(x) = 1/N sum_xi sum_{l != k} phi(<x_k - x_l, xi>)` with the sigmoid
//! `phi(z) = 1/(1+e^z)`, for which `|phi'| <= 1/4` and `|phi''| <= 1/(6 sqrt 3)`.
//!
//! * Gradient. Write `a_l = 1/N sum_xi phi'(z_l) xi`. Block `k` of the
//!   gradient is `sum_l a_l` and block `l` is `-a_l`, so
//!   `|grad|^2 <= ((K-1)^2 + (K-1)) max|a_l|^2` and `|a_l| <= mean|xi| / 4`,
//!   giving `|grad| <= sqrt(K(K-1)) mean|xi| / 4`.
//! * Hessian. Each pair contributes `phi''(z) v v'` with `v = (e_k - e_l) (x) xi`.
//!   Summed over `l` the block pattern is the Laplacian of a star on `K`
//!   nodes, whose largest eigenvalue is `K`, hence
//!   `|hess| <= K mean|xi|^2 / (6 sqrt 3)`. This bounds both the smoothness
//!   and the weak convexity constant.
//! * Value. `l_k` lies in `[0, K-1]`, so the shifted constraint
//!   `l_k - r_k` is bounded by `max(r_k, K-1-r_k)` in magnitude.
//!
//! The declared `B` is the larger of the value and gradient bounds.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::ippp::Multipliers;
use crate::model::{ConstrainedProblem, DomainSet, FnOracle, OracleMeta, Quadratic, Regularizer, SharedOracle, SmoothOracle, Vector};

/// Largest magnitude of the sigmoid's second derivative.
pub const SIGMOID_CURVATURE: f64 = 0.096_225_044_864_937_63; // 1/(6 sqrt 3)

/// Labelled point sets of a common dimension, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    classes: Vec<Vec<Vector>>,
    labels: Vec<i64>,
    dim: usize,
}

impl Dataset {
    /// Classes are labelled `1..=K` in the given order.
    pub fn new(classes: Vec<Vec<Vector>>) -> Result<Self> {
        let dim = classes.first().and_then(|c| c.first()).map_or(0, |p| p.len());
        let labels = (1..=classes.len() as i64).collect();
        Self::with_labels(classes, labels, dim)
    }

    pub fn with_labels(classes: Vec<Vec<Vector>>, labels: Vec<i64>, dim: usize) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::config("dataset has no classes"));
        }
        if labels.len() != classes.len() {
            return Err(Error::config("one label per class required"));
        }
        for (cls, label) in classes.iter().zip(&labels) {
            if cls.is_empty() {
                return Err(Error::config(format!("class {label} is empty")));
            }
            for p in cls {
                if p.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: p.len(),
                    });
                }
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("data point"));
                }
            }
        }
        Ok(Self { classes, labels, dim })
    }

    pub fn classes(&self) -> &[Vec<Vector>] {
        &self.classes
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Moves the class with `label` to the front, keeping the others in order.
    pub fn with_objective_class(mut self, label: i64) -> Result<Self> {
        let i = self
            .labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::config(format!("no class with label {label}")))?;
        let c = self.classes.remove(i);
        let l = self.labels.remove(i);
        self.classes.insert(0, c);
        self.labels.insert(0, l);
        Ok(self)
    }
}

/// `phi(z) = 1/(1+e^z)` and its derivative, without overflow.
pub fn sigmoid_loss(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        let s = 1.0 + e;
        (e / s, -e / (s * s))
    } else {
        let e = z.exp();
        let s = 1.0 + e;
        (1.0 / s, -e / (s * s))
    }
}

/// Loss of one class against all others, shifted by `offset`.
struct ClassLoss {
    class: usize,
    blocks: usize,
    block_dim: usize,
    points: DMatrix<f64>,
    offset: f64,
    meta: OracleMeta,
}

impl ClassLoss {
    fn scores(&self, x: &Vector) -> DMatrix<f64> {
        let xs = DMatrix::from_column_slice(self.block_dim, self.blocks, x.as_slice());
        &self.points * xs
    }

    fn eval(&self, x: &Vector, want_grad: bool) -> (f64, Option<Vector>) {
        let n = self.points.nrows();
        let inv_n = 1.0 / n as f64;
        let u = self.scores(x);
        let mut val = 0.0;
        let mut weights = DMatrix::zeros(n, self.blocks);
        for l in (0..self.blocks).filter(|&l| l != self.class) {
            for i in 0..n {
                let (v, dv) = sigmoid_loss(u[(i, self.class)] - u[(i, l)]);
                val += v;
                weights[(i, l)] = -dv * inv_n;
                weights[(i, self.class)] += dv * inv_n;
            }
        }
        let val = val * inv_n - self.offset;
        if !want_grad {
            return (val, None);
        }
        let g = self.points.transpose() * weights;
        (val, Some(Vector::from_column_slice(g.as_slice())))
    }
}

impl SmoothOracle for ClassLoss {
    fn dim(&self) -> usize {
        self.blocks * self.block_dim
    }

    fn value(&self, x: &Vector) -> f64 {
        self.eval(x, false).0
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.eval(x, true).1.expect("gradient requested")
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let (v, g) = self.eval(x, true);
        (v, g.expect("gradient requested"))
    }

    fn meta(&self) -> OracleMeta {
        self.meta
    }
}

fn class_loss(data: &Dataset, class: usize, offset: f64, rho_override: Option<f64>) -> ClassLoss {
    let pts = &data.classes()[class];
    let d = data.dim();
    let k = data.num_classes() as f64;
    let points = DMatrix::from_fn(pts.len(), d, |i, j| pts[i][j]);
    let n = pts.len() as f64;
    let mean_norm = pts.iter().map(|p| p.norm()).sum::<f64>() / n;
    let mean_sq = pts.iter().map(|p| p.norm_squared()).sum::<f64>() / n;
    let curvature = k * mean_sq * SIGMOID_CURVATURE;
    let grad_bound = (k * (k - 1.0)).sqrt() * mean_norm / 4.0;
    let value_bound = offset.abs().max((k - 1.0 - offset).abs());
    ClassLoss {
        class,
        blocks: data.num_classes(),
        block_dim: d,
        points,
        offset,
        meta: OracleMeta {
            smoothness: Some(curvature),
            weak_convexity: Some(rho_override.unwrap_or(curvature)),
            bound: Some(grad_bound.max(value_bound)),
        },
    }
}

/// mNPC over `x = (x_1, ..., x_K)` with `|x_k| <= lambda`: minimize the
/// class-1 loss subject to `loss_k - r_k <= 0` for `k = 2..K`.
pub fn mnpc_build(data: &Dataset, r: &[f64], lambda: f64) -> Result<ConstrainedProblem> {
    mnpc_build_with(data, r, lambda, None)
}

/// As [`mnpc_build`], replacing the derived weak convexity constant of every
/// constraint by `rho_override` when given.
pub fn mnpc_build_with(data: &Dataset, r: &[f64], lambda: f64, rho_override: Option<f64>) -> Result<ConstrainedProblem> {
    let k = data.num_classes();
    if k < 2 {
        return Err(Error::config("mNPC needs at least two classes"));
    }
    if r.len() != k - 1 {
        return Err(Error::config(format!("expected {} thresholds, got {}", k - 1, r.len())));
    }
    if r.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::config("thresholds r_k must be positive"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config("lambda must be positive"));
    }
    if let Some(rho) = rho_override {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::config("weak convexity override must be non-negative"));
        }
    }
    let f0: SharedOracle = Arc::new(class_loss(data, 0, 0.0, None));
    let ineq: Vec<SharedOracle> = (1..k)
        .map(|c| Arc::new(class_loss(data, c, r[c - 1], rho_override)) as SharedOracle)
        .collect();
    let reg = Regularizer::indicator(DomainSet::uniform_ball_product(data.dim(), k, lambda)?);
    ConstrainedProblem::new(f0, ineq, vec![], reg)
}

/// The thresholds `r_k = 0.5 (K - 1)` used in the reference experiments.
pub fn default_thresholds(num_classes: usize) -> Vec<f64> {
    vec![0.5 * (num_classes as f64 - 1.0); num_classes.saturating_sub(1)]
}

/// `per_class` Gaussian points per class with unit variance; class `j` is
/// centred at `2 e_{j mod d}`.
pub fn gaussian_dataset(num_classes: usize, dim: usize, per_class: usize, seed: u64) -> Result<Dataset> {
    if num_classes == 0 || dim == 0 || per_class == 0 {
        return Err(Error::config("gaussian dataset needs positive sizes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let classes = (0..num_classes)
        .map(|j| {
            (0..per_class)
                .map(|_| Vector::from_fn(dim, |i, _| normal.sample(&mut rng) + if i == j % dim { 2.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    Dataset::new(classes)
}

/// Synthetic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Projection onto a half-space inside a large ball.
    ConvexQp,
    /// As `ConvexQp` with an additional affine equality.
    ConvexQpWithEquality,
    /// Weakly convex objective and constraint with `x = 0` strictly feasible.
    WeaklyConvex,
}

/// What is known about a synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Exact KKT point and multipliers.
    Kkt { x: Vector, multipliers: Multipliers },
    /// A strictly feasible point and the regularity constants.
    FeasibleStart {
        x0: Vector,
        rho0: f64,
        rho_c: f64,
        constraint_meta: Vec<OracleMeta>,
    },
}

/// Radius of the ball used by the convex QP family.
pub const CONVEX_QP_RADIUS: f64 = 10.0;
/// Radius of the ball used by the weakly convex family.
pub const WEAKLY_CONVEX_RADIUS: f64 = 0.5;
/// Coefficient of the sine perturbation in the weakly convex objective.
pub const WEAKLY_CONVEX_SINE: f64 = 0.2;

pub fn synthetic_build(kind: SyntheticKind, seed: u64, dim: usize) -> Result<(ConstrainedProblem, Certificate)> {
    if dim == 0 || dim > 50 {
        return Err(Error::config("synthetic dimension must be in 1..=50"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SyntheticKind::ConvexQp => convex_qp(&mut rng, dim, false),
        SyntheticKind::ConvexQpWithEquality => convex_qp(&mut rng, dim, true),
        SyntheticKind::WeaklyConvex => weakly_convex(&mut rng, dim),
    }
}

fn convex_qp(rng: &mut ChaCha8Rng, d: usize, with_eq: bool) -> Result<(ConstrainedProblem, Certificate)> {
    let unif = Uniform::new(-1.0, 1.0).expect("valid range");
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let x0 = Vector::from_fn(d, |_, _| unif.sample(rng));
    let mut a = Vector::from_fn(d, |_, _| normal.sample(rng));
    a /= a.norm();
    // x0 violates a'x <= b by a margin in [0.5, 1]
    let b = a.dot(&x0) - Uniform::new(0.5, 1.0).expect("valid range").sample(rng);
    let e = if with_eq && d >= 2 {
        let mut e = Vector::from_fn(d, |_, _| normal.sample(rng));
        e /= e.norm();
        let h = Uniform::new(-0.5, 0.5).expect("valid range").sample(rng);
        Some((e, h))
    } else {
        None
    };
    let r = CONVEX_QP_RADIUS;
    let f0: SharedOracle = Arc::new(Quadratic::new(DMatrix::identity(d, d), -&x0, 0.5 * x0.norm_squared()).with_bound_on_ball(r));
    let f1: SharedOracle = Arc::new(Quadratic::linear(a.clone(), -b).with_bound_on_ball(r));
    let eq: Vec<SharedOracle> = e
        .iter()
        .map(|(e, h)| Arc::new(Quadratic::linear(e.clone(), -h).with_bound_on_ball(r)) as SharedOracle)
        .collect();
    let reg = Regularizer::indicator(DomainSet::ball(d, r)?);
    let p = ConstrainedProblem::new(f0, vec![f1], eq, reg)?;
    let cert = projection_certificate(&x0, &a, b, e.as_ref())?;
    Ok((p, cert))
}

/// Projection of `x0` onto `{a'x <= b, e'x = h}` by enumerating whether the
/// inequality is active. The ball is large enough to stay inactive.
fn projection_certificate(x0: &Vector, a: &Vector, b: f64, e: Option<&(Vector, f64)>) -> Result<Certificate> {
    for active in [false, true] {
        let mut rows: Vec<(&Vector, f64)> = Vec::new();
        if active {
            rows.push((a, b));
        }
        if let Some((e, h)) = e {
            rows.push((e, *h));
        }
        let m = rows.len();
        let nu = if m == 0 {
            Vector::zeros(0)
        } else {
            let gram = DMatrix::from_fn(m, m, |i, j| rows[i].0.dot(rows[j].0));
            let rhs = Vector::from_fn(m, |i, _| rows[i].0.dot(x0) - rows[i].1);
            gram.lu()
                .solve(&rhs)
                .ok_or_else(|| Error::config("degenerate constraint normals"))?
        };
        let mut x = x0.clone();
        for (i, (g, _)) in rows.iter().enumerate() {
            x.axpy(-nu[i], g, 1.0);
        }
        let lambda = if active { nu[0] } else { 0.0 };
        let feasible = a.dot(&x) - b <= 1e-12;
        if feasible && lambda >= 0.0 && x.norm() < CONVEX_QP_RADIUS {
            let mut lam = Vector::from_element(1, lambda);
            let mut y = Vector::zeros(if e.is_some() { 1 } else { 0 });
            if e.is_some() {
                y[0] = nu[m - 1];
            }
            if !active {
                lam[0] = 0.0;
            }
            return Ok(Certificate::Kkt {
                x,
                multipliers: Multipliers { lambda: lam, y },
            });
        }
    }
    Err(Error::config("no active set satisfies the KKT conditions"))
}

fn weakly_convex(rng: &mut ChaCha8Rng, d: usize) -> Result<(ConstrainedProblem, Certificate)> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let radius = WEAKLY_CONVEX_RADIUS;
    let c = WEAKLY_CONVEX_SINE;
    let a = DMatrix::from_fn(d, d, |_, _| normal.sample(rng) / (d as f64).sqrt());
    let bvec = Vector::from_fn(d, |_, _| normal.sample(rng));
    let ata = a.transpose() * &a;
    let l_ata = ata.clone().symmetric_eigen().eigenvalues.amax();
    let a_norm = l_ata.sqrt();
    let f0_val = {
        let (a, b) = (a.clone(), bvec.clone());
        move |x: &Vector| 0.5 * (&a * x - &b).norm_squared() + c * x.iter().map(|v| v.sin()).sum::<f64>()
    };
    let f0_grad = {
        let (a, b) = (a.clone(), bvec.clone());
        move |x: &Vector| a.transpose() * (&a * x - &b) + x.map(|v| c * v.cos())
    };
    let res = a_norm * radius + bvec.norm();
    let rho0 = c.abs();
    let f0_meta = OracleMeta::new(
        l_ata + rho0,
        rho0,
        (0.5 * res * res + rho0 * d as f64).max(a_norm * res + rho0 * (d as f64).sqrt()),
    );
    let f0: SharedOracle = Arc::new(FnOracle::new(d, f0_val, f0_grad).with_meta(f0_meta));

    // indefinite H with spectrum spread evenly over [-0.2, 0.2]
    let q = DMatrix::from_fn(d, d, |_, _| normal.sample(rng)).qr().q();
    let eig = Vector::from_fn(d, |i, _| if d == 1 { -0.2 } else { 0.2 * (-1.0 + 2.0 * i as f64 / (d - 1) as f64) });
    let h = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    let f1q = Quadratic::new(h, Vector::zeros(d), -0.02).with_bound_on_ball(radius);
    let meta1 = f1q.meta();
    let f1: SharedOracle = Arc::new(f1q);
    let reg = Regularizer::indicator(DomainSet::ball(d, radius)?);
    let p = ConstrainedProblem::new(f0, vec![f1], vec![], reg)?;
    let rho_c = meta1.weak_convexity.unwrap_or(0.0) * meta1.bound.unwrap_or(0.0);
    Ok((
        p,
        Certificate::FeasibleStart {
            x0: Vector::zeros(d),
            rho0,
            rho_c,
            constraint_meta: vec![meta1],
        },
    ))
}

/// True iff every inequality is at most `tol` and every equality is within
/// `tol` of zero at `x0`.
pub fn verify_initial_feasibility(p: &ConstrainedProblem, x0: &Vector, tol: f64) -> bool {
    if p.check_point(x0).is_err() {
        return false;
    }
    p.ineq_values(x0).iter().all(|&v| v <= tol) && p.eq_values(x0).iter().all(|v| v.abs() <= tol)
}

/// `min (x-1)^2` s.t. `x <= 0` on `[-2, 2]`, with `x* = 0`, `lambda* = 2`.
pub fn qp1d() -> (ConstrainedProblem, Certificate) {
    let f0: SharedOracle = Arc::new(Quadratic::new(DMatrix::from_element(1, 1, 2.0), Vector::from_element(1, -2.0), 1.0).with_bound_on_ball(2.0));
    let f1: SharedOracle = Arc::new(Quadratic::linear(Vector::from_element(1, 1.0), 0.0).with_bound_on_ball(2.0));
    let dom = DomainSet::boxed(Vector::from_element(1, -2.0), Vector::from_element(1, 2.0)).expect("valid box");
    let p = ConstrainedProblem::new(f0, vec![f1], vec![], Regularizer::indicator(dom)).expect("consistent fixture");
    let cert = Certificate::Kkt {
        x: Vector::zeros(1),
        multipliers: Multipliers {
            lambda: Vector::from_element(1, 2.0),
            y: Vector::zeros(0),
        },
    };
    (p, cert)
}

/// A single affine inequality `a'x <= 0.5` with `a = (1, -2, 2)` over the
/// unit ball of R^3, so the non-singularity constant is `|a| = 3`.
pub fn affine_fixture() -> ConstrainedProblem {
    let a = Vector::from_vec(vec![1.0, -2.0, 2.0]);
    let f0: SharedOracle = Arc::new(Quadratic::new(DMatrix::identity(3, 3), Vector::zeros(3), 0.0).with_bound_on_ball(1.0));
    let f1: SharedOracle = Arc::new(Quadratic::linear(a, -0.5).with_bound_on_ball(1.0));
    let reg = Regularizer::indicator(DomainSet::ball(3, 1.0).expect("valid ball"));
    ConstrainedProblem::new(f0, vec![f1], vec![], reg).expect("consistent fixture")
}

/// A problem plus a starting point and whatever is known about it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: ConstrainedProblem,
    pub x0: Vector,
    pub certificate: Option<Certificate>,
}

/// Names accepted by [`builtin_fixture`].
pub const FIXTURE_NAMES: [&str; 6] = ["qp1d", "qp5d", "wc", "affine", "mnpc2", "mnpc3"];

/// Radius and threshold rule of the reference mNPC experiments.
pub const MNPC_LAMBDA: f64 = 0.3;

/// Lifted Gaussian mNPC instance (`d = 5` before lifting, 100 points per class).
pub fn gaussian_mnpc(num_classes: usize, seed: u64) -> Result<ConstrainedProblem> {
    let data = gaussian_dataset(num_classes, 5, 100, seed)?;
    let data = crate::data_io::lift_features(&data, 1.0)?;
    mnpc_build(&data, &default_thresholds(num_classes), MNPC_LAMBDA)
}

pub fn builtin_fixture(name: &str, seed: u64) -> Result<Instance> {
    let (problem, certificate) = match name {
        "qp1d" => {
            let (p, c) = qp1d();
            (p, Some(c))
        }
        "qp5d" => {
            let (p, c) = synthetic_build(SyntheticKind::ConvexQpWithEquality, seed, 5)?;
            (p, Some(c))
        }
        "wc" => {
            let (p, c) = synthetic_build(SyntheticKind::WeaklyConvex, seed, 3)?;
            (p, Some(c))
        }
        "affine" => (affine_fixture(), None),
        "mnpc2" => (gaussian_mnpc(2, seed)?, None),
        "mnpc3" => (gaussian_mnpc(3, seed)?, None),
        other => {
            return Err(Error::config(format!(
                "unknown fixture '{other}' (expected one of {})",
                FIXTURE_NAMES.join(", ")
            )))
        }
    };
    let x0 = Vector::zeros(problem.dim());
    Ok(Instance {
        problem,
        x0,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gradient_check;
    use crate::stationarity::{eps_stationary_check, Verdict};
    use nalgebra::dvector;
    use rand::Rng;

    fn toy2() -> Dataset {
        Dataset::new(vec![vec![dvector![1.0, 0.0]], vec![dvector![-1.0, 0.0]]]).unwrap()
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid_loss(0.0), (0.5, -0.25));
        let (v, d) = sigmoid_loss(50.0);
        assert!((v - 1.928749847963918e-22).abs() < 1e-34);
        assert!((d + 1.928749847963918e-22).abs() < 1e-34);
        let (v, d) = sigmoid_loss(-700.0);
        assert_eq!(v, 1.0);
        assert!(d.is_finite() && d <= 0.0);
        let (v, _) = sigmoid_loss(700.0);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn sigmoid_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z: f64 = rng.random_range(-10.0..10.0);
            let h = 1e-5;
            let fd = (sigmoid_loss(z + h).0 - sigmoid_loss(z - h).0) / (2.0 * h);
            let d = sigmoid_loss(z).1;
            assert!((fd - d).abs() <= 1e-7 * d.abs(), "z={z}");
        }
    }

    #[test]
    fn sigmoid_curvature_constant() {
        assert!((SIGMOID_CURVATURE - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-17);
        // |phi''| peaks at z = ln(2 -+ sqrt 3)
        let z = (2.0 + 3f64.sqrt()).ln();
        let h = 1e-4;
        let d2 = (sigmoid_loss(z + h).1 - sigmoid_loss(z - h).1) / (2.0 * h);
        assert!((d2.abs() - SIGMOID_CURVATURE).abs() < 1e-8);
    }

    #[test]
    fn mnpc_examples() {
        let p = mnpc_build(&toy2(), &[0.5], 0.3).unwrap();
        let x0 = Vector::zeros(4);
        assert_eq!(p.ineq[0].value(&x0), 0.0);
        assert_eq!(p.f0.value(&x0), 0.5);
        let x = dvector![0.3, 0.0, -0.3, 0.0];
        let expect = 1.0 / (1.0 + 0.6f64.exp());
        assert!((p.f0.value(&x) - expect).abs() < 1e-15);
        assert!((expect - 0.3543).abs() < 1e-4);

        let d3 = Dataset::new(vec![
            vec![dvector![1.0, 2.0]],
            vec![dvector![0.5, 0.0]],
            vec![dvector![0.0, 1.0], dvector![1.0, 1.0]],
        ])
        .unwrap();
        let p = mnpc_build(&d3, &default_thresholds(3), 0.3).unwrap();
        assert_eq!(p.f0.value(&Vector::zeros(6)), 1.0);
        assert!(verify_initial_feasibility(&p, &Vector::zeros(6), 1e-12));
    }

    #[test]
    fn mnpc_errors() {
        assert!(mnpc_build(&toy2(), &[0.5, 0.5], 0.3).is_err());
        assert!(mnpc_build(&toy2(), &[0.0], 0.3).is_err());
        assert!(mnpc_build(&toy2(), &[0.5], -1.0).is_err());
        assert!(Dataset::new(vec![vec![dvector![1.0]], vec![]]).is_err());
        let one = Dataset::new(vec![vec![dvector![1.0]]]).unwrap();
        assert!(mnpc_build(&one, &[], 0.3).is_err());
    }

    #[test]
    fn mnpc_gradients_match_finite_differences() {
        let p = gaussian_mnpc(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dom = p.reg.domain().clone();
        for o in std::iter::once(&p.f0).chain(&p.ineq) {
            for _ in 0..100 {
                let x = dom.sample_uniform(&mut rng);
                assert!(gradient_check(o.as_ref(), &x) <= 1e-5);
            }
        }
    }

    #[test]
    fn mnpc_metadata_dominates_sampled_quantities() {
        let p = gaussian_mnpc(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dom = p.reg.domain().clone();
        for o in std::iter::once(&p.f0).chain(&p.ineq) {
            let m = o.meta();
            let (l, b) = (m.smoothness.unwrap(), m.bound.unwrap());
            for _ in 0..50 {
                let x = dom.sample_uniform(&mut rng);
                let y = dom.sample_uniform(&mut rng);
                let (v, g) = o.value_and_gradient(&x);
                assert!(g.norm() <= b && v.abs() <= b);
                let gy = o.gradient(&y);
                assert!((gy - &g).norm() <= l * (y - &x).norm() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn mnpc_constraints_ignore_point_order() {
        let data = gaussian_dataset(3, 4, 20, 3).unwrap();
        let mut shuffled = data.classes().to_vec();
        for c in &mut shuffled {
            c.reverse();
            c.swap(0, 7);
        }
        let data2 = Dataset::new(shuffled).unwrap();
        let r = default_thresholds(3);
        let p1 = mnpc_build(&data, &r, 0.3).unwrap();
        let p2 = mnpc_build(&data2, &r, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = p1.reg.domain().sample_uniform(&mut rng);
            for (a, b) in p1.ineq.iter().zip(&p2.ineq) {
                assert!((a.value(&x) - b.value(&x)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn rho_override_replaces_weak_convexity() {
        let p = mnpc_build_with(&toy2(), &[0.5], 0.3, Some(0.01)).unwrap();
        assert_eq!(p.ineq[0].meta().weak_convexity, Some(0.01));
        assert!(p.f0.meta().weak_convexity.unwrap() > 0.01);
    }

    #[test]
    fn objective_class_can_be_chosen() {
        let d = Dataset::with_labels(vec![vec![dvector![1.0]], vec![dvector![2.0]]], vec![3, 7], 1).unwrap();
        let d = d.with_objective_class(7).unwrap();
        assert_eq!(d.labels(), &[7, 3]);
        assert_eq!(d.classes()[0][0], dvector![2.0]);
        assert!(d.with_objective_class(5).is_err());
    }

    #[test]
    fn qp1d_certificate() {
        let (p, cert) = qp1d();
        let Certificate::Kkt { x, multipliers } = cert else { panic!() };
        let r = eps_stationary_check(&p, &x, &multipliers, 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::EpsStationary);
    }

    #[test]
    fn convex_qp_certificates_pass_the_kkt_check() {
        for seed in 0..20 {
            for kind in [SyntheticKind::ConvexQp, SyntheticKind::ConvexQpWithEquality] {
                let (p, cert) = synthetic_build(kind, seed, 5).unwrap();
                let Certificate::Kkt { x, multipliers } = cert else { panic!() };
                let r = eps_stationary_check(&p, &x, &multipliers, 1e-8).unwrap();
                assert_eq!(r.verdict, Verdict::EpsStationary, "seed {seed} {kind:?}: {r:?}");
                let fv = p.ineq_values(&x);
                for (l, f) in multipliers.lambda.iter().zip(fv.iter()) {
                    assert!((l * f).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn convex_qp_certificate_beats_sampled_feasible_points() {
        let (p, cert) = synthetic_build(SyntheticKind::ConvexQp, 11, 3).unwrap();
        let Certificate::Kkt { x, .. } = cert else { panic!() };
        let best = p.objective(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let z = p.reg.domain().sample_uniform(&mut rng);
            if p.max_violation(&z) <= 0.0 {
                assert!(p.objective(&z) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn weakly_convex_starts_strictly_feasible() {
        for seed in 0..10 {
            let (p, cert) = synthetic_build(SyntheticKind::WeaklyConvex, seed, 3).unwrap();
            let x0 = Vector::zeros(3);
            assert!(p.ineq[0].value(&x0) < 0.0);
            assert_eq!(p.n(), 0);
            assert!(verify_initial_feasibility(&p, &x0, 0.0));
            let Certificate::FeasibleStart { rho0, rho_c, .. } = cert else { panic!() };
            assert_eq!(rho0, WEAKLY_CONVEX_SINE);
            assert!(rho_c > 0.0);
        }
    }

    #[test]
    fn weakly_convex_objective_is_rho0_weakly_convex() {
        let (p, _) = synthetic_build(SyntheticKind::WeaklyConvex, 5, 3).unwrap();
        let rho0 = p.f0.meta().weak_convexity.unwrap();
        let h = |x: &Vector| p.f0.value(x) + 0.5 * rho0 * x.norm_squared();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let x = p.reg.domain().sample_uniform(&mut rng);
            let y = p.reg.domain().sample_uniform(&mut rng);
            let mid = (&x + &y) * 0.5;
            assert!(h(&mid) <= 0.5 * (h(&x) + h(&y)) + 1e-12);
        }
        for _ in 0..100 {
            let x = p.reg.domain().sample_uniform(&mut rng);
            assert!(gradient_check(p.f0.as_ref(), &x) <= 1e-5);
        }
    }

    #[test]
    fn feasibility_examples() {
        let (p, _) = qp1d();
        assert!(!verify_initial_feasibility(&p, &dvector![1e-3], 1e-6));
        assert!(verify_initial_feasibility(&p, &dvector![-1e-3], 1e-6));
        let f0: SharedOracle = Arc::new(Quadratic::linear(dvector![1.0], 0.0));
        let reg = Regularizer::indicator(DomainSet::ball(1, 1.0).unwrap());
        let free = ConstrainedProblem::new(f0, vec![], vec![], reg).unwrap();
        assert!(verify_initial_feasibility(&free, &dvector![0.9], 0.0));
    }

    #[test]
    fn builtin_fixtures_resolve() {
        for name in FIXTURE_NAMES {
            let inst = builtin_fixture(name, 0).unwrap();
            assert_eq!(inst.x0.len(), inst.problem.dim());
        }
        assert!(builtin_fixture("nope", 0).is_err());
    }
}
