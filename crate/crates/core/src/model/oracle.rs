use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// Dense real vector used for iterates, gradients and data points.
pub type Vector = DVector<f64>;

/// Optional regularity constants of a smooth function over the domain.
///
/// `smoothness` is the Lipschitz constant of the gradient, `weak_convexity`
/// is the smallest `rho` such that `h + rho/2 |x|^2` is convex, and `bound`
/// caps both `|h(x)|` and `|grad h(x)|` on the domain.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleMeta {
    pub smoothness: Option<f64>,
    pub weak_convexity: Option<f64>,
    pub bound: Option<f64>,
}

impl OracleMeta {
    pub fn new(smoothness: f64, weak_convexity: f64, bound: f64) -> Self {
        Self {
            smoothness: Some(smoothness),
            weak_convexity: Some(weak_convexity),
            bound: Some(bound),
        }
    }
}

/// A continuously differentiable scalar function.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        (self.value(x), self.gradient(x))
    }

    fn meta(&self) -> OracleMeta {
        OracleMeta::default()
    }
}

pub type SharedOracle = Arc<dyn SmoothOracle>;

/// `1/2 x'Hx + q'x + c` with a symmetric `H`.
#[derive(Clone)]
pub struct Quadratic {
    h: DMatrix<f64>,
    q: Vector,
    c: f64,
    meta: OracleMeta,
}

impl Quadratic {
    /// Builds the quadratic; `h` is symmetrized. Smoothness and weak
    /// convexity are read off the spectrum, the bound is left unset.
    pub fn new(h: DMatrix<f64>, q: Vector, c: f64) -> Self {
        assert_eq!(h.nrows(), h.ncols(), "H must be square");
        assert_eq!(h.nrows(), q.len(), "H and q disagree in dimension");
        let h = (&h + h.transpose()) * 0.5;
        let eig = h.clone().symmetric_eigen();
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        let meta = OracleMeta {
            smoothness: Some(lo.abs().max(hi.abs())),
            weak_convexity: Some((-lo).max(0.0)),
            bound: None,
        };
        Self { h, q, c, meta }
    }

    /// The affine function `a'x + offset`.
    pub fn linear(a: Vector, offset: f64) -> Self {
        let d = a.len();
        let mut meta = OracleMeta {
            smoothness: Some(0.0),
            weak_convexity: Some(0.0),
            bound: None,
        };
        if d == 0 {
            meta.bound = Some(offset.abs());
        }
        Self {
            h: DMatrix::zeros(d, d),
            q: a,
            c: offset,
            meta,
        }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.meta.bound = Some(bound);
        self
    }

    /// Sets the bound from the radius `r` of a centered ball containing the
    /// domain: `|h| <= |H| r^2/2 + |q| r + |c|`, `|grad h| <= |H| r + |q|`.
    pub fn with_bound_on_ball(self, r: f64) -> Self {
        let l = self.meta.smoothness.unwrap_or(0.0);
        let qn = self.q.norm();
        let b = (0.5 * l * r * r + qn * r + self.c.abs()).max(l * r + qn);
        self.with_bound(b)
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn linear_term(&self) -> &Vector {
        &self.q
    }

    pub fn offset(&self) -> f64 {
        self.c
    }
}

impl SmoothOracle for Quadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.q.dot(x) + self.c
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.h * x + &self.q
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let hx = &self.h * x;
        (0.5 * x.dot(&hx) + self.q.dot(x) + self.c, hx + &self.q)
    }

    fn meta(&self) -> OracleMeta {
        self.meta
    }
}

impl fmt::Debug for Quadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Quadratic")
            .field("dim", &self.q.len())
            .field("c", &self.c)
            .field("meta", &self.meta)
            .finish()
    }
}

type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// Oracle assembled from a pair of closures.
pub struct FnOracle {
    dim: usize,
    value: Box<ValueFn>,
    grad: Box<GradFn>,
    meta: OracleMeta,
}

impl FnOracle {
    pub fn new(
        dim: usize,
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            grad: Box::new(grad),
            meta: OracleMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: OracleMeta) -> Self {
        self.meta = meta;
        self
    }
}

impl SmoothOracle for FnOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (self.grad)(x)
    }

    fn meta(&self) -> OracleMeta {
        self.meta
    }
}

/// Relative discrepancy between the analytic gradient and a central finite
/// difference with step `1e-6 (1 + |x|)`, measured as
/// `|g_fd - g| / max(1, |g|)`.
pub fn gradient_check(oracle: &dyn SmoothOracle, x: &Vector) -> f64 {
    let h = 1e-6 * (1.0 + x.norm());
    let g = oracle.gradient(x);
    let mut fd = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let up = oracle.value(&xp);
        xp[i] = xi - h;
        let down = oracle.value(&xp);
        xp[i] = xi;
        fd[i] = (up - down) / (2.0 * h);
    }
    (fd - &g).norm() / g.norm().max(1.0)
}
