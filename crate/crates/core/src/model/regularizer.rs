use super::domain::{BoxActivity, DomainKind, DomainSet};
use super::Vector;
use crate::error::{Error, Result};

/// Coordinates with `|x_i|` at or below this are treated as zeros of the
/// l1 term when building its subdifferential.
const L1_ZERO_TOL: f64 = 1e-12;

/// The simple convex part `g = 1_X + w |x|_1` of the objective.
///
/// Only the indicator of a structured set, optionally plus a weighted l1
/// norm, is supported: both have closed-form proximal maps and an exactly
/// computable subdifferential.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    domain: DomainSet,
    l1_weight: f64,
}

impl Regularizer {
    pub fn indicator(domain: DomainSet) -> Self {
        Self {
            domain,
            l1_weight: 0.0,
        }
    }

    pub fn with_l1(domain: DomainSet, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::config("l1 weight must be finite and nonnegative"));
        }
        Ok(Self {
            domain,
            l1_weight: weight,
        })
    }

    pub fn domain(&self) -> &DomainSet {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn l1_weight(&self) -> f64 {
        self.l1_weight
    }

    pub fn is_pure_indicator(&self) -> bool {
        self.l1_weight == 0.0
    }

    /// `g(x)`, with `+inf` outside the domain.
    pub fn value(&self, x: &Vector) -> f64 {
        if !self.domain.contains(x) {
            return f64::INFINITY;
        }
        self.l1_weight * x.lp_norm(1)
    }

    /// Bound `M` on the norm of subgradients of the real-valued part.
    pub fn subgradient_bound(&self) -> f64 {
        self.l1_weight * (self.dim() as f64).sqrt()
    }

    /// Bound `G` on `|g|` over the domain.
    pub fn value_bound(&self) -> f64 {
        if self.l1_weight == 0.0 {
            return 0.0;
        }
        let max_l1 = match self.domain.kind() {
            DomainKind::BallProduct { .. } => self
                .domain
                .blocks()
                .iter()
                .map(|&(_, len, r)| r * (len as f64).sqrt())
                .sum::<f64>(),
            DomainKind::Box { lower, upper } => lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| l.abs().max(u.abs()))
                .sum::<f64>(),
        };
        self.l1_weight * max_l1
    }

    /// `argmin_z step g(z) + |z - x|^2 / 2`.
    pub fn prox(&self, x: &Vector, step: f64) -> Result<Vector> {
        if !(step > 0.0) {
            return Err(Error::NonPositiveStep(step));
        }
        self.domain.check_dim(x)?;
        Ok(self.prox_unchecked(x, step))
    }

    pub(crate) fn prox_unchecked(&self, x: &Vector, step: f64) -> Vector {
        if self.l1_weight == 0.0 {
            return self.domain.project_unchecked(x);
        }
        // Soft-thresholding followed by projection is exact for both kinds:
        // coordinatewise for a box, blockwise radial for centered balls.
        let t = step * self.l1_weight;
        let shrunk = x.map(|v| v.signum() * (v.abs() - t).max(0.0));
        self.domain.project_unchecked(&shrunk)
    }

    /// `min { |v + xi| : xi in dg(x) }`, the distance from `v` to `-dg(x)`.
    pub fn dist_neg_subdiff(&self, x: &Vector, v: &Vector) -> Result<f64> {
        self.domain.ensure_contains(x)?;
        self.domain.check_dim(v)?;
        Ok(dist_neg_subdiff_parts(&self.domain, self.l1_weight, x, v))
    }
}

/// Interval `[lo, hi]` of the l1 subdifferential `w d|t|` at `t`.
fn l1_interval(w: f64, t: f64) -> (f64, f64) {
    if w == 0.0 {
        (0.0, 0.0)
    } else if t > L1_ZERO_TOL {
        (w, w)
    } else if t < -L1_ZERO_TOL {
        (-w, -w)
    } else {
        (-w, w)
    }
}

/// `u - clamp(u, lo, hi)`: signed excess of `u` outside `[lo, hi]`.
fn excess(u: f64, lo: f64, hi: f64) -> f64 {
    if u < lo {
        u - lo
    } else if u > hi {
        u - hi
    } else {
        0.0
    }
}

pub(crate) fn dist_neg_subdiff_parts(dom: &DomainSet, w: f64, x: &Vector, v: &Vector) -> f64 {
    let mut sq = 0.0;
    match dom.kind() {
        DomainKind::Box { lower, upper } => {
            for i in 0..x.len() {
                let (mut lo, mut hi) = l1_interval(w, x[i]);
                match DomainSet::box_activity(lower[i], upper[i], x[i]) {
                    BoxActivity::Free => {}
                    BoxActivity::Lower => lo = f64::NEG_INFINITY,
                    BoxActivity::Upper => hi = f64::INFINITY,
                    BoxActivity::Both => {
                        lo = f64::NEG_INFINITY;
                        hi = f64::INFINITY;
                    }
                }
                // xi_i in [lo, hi]; distance of -v_i to that interval
                let e = excess(-v[i], lo, hi);
                sq += e * e;
            }
        }
        DomainKind::BallProduct { .. } => {
            for (start, len, r) in dom.blocks() {
                let xb = x.rows(start, len);
                let vb = v.rows(start, len);
                let active = DomainSet::block_active(x, start, len, r);
                if w == 0.0 {
                    if active {
                        let radial = vb.dot(&xb);
                        if radial < 0.0 {
                            // residual of v after removing its inward radial part
                            let a = radial / xb.norm_squared();
                            sq += (vb - xb * a).norm_squared();
                        } else {
                            sq += vb.norm_squared();
                        }
                    } else {
                        sq += vb.norm_squared();
                    }
                    continue;
                }
                let intervals: Vec<(f64, f64)> = xb.iter().map(|&t| l1_interval(w, t)).collect();
                // h(a) = sum_i dist(v_i + a x_i, -I_i)^2, convex in a >= 0
                let eval = |a: f64| -> (f64, f64) {
                    let mut h = 0.0;
                    let mut dh = 0.0;
                    for i in 0..len {
                        let u = vb[i] + a * xb[i];
                        let (lo, hi) = intervals[i];
                        let e = excess(u, -hi, -lo);
                        h += e * e;
                        dh += e * xb[i];
                    }
                    (h, dh)
                };
                if !active {
                    sq += eval(0.0).0;
                    continue;
                }
                let (h0, d0) = eval(0.0);
                if d0 >= 0.0 {
                    sq += h0;
                    continue;
                }
                let mut hi_a = 1.0;
                while eval(hi_a).1 < 0.0 && hi_a < 1e300 {
                    hi_a *= 2.0;
                }
                let mut lo_a = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo_a + hi_a);
                    if mid <= lo_a || mid >= hi_a {
                        break;
                    }
                    if eval(mid).1 < 0.0 {
                        lo_a = mid;
                    } else {
                        hi_a = mid;
                    }
                }
                sq += eval(lo_a).0.min(eval(hi_a).0);
            }
        }
    }
    sq.sqrt()
}
