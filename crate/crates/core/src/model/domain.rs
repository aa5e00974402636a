use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Vector;
use crate::error::{Error, Result};

/// A point is in the set when its projection moves it by at most
/// `MEMBERSHIP_TOL * (1 + |x|)`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Relative tolerance for declaring a ball block or a box bound active.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// Product of centered Euclidean balls, one per contiguous block.
    BallProduct {
        block_sizes: Vec<usize>,
        radii: Vec<f64>,
    },
    Box {
        lower: Vector,
        upper: Vector,
    },
}

/// Compact convex set with a closed-form projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSet {
    kind: DomainKind,
    diameter: f64,
}

/// Which part of the set boundary a coordinate or block touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoxActivity {
    Free,
    Lower,
    Upper,
    Both,
}

impl DomainSet {
    /// Single centered ball of radius `radius` in `R^dim`.
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball_product(vec![dim], vec![radius])
    }

    /// `count` centered balls of the same radius, each of dimension `block_dim`.
    pub fn uniform_ball_product(block_dim: usize, count: usize, radius: f64) -> Result<Self> {
        Self::ball_product(vec![block_dim; count], vec![radius; count])
    }

    pub fn ball_product(block_sizes: Vec<usize>, radii: Vec<f64>) -> Result<Self> {
        if block_sizes.len() != radii.len() || block_sizes.is_empty() {
            return Err(Error::config("ball product needs one radius per block"));
        }
        if block_sizes.contains(&0) {
            return Err(Error::config("ball blocks must be non-empty"));
        }
        if radii.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::config("ball radii must be positive and finite"));
        }
        let diameter = radii.iter().map(|r| 4.0 * r * r).sum::<f64>().sqrt();
        Ok(Self {
            kind: DomainKind::BallProduct { block_sizes, radii },
            diameter,
        })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config("box bounds must be non-empty and of equal length"));
        }
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
        {
            return Err(Error::config("box bounds must be finite with lower <= upper"));
        }
        let diameter = (&upper - &lower).norm();
        Ok(Self {
            kind: DomainKind::Box { lower, upper },
            diameter,
        })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::BallProduct { block_sizes, .. } => block_sizes.iter().sum(),
            DomainKind::Box { lower, .. } => lower.len(),
        }
    }

    /// Exact Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `(offset, len, radius)` for every ball block; empty for a box.
    pub fn blocks(&self) -> Vec<(usize, usize, f64)> {
        match &self.kind {
            DomainKind::BallProduct { block_sizes, radii } => {
                let mut start = 0;
                block_sizes
                    .iter()
                    .zip(radii)
                    .map(|(&len, &r)| {
                        let b = (start, len, r);
                        start += len;
                        b
                    })
                    .collect()
            }
            DomainKind::Box { .. } => Vec::new(),
        }
    }

    pub(crate) fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        let mut z = x.clone();
        match &self.kind {
            DomainKind::BallProduct { .. } => {
                for (start, len, r) in self.blocks() {
                    let mut block = z.rows_mut(start, len);
                    let n = block.norm();
                    if n > r {
                        block *= r / n;
                    }
                }
            }
            DomainKind::Box { lower, upper } => {
                for i in 0..z.len() {
                    z[i] = z[i].clamp(lower[i], upper[i]);
                }
            }
        }
        z
    }

    /// Distance moved by the projection.
    pub fn displacement(&self, x: &Vector) -> Result<f64> {
        Ok((self.project(x)? - x).norm())
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && (self.project_unchecked(x) - x).norm() <= MEMBERSHIP_TOL * (1.0 + x.norm())
    }

    pub(crate) fn ensure_contains(&self, x: &Vector) -> Result<()> {
        self.check_dim(x)?;
        let displacement = (self.project_unchecked(x) - x).norm();
        if displacement > MEMBERSHIP_TOL * (1.0 + x.norm()) {
            return Err(Error::OutsideDomain { displacement });
        }
        Ok(())
    }

    /// Whether the ball block `(start, len, r)` is on its sphere at `x`.
    pub(crate) fn block_active(x: &Vector, start: usize, len: usize, r: f64) -> bool {
        x.rows(start, len).norm() >= r * (1.0 - ACTIVE_TOL)
    }

    pub(crate) fn box_activity(lower: f64, upper: f64, xi: f64) -> BoxActivity {
        let lo = xi <= lower + ACTIVE_TOL * (1.0 + lower.abs());
        let hi = xi >= upper - ACTIVE_TOL * (1.0 + upper.abs());
        match (lo, hi) {
            (false, false) => BoxActivity::Free,
            (true, false) => BoxActivity::Lower,
            (false, true) => BoxActivity::Upper,
            (true, true) => BoxActivity::Both,
        }
    }

    /// `min { |v - w| : w in -N_X(x) }`.
    pub fn dist_to_neg_normal_cone(&self, x: &Vector, v: &Vector) -> Result<f64> {
        self.ensure_contains(x)?;
        self.check_dim(v)?;
        Ok(super::regularizer::dist_neg_subdiff_parts(self, 0.0, x, v))
    }

    /// Generators of the normal cone at `x`: the cone is the set of
    /// nonnegative combinations of the returned vectors.
    pub fn normal_cone_generators(&self, x: &Vector) -> Result<Vec<Vector>> {
        self.ensure_contains(x)?;
        let d = self.dim();
        let mut gens = Vec::new();
        match &self.kind {
            DomainKind::BallProduct { .. } => {
                for (start, len, r) in self.blocks() {
                    if Self::block_active(x, start, len, r) {
                        let mut g = Vector::zeros(d);
                        g.rows_mut(start, len).copy_from(&x.rows(start, len));
                        gens.push(g);
                    }
                }
            }
            DomainKind::Box { lower, upper } => {
                for i in 0..d {
                    let act = Self::box_activity(lower[i], upper[i], x[i]);
                    if matches!(act, BoxActivity::Lower | BoxActivity::Both) {
                        let mut g = Vector::zeros(d);
                        g[i] = -1.0;
                        gens.push(g);
                    }
                    if matches!(act, BoxActivity::Upper | BoxActivity::Both) {
                        let mut g = Vector::zeros(d);
                        g[i] = 1.0;
                        gens.push(g);
                    }
                }
            }
        }
        Ok(gens)
    }

    /// Uniform sample from the set. Ball blocks use a normalized Gaussian
    /// direction scaled by `r U^(1/len)`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let d = self.dim();
        let mut x = Vector::zeros(d);
        match &self.kind {
            DomainKind::BallProduct { .. } => {
                for (start, len, r) in self.blocks() {
                    let mut dir = Vector::from_fn(len, |_, _| StandardNormal.sample(rng));
                    let mut n = dir.norm();
                    while n == 0.0 {
                        dir = Vector::from_fn(len, |_, _| StandardNormal.sample(rng));
                        n = dir.norm();
                    }
                    let u: f64 = rng.random();
                    let radius = r * u.powf(1.0 / len as f64);
                    x.rows_mut(start, len).copy_from(&(dir * (radius / n)));
                }
            }
            DomainKind::Box { lower, upper } => {
                for i in 0..d {
                    let u: f64 = rng.random();
                    x[i] = lower[i] + u * (upper[i] - lower[i]);
                }
            }
        }
        x
    }
}
