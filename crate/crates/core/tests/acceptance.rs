//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! criterion that is expected to pass fails.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ippp::adapapg::{adapapg_solve_observed, AdapConfig, CompositeSubproblem};
use ippp::data_io::{parse_libsvm, trace_to_string, TRACE_HEADER};
use ippp::ippp::{
    ippp_solve, ippp_solve_observed, make_subproblem, theory_budget, BudgetInputs, BudgetVariant, EpsRule,
    IpppSettings, Schedule, SelectOption, SolveTrace,
};
use ippp::model::{ConstrainedProblem, DomainSet, OracleMeta, Quadratic, Regularizer, SharedOracle, SmoothOracle, Vector};
use ippp::problems::{
    affine_fixture, default_thresholds, gaussian_dataset, gaussian_mnpc, mnpc_build, qp1d, synthetic_build,
    verify_initial_feasibility, Certificate, SyntheticKind, MNPC_LAMBDA,
};
use ippp::stationarity::{eps_stationary_check, estimate_nonsingularity, nnls, stationarity_measure, Verdict};
use ippp::Error;

#[derive(Clone)]
struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------- test-side oracles ----------

enum Geometry {
    Ball(f64),
    Box(f64),
}

impl Geometry {
    fn project(&self, x: &Vector) -> Vector {
        match *self {
            Geometry::Ball(r) => {
                let n = x.norm();
                if n <= r {
                    x.clone()
                } else {
                    x * (r / n)
                }
            }
            Geometry::Box(u) => x.map(|v| v.clamp(-u, u)),
        }
    }

    /// `dist(v, -N(x))` in closed form.
    fn dist_neg_normal(&self, x: &Vector, v: &Vector) -> f64 {
        const TOL: f64 = 1e-10;
        match *self {
            Geometry::Ball(r) => {
                if x.norm() < r - TOL {
                    return v.norm();
                }
                let t = (-v.dot(x) / x.norm_squared()).max(0.0);
                (v + x * t).norm()
            }
            Geometry::Box(u) => x
                .iter()
                .zip(v.iter())
                .map(|(&xi, &vi)| {
                    let r = if xi >= u - TOL {
                        vi.max(0.0)
                    } else if xi <= -u + TOL {
                        (-vi).max(0.0)
                    } else {
                        vi.abs()
                    };
                    r * r
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    fn domain(&self, d: usize) -> DomainSet {
        match *self {
            Geometry::Ball(r) => DomainSet::ball(d, r).unwrap(),
            Geometry::Box(u) => DomainSet::boxed(Vector::from_element(d, -u), Vector::from_element(d, u)).unwrap(),
        }
    }
}

fn random_spd(d: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let q = DMatrix::from_fn(d, d, |_, _| normal.sample(rng)).qr().q();
    let eig = Vector::from_fn(d, |_, _| rng.random_range(lo..hi));
    let mut h = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    h = (&h + h.transpose()) * 0.5;
    h
}

/// Central finite-difference gradient error `|g_fd - g| / max(1, |g|)`.
fn fd_error(o: &dyn SmoothOracle, x: &Vector) -> f64 {
    let h = 1e-6 * (1.0 + x.norm());
    let g = o.gradient(x);
    let mut e = x.clone();
    let fd = Vector::from_fn(x.len(), |i, _| {
        let xi = e[i];
        e[i] = xi + h;
        let up = o.value(&e);
        e[i] = xi - h;
        let dn = o.value(&e);
        e[i] = xi;
        (up - dn) / (2.0 * h)
    });
    (fd - &g).norm() / g.norm().max(1.0)
}

// ---------- criteria 1 and 2 ----------

struct InnerRun {
    omega: f64,
    err: f64,
    ineq8_checked: usize,
    ineq8_violations: usize,
    worst_slack: f64,
    solve_time: Duration,
}

fn inner_runs() -> Vec<InnerRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut out = Vec::new();
    for i in 0..50 {
        let d = 2 + (i * 7) % 19;
        let geo = if i % 2 == 0 { Geometry::Ball(1.0) } else { Geometry::Box(1.0) };
        let h = random_spd(d, 0.1, 10.0, &mut rng);
        let q = Vector::from_fn(d, |_, _| 3.0 * normal.sample(&mut rng));
        let quad = Quadratic::new(h.clone(), q.clone(), 0.0);
        let phi: SharedOracle = Arc::new(quad);
        let reg = Regularizer::indicator(geo.domain(d));
        let sub = CompositeSubproblem::new(phi.clone(), reg).unwrap();
        let cfg = AdapConfig {
            eps_hat: 1e-8,
            ..AdapConfig::default()
        };
        let mut probes: Vec<(Vector, f64)> = Vec::new();
        let t0 = Instant::now();
        let res = adapapg_solve_observed(&sub, &Vector::zeros(d), &cfg, &mut |ev| probes.push((ev.w.clone(), ev.l))).unwrap();
        let solve_time = t0.elapsed();

        // projected gradient oracle, 1e6 steps of length 1/L
        let l = h.clone().symmetric_eigen().eigenvalues.max();
        let mut x = Vector::zeros(d);
        for _ in 0..1_000_000 {
            let next = geo.project(&(&x - (&h * &x + &q) / l));
            if next == x {
                break; // fixed point reached: further steps are identical
            }
            x = next;
        }
        let grad = |z: &Vector| &h * z + &q;
        let omega = geo.dist_neg_normal(&res.x_hat, &grad(&res.x_hat));
        let err = (&res.x_hat - &x).norm();

        let mut violations = 0;
        let mut worst = f64::NEG_INFINITY;
        for (w, lw) in &probes {
            let gw = grad(w);
            let t = geo.project(&(w - &gw / *lw));
            let gmap = (w - &t) * *lw;
            let dx = (&t - w).norm();
            let s = if dx == 0.0 { 0.0 } else { (grad(&t) - &gw).norm() / dx };
            let lhs = geo.dist_neg_normal(&t, &grad(&t));
            let rhs = (1.0 + s / lw) * gmap.norm() + 1e-10;
            worst = worst.max(lhs - rhs);
            if lhs > rhs {
                violations += 1;
            }
        }
        out.push(InnerRun {
            omega,
            err,
            ineq8_checked: probes.len(),
            ineq8_violations: violations,
            worst_slack: worst,
            solve_time,
        });
    }
    out
}

fn criterion_1_2() -> (Outcome, Outcome) {
    let runs = inner_runs();
    let max_omega = runs.iter().map(|r| r.omega).fold(0.0, f64::max);
    let max_err = runs.iter().map(|r| r.err).fold(0.0, f64::max);
    let time: Duration = runs.iter().map(|r| r.solve_time).sum();
    let c1 = outcome(
        max_omega <= 1e-8 && max_err <= 1e-5 && time.as_secs_f64() <= 30.0,
        format!(
            "50 problems: max omega {max_omega:.2e} (<= 1e-8), max |x - x*| {max_err:.2e} (<= 1e-5), solver time {:.2}s (<= 30s)",
            time.as_secs_f64()
        ),
    );
    let checked: usize = runs.iter().map(|r| r.ineq8_checked).sum();
    let viol: usize = runs.iter().map(|r| r.ineq8_violations).sum();
    let worst = runs.iter().map(|r| r.worst_slack).fold(f64::NEG_INFINITY, f64::max);
    let c2 = outcome(
        viol == 0,
        format!("{checked} proximal gradient steps, {viol} violations, max lhs - rhs {worst:.2e}"),
    );
    (c1, c2)
}

// ---------- criteria 3 and 5 ----------

fn qp1d_settings() -> IpppSettings {
    IpppSettings::new(
        Schedule::ConvexSqrt {
            gamma: 1.0,
            beta: 1.0,
            rho0: Some(0.0),
        },
        SelectOption::I,
        1e-3,
        5000,
    )
}

fn criterion_3() -> Outcome {
    let (p, _) = qp1d();
    let t0 = Instant::now();
    let out = ippp_solve(&p, &qp1d_settings(), &Vector::zeros(1)).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let metric = out.report.max_sfc();
    let x = out.x_out[0];
    let lam = out.multipliers.lambda[0];
    let pass = metric <= 1e-3 && x.abs() <= 1e-2 && (lam - 2.0).abs() <= 0.1 && secs <= 60.0;
    outcome(
        pass,
        format!(
            "K = {}: max(S,F,C) {metric:.3e} (<= 1e-3), x {x:.3e} (|x| <= 1e-2), lambda {lam:.4} (|lambda - 2| <= 0.1), {secs:.2}s; \
             with lambda = beta_k [x]_+ the fixed point has F ~ 2/beta_k, so F <= 1e-3 needs beta_k >= 2000, i.e. k ~ 4e6",
            out.trace.records.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let (p, _) = qp1d();
    let d = p.reg.domain().diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    ippp_solve_observed(&p, &qp1d_settings(), &Vector::zeros(1), &mut |ev| {
        let phi = &ev.subproblem.phi;
        let at_next = phi.value(ev.x_next);
        for _ in 0..100 {
            let x = Vector::from_element(1, rng.random_range(-2.0..=2.0));
            let gap = at_next - phi.value(&x) - (ev.values.eps_hat * d + 1e-8);
            worst = worst.max(gap);
            if gap > 0.0 {
                violations += 1;
            }
            checked += 1;
        }
    })
    .unwrap();
    outcome(
        violations == 0,
        format!("{checked} sampled comparisons, {violations} violations, max excess {worst:.2e}"),
    )
}

// ---------- criterion 4 ----------

fn criterion_4() -> Outcome {
    let (p, _) = synthetic_build(SyntheticKind::ConvexQpWithEquality, 4, 5).unwrap();
    let st = IpppSettings::new(
        Schedule::ConvexSqrt {
            gamma: 1.0,
            beta: 1.0,
            rho0: Some(0.0),
        },
        SelectOption::I,
        f64::MIN_POSITIVE,
        800,
    );
    let out = ippp_solve(&p, &st, &Vector::zeros(5)).unwrap();
    let best = |k: usize| {
        out.trace.records[..k]
            .iter()
            .map(|r| r.s.max(r.f).max(r.c))
            .fold(f64::INFINITY, f64::min)
    };
    let mut pass = out.trace.records.len() == 800;
    let mut parts = Vec::new();
    for k in [50usize, 200] {
        let ratio = best(4 * k) / best(k);
        pass &= ratio <= 0.7;
        parts.push(format!("K={k}: best {:.3e} -> {:.3e} (ratio {ratio:.3} <= 0.7)", best(k), best(4 * k)));
    }
    outcome(pass, parts.join("; "))
}

// ---------- criterion 6 ----------

fn penalty_midpoint_violations(p: &ConstrainedProblem, beta: f64, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = p.reg.domain().clone();
    let mut bad = 0;
    let mut worst = f64::NEG_INFINITY;
    for f in &p.ineq {
        let m: OracleMeta = f.meta();
        let (rho, b) = (m.weak_convexity.unwrap(), m.bound.unwrap());
        let h = |x: &Vector| {
            let v = f.value(x).max(0.0);
            0.5 * beta * v * v + 0.5 * beta * rho * b * x.norm_squared()
        };
        for s in 0..1000 {
            let x = dom.sample_uniform(&mut rng);
            let y = if s % 2 == 0 {
                dom.sample_uniform(&mut rng)
            } else {
                // short segments probe the local curvature
                let dir = dom.sample_uniform(&mut rng) - &x;
                dom.project(&(&x + dir * 0.01)).unwrap()
            };
            let mid = (&x + &y) * 0.5;
            let excess = h(&mid) - 0.5 * (h(&x) + h(&y)) - 1e-10;
            worst = worst.max(excess);
            if excess > 0.0 {
                bad += 1;
            }
        }
    }
    (bad, worst)
}

fn criterion_6() -> Outcome {
    let mnpc = gaussian_mnpc(3, 8).unwrap();
    let (wc, _) = synthetic_build(SyntheticKind::WeaklyConvex, 0, 3).unwrap();
    let (b1, w1) = penalty_midpoint_violations(&mnpc, 1.0, 61);
    let (b2, w2) = penalty_midpoint_violations(&wc, 1.0, 62);
    outcome(
        b1 + b2 == 0,
        format!("mNPC: {b1} violations (max excess {w1:.2e}); weakly convex: {b2} violations (max excess {w2:.2e})"),
    )
}

// ---------- criterion 7 ----------

fn criterion_7() -> Outcome {
    let (p, cert) = synthetic_build(SyntheticKind::WeaklyConvex, 0, 3).unwrap();
    let Certificate::FeasibleStart { x0, rho0, rho_c, .. } = cert else {
        return outcome(false, "fixture lacks a feasible-start certificate");
    };
    let mut inp = BudgetInputs::new(
        p.f0.meta().bound.unwrap(),
        p.reg.value_bound(),
        p.reg.domain().diameter(),
        p.reg.subgradient_bound(),
    );
    inp.rho0 = rho0;
    inp.rho_c = rho_c;
    let eps = 0.05;
    let budget = theory_budget(&inp, BudgetVariant::ConstantFeasible, eps).unwrap();
    let st = IpppSettings::new(
        Schedule::ConstantFeasible {
            beta: budget.beta,
            rho0,
            rho_c,
        },
        SelectOption::II,
        eps,
        20_000,
    );
    let t0 = Instant::now();
    let feasible = verify_initial_feasibility(&p, &x0, 0.0);
    let out = ippp_solve(&p, &st, &x0).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let rep = eps_stationary_check(&p, &out.x_out, &out.multipliers, eps).unwrap();
    let pass = feasible && rep.verdict != Verdict::Fail && secs <= 300.0;
    outcome(
        pass,
        format!(
            "beta {:.4e}, {} outer iterations, dual {:.3e}, primal {:.3e}, verdict {}, {secs:.2}s",
            budget.beta,
            out.trace.records.len(),
            rep.dual_residual,
            rep.primal_residual,
            rep.verdict.as_str()
        ),
    )
}

// ---------- criterion 8 ----------

fn criterion_8() -> Outcome {
    let data = gaussian_dataset(3, 5, 100, 2024).unwrap();
    let data = ippp::data_io::lift_features(&data, 1.0).unwrap();
    let p = mnpc_build(&data, &default_thresholds(3), MNPC_LAMBDA).unwrap();
    let x0 = Vector::zeros(p.dim());
    let feasible = verify_initial_feasibility(&p, &x0, 1e-12);
    let m0 = stationarity_measure(&p, &x0).unwrap();
    let settings = [
        (
            "constant beta",
            Schedule::Scaled {
                gamma: 0.1,
                beta: 1000.0,
                power: 0.0,
                eps: EpsRule::InverseSquare,
            },
        ),
        (
            "growing beta",
            Schedule::Scaled {
                gamma: 0.1,
                beta: 500.0,
                power: 1.0 / 3.0,
                eps: EpsRule::PenaltyScaled,
            },
        ),
    ];
    let mut pass = feasible;
    let mut parts = vec![format!("x0 feasible: {feasible}, measure(x0) {m0:.3e}")];
    for (name, schedule) in settings {
        let mut st = IpppSettings::new(schedule, SelectOption::I, f64::MIN_POSITIVE, 10_000_000);
        st.prox_budget = Some(100_000);
        let out = ippp_solve(&p, &st, &x0).unwrap();
        let last = out.trace.records.last().unwrap();
        let m = stationarity_measure(&p, &out.x_last).unwrap();
        let ok = last.f <= 1e-3 && m * 10.0 <= m0 && last.cum_steps >= 99_000;
        pass &= ok;
        parts.push(format!(
            "{name}: {} outer / {} steps, final F {:.3e}, measure {m:.3e} (x{:.1} decrease)",
            out.trace.records.len(),
            last.cum_steps,
            last.f,
            m0 / m
        ));
    }
    outcome(pass, parts.join("; "))
}

// ---------- criterion 9 ----------

fn lstsq_cols(a: &DMatrix<f64>, cols: &[usize], b: &Vector) -> Option<Vector> {
    let sub = a.select_columns(cols);
    let svd = sub.clone().svd(true, true);
    svd.solve(b, 1e-13).ok()
}

fn brute_nnls(a: &DMatrix<f64>, b: &Vector) -> f64 {
    let n = a.ncols();
    let mut best = b.norm();
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if let Some(z) = lstsq_cols(a, &cols, b) {
            if z.iter().all(|&v| v >= 0.0) {
                best = best.min((a.select_columns(&cols) * z - b).norm());
            }
        }
    }
    best
}

/// Grid search over `(lambda, y)` in `[0,10] x [-10,10]` at step 1e-3. For
/// each lambda the best y on the grid is one of the two grid points around
/// the continuous minimizer of the convex 1-d residual.
fn grid_measure(g0: &Vector, g1: &Vector, g2: &Vector) -> f64 {
    let h = 1e-3;
    let mut best = f64::INFINITY;
    let g2sq = g2.norm_squared();
    for i in 0..=10_000 {
        let lam = i as f64 * h;
        let a = g0 + g1 * lam;
        let ystar = -a.dot(g2) / g2sq;
        let j0 = ((ystar / h).floor() as i64).clamp(-10_000, 10_000);
        for j in [j0, (j0 + 1).min(10_000)] {
            let y = j as f64 * h;
            best = best.min((&a + g2 * y).norm());
        }
    }
    best
}

fn brute_cone_distance(gens: &[Vector], v: &Vector) -> f64 {
    // min_{z >= 0} |v + sum z_j r_j| by projected gradient
    if gens.is_empty() {
        return v.norm();
    }
    let a = DMatrix::from_columns(gens);
    let l = (a.transpose() * &a).symmetric_eigen().eigenvalues.max().max(1e-12);
    let mut z = Vector::zeros(gens.len());
    for _ in 0..100_000 {
        let r = v + &a * &z;
        let g = a.transpose() * r;
        z = (&z - g / l).map(|t| t.max(0.0));
    }
    (v + &a * &z).norm()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst_nnls: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(n..=n + 4);
        let a = DMatrix::from_fn(m, n, |_, _| normal.sample(&mut rng));
        let b = Vector::from_fn(m, |_, _| normal.sample(&mut rng));
        let got = nnls(&a, &b).unwrap().residual;
        worst_nnls = worst_nnls.max((got - brute_nnls(&a, &b)).abs());
    }

    let mut worst_grid: f64 = 0.0;
    let mut made = 0;
    while made < 20 {
        let g1 = Vector::from_fn(3, |_, _| normal.sample(&mut rng));
        let g2 = Vector::from_fn(3, |_, _| normal.sample(&mut rng));
        let lam: f64 = rng.random_range(-3.0..8.0);
        let y: f64 = rng.random_range(-8.0..8.0);
        let mut nrm = g1.cross(&g2);
        nrm /= nrm.norm();
        let g0 = -(&g1 * lam + &g2 * y) + nrm * rng.random_range(0.0..1.0);
        // keep instances whose optimum lies inside the grid
        if lam < 0.0 {
            let yb = -g0.dot(&g2) / g2.norm_squared();
            if yb.abs() > 9.5 {
                continue;
            }
        }
        made += 1;
        let xc = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let f0: SharedOracle = Arc::new(Quadratic::linear(g0.clone(), 0.0));
        let f1: SharedOracle = Arc::new(Quadratic::linear(g1.clone(), -g1.dot(&xc)));
        let c1: SharedOracle = Arc::new(Quadratic::linear(g2.clone(), -g2.dot(&xc)));
        let reg = Regularizer::indicator(DomainSet::ball(3, 10.0).unwrap());
        let p = ConstrainedProblem::new(f0, vec![f1], vec![c1], reg).unwrap();
        // make sure f1 is numerically active at the test point
        let xt = if p.ineq[0].value(&xc) >= -1e-12 { xc.clone() } else { &xc + &g1 * 1e-14 };
        let got = stationarity_measure(&p, &xt).unwrap();
        worst_grid = worst_grid.max((got - grid_measure(&g0, &g1, &g2)).abs());
    }

    let mut worst_cone: f64 = 0.0;
    for case in 0..100 {
        let d = rng.random_range(2..=4);
        let (dom, x, gens): (DomainSet, Vector, Vec<Vector>) = match case % 3 {
            0 => {
                let dom = DomainSet::ball(d, 1.0).unwrap();
                let far = Vector::from_fn(d, |_, _| normal.sample(&mut rng)) * 3.0;
                let x = if case % 2 == 0 { dom.project(&far).unwrap() } else { far * 0.05 };
                let gens = if x.norm() >= 1.0 - 1e-12 { vec![x.clone() / x.norm()] } else { vec![] };
                (dom, x, gens)
            }
            1 => {
                let dom = DomainSet::boxed(Vector::from_element(d, -1.0), Vector::from_element(d, 1.0)).unwrap();
                let far = Vector::from_fn(d, |_, _| normal.sample(&mut rng) * 1.5);
                let x = dom.project(&far).unwrap();
                let mut gens = Vec::new();
                for i in 0..d {
                    let mut e = Vector::zeros(d);
                    if x[i] >= 1.0 {
                        e[i] = 1.0;
                        gens.push(e);
                    } else if x[i] <= -1.0 {
                        e[i] = -1.0;
                        gens.push(e);
                    }
                }
                (dom, x, gens)
            }
            _ => {
                let dom = DomainSet::uniform_ball_product(2, 2, 0.5).unwrap();
                let far = Vector::from_fn(4, |_, _| normal.sample(&mut rng));
                let mut x = dom.project(&far).unwrap();
                if case % 2 == 0 {
                    x[2] *= 0.1;
                    x[3] *= 0.1;
                }
                let mut gens = Vec::new();
                for b in 0..2 {
                    let blk = x.rows(2 * b, 2).into_owned();
                    if blk.norm() >= 0.5 - 1e-12 {
                        let mut g = Vector::zeros(4);
                        g.rows_mut(2 * b, 2).copy_from(&(&blk / blk.norm()));
                        gens.push(g);
                    }
                }
                (dom, x, gens)
            }
        };
        let v = Vector::from_fn(x.len(), |_, _| normal.sample(&mut rng));
        let got = dom.dist_to_neg_normal_cone(&x, &v).unwrap();
        worst_cone = worst_cone.max((got - brute_cone_distance(&gens, &v)).abs());
    }
    outcome(
        worst_nnls <= 1e-8 && worst_grid <= 1e-3 && worst_cone <= 1e-6,
        format!(
            "nnls max diff {worst_nnls:.2e} (<= 1e-8); measure vs grid {worst_grid:.2e} (<= 1e-3); normal cone vs brute force {worst_cone:.2e} (<= 1e-6)"
        ),
    )
}

// ---------- criterion 10 ----------

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut oracles: Vec<(String, SharedOracle, DomainSet)> = Vec::new();
    let (q1, _) = qp1d();
    oracles.push(("qp1d f0".into(), q1.f0.clone(), q1.reg.domain().clone()));
    oracles.push(("qp1d f1".into(), q1.ineq[0].clone(), q1.reg.domain().clone()));
    let (q5, _) = synthetic_build(SyntheticKind::ConvexQpWithEquality, 1, 5).unwrap();
    for (i, o) in std::iter::once(&q5.f0).chain(&q5.ineq).chain(&q5.eq).enumerate() {
        oracles.push((format!("qp5d oracle {i}"), o.clone(), q5.reg.domain().clone()));
    }
    let (wc, _) = synthetic_build(SyntheticKind::WeaklyConvex, 0, 3).unwrap();
    oracles.push(("wc f0".into(), wc.f0.clone(), wc.reg.domain().clone()));
    oracles.push(("wc f1".into(), wc.ineq[0].clone(), wc.reg.domain().clone()));
    let mnpc = gaussian_mnpc(3, 8).unwrap();
    oracles.push(("mnpc f0".into(), mnpc.f0.clone(), mnpc.reg.domain().clone()));
    for (i, f) in mnpc.ineq.iter().enumerate() {
        oracles.push((format!("mnpc f{}", i + 1), f.clone(), mnpc.reg.domain().clone()));
    }
    let h = random_spd(6, -3.0, 3.0, &mut rng);
    let q = Vector::from_fn(6, |_, _| normal.sample(&mut rng));
    oracles.push((
        "indefinite quadratic".into(),
        Arc::new(Quadratic::new(h, q, 0.3)),
        DomainSet::ball(6, 2.0).unwrap(),
    ));
    for (name, p) in [("qp5d", &q5), ("wc", &wc), ("mnpc", &mnpc)] {
        let dom = p.reg.domain().clone();
        let center = dom.sample_uniform(&mut rng);
        let sub = make_subproblem(p, &center, 0.7, 50.0).unwrap();
        oracles.push((format!("{name} penalty subproblem"), sub.phi.clone(), dom));
    }
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    for (name, o, dom) in &oracles {
        for _ in 0..100 {
            let x = dom.sample_uniform(&mut rng);
            let e = fd_error(o.as_ref(), &x);
            if e > worst {
                worst = e;
                worst_name = name.clone();
            }
        }
    }
    outcome(
        worst <= 1e-5,
        format!("{} oracles x 100 points, max relative error {worst:.2e} ({worst_name})", oracles.len()),
    )
}

// ---------- criterion 11 ----------

fn run_cli(args: &[&str], seed_env: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ippp"));
    cmd.args(args);
    match seed_env {
        Some(s) => cmd.env("IPPP_SEED", s),
        None => cmd.env_remove("IPPP_SEED"),
    };
    let out = cmd.output().expect("spawn ippp");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let mut notes = Vec::new();
    let mut pass = true;
    for (fixture, schedule) in [("qp5d", "convex"), ("mnpc3", "scaled")] {
        let mut traces = Vec::new();
        for run in 0..2 {
            let t = path(&format!("{fixture}_{run}.csv"));
            let r = path(&format!("{fixture}_{run}.txt"));
            let (code, err) = run_cli(
                &["solve", "--fixture", fixture, "--schedule", schedule, "--seed", "7", "--k-max", "40", "--trace", &t, "--report", &r],
                None,
            );
            if code != 0 && code != 2 {
                return outcome(false, format!("solve {fixture} exited {code}: {err}"));
            }
            traces.push(std::fs::read(&t).unwrap());
        }
        let same = traces[0] == traces[1];
        pass &= same;
        notes.push(format!("{fixture} bit-identical: {same}"));
    }
    // IPPP_SEED overrides the configured seed
    let t_env = path("env.csv");
    let t_flag = path("flag.csv");
    run_cli(&["solve", "--fixture", "qp5d", "--seed", "1", "--k-max", "20", "--trace", &t_env, "--out", &path("e")], Some("9"));
    run_cli(&["solve", "--fixture", "qp5d", "--seed", "9", "--k-max", "20", "--trace", &t_flag, "--out", &path("f")], None);
    let t_plain = path("plain.csv");
    run_cli(&["solve", "--fixture", "qp5d", "--seed", "1", "--k-max", "20", "--trace", &t_plain, "--out", &path("p")], None);
    let env_ok = std::fs::metadata(&t_env).is_ok()
        && std::fs::read(&t_env).ok() == std::fs::read(&t_flag).ok()
        && std::fs::read(&t_env).ok() != std::fs::read(&t_plain).ok();
    pass &= env_ok;
    notes.push(format!("IPPP_SEED override: {env_ok}"));

    let table: [(&str, usize, &str); 8] = [
        ("x 1:2", 1, "non-numeric label"),
        ("1.5 1:2", 1, "non-integer label"),
        ("1 1:2\n2 0:1", 2, "index must be positive"),
        ("1 -3:1", 1, "index must be positive"),
        ("1 1:abc", 1, "non-numeric value"),
        ("2 3:1 2:1", 1, "non-increasing index"),
        ("# c\n\n1 a:1", 3, "non-numeric index"),
        ("1 1:1\n1 12", 2, "expected index:value"),
    ];
    let mut table_ok = true;
    for (text, line, msg) in table {
        table_ok &= matches!(parse_libsvm(text.as_bytes()), Err(Error::Parse { line: l, message }) if l == line && message.contains(msg));
    }
    pass &= table_ok;
    notes.push(format!("LIBSVM malformed table: {table_ok}"));

    let golden = "k,gamma,beta,eps_hat,objective,S,F,C,inner_steps,cum_steps,wall_ms";
    let written = std::fs::read_to_string(path("qp5d_0.csv")).unwrap();
    let empty = trace_to_string(&SolveTrace {
        records: vec![],
        r_index: None,
        option: SelectOption::I,
    });
    let header_ok = written.lines().next() == Some(golden) && TRACE_HEADER == golden && empty.lines().next() == Some(golden);
    pass &= header_ok;
    notes.push(format!("golden header diff empty: {header_ok}"));
    outcome(pass, notes.join("; "))
}

// ---------- criterion 12 ----------

fn criterion_12() -> Outcome {
    let affine = affine_fixture();
    let a_norm = 3.0;
    let est = estimate_nonsingularity(&affine, 10_000, 12).unwrap();
    let m2 = gaussian_mnpc(2, 12).unwrap();
    let est2 = estimate_nonsingularity(&m2, 10_000, 12).unwrap();
    outcome(
        (est.nu - a_norm).abs() <= 1e-6 && est2.nu > 0.0,
        format!(
            "affine: nu {:.9} vs |a| = 3 ({} informative samples); lifted 2-class mNPC: nu {:.4e} ({} informative)",
            est.nu, est.informative, est2.nu, est2.informative
        ),
    )
}

fn main() {
    let mut failed_required = 0;
    let mut report = |n: u32, expected_fail: bool, name: &str, f: &dyn Fn() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let secs = t0.elapsed().as_secs_f64();
        let status = match (o.pass, expected_fail) {
            (true, false) => "PASS",
            (false, false) => {
                failed_required += 1;
                "FAIL"
            }
            (false, true) => "FAIL (expected)",
            (true, true) => "PASS (unexpected)",
        };
        println!("criterion {n:>2} {status}: {name} [{secs:.1}s] {}", o.detail);
    };
    let inner = std::cell::OnceCell::new();
    report(1, false, "inner solver correctness", &|| inner.get_or_init(criterion_1_2).0.clone());
    report(2, false, "stationarity bound on every proximal gradient step", &|| {
        inner.get_or_init(criterion_1_2).1.clone()
    });
    report(3, true, "KKT reproduction on qp1d with beta = 1", &criterion_3);
    report(4, false, "rate sanity on a 5-d convex QP", &criterion_4);
    report(5, false, "subproblem optimality gap bound", &criterion_5);
    report(6, false, "weak convexity certificates of the penalty terms", &criterion_6);
    report(7, false, "feasible-start regime on the weakly convex fixture", &criterion_7);
    report(8, false, "desk-scale mNPC", &criterion_8);
    report(9, false, "oracle equivalence", &criterion_9);
    report(10, false, "gradient suite", &criterion_10);
    report(11, false, "determinism and formats", &criterion_11);
    report(12, false, "non-singularity estimator", &criterion_12);
    if failed_required > 0 {
        println!("{failed_required} required criteria failed");
        std::process::exit(1);
    }
}
