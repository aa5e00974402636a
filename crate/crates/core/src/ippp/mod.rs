//! Inexact proximal-point penalty outer loop.
//!
//! Each outer iteration adds a proximal term around the current center and
//! quadratic penalties on the constraints, solves the resulting strongly
//! convex composite subproblem with AdapAPG to tolerance `eps_hat_k`, and
//! scores the new center with the penalty multipliers.

mod budget;
mod schedule;
mod subproblem;

use std::time::Instant;

pub use budget::{
    c3_constant, feasible_start_beta, m_lambda, m_y, q_constant, theory_budget, BudgetInputs, BudgetReport,
    BudgetVariant, InteriorPoint,
};
pub use schedule::{EpsRule, Schedule, ScheduleValues, WeakConvexityProfile};
pub use subproblem::{make_subproblem, metrics, Multipliers, PenaltyObjective, StationarityReport};

use crate::adapapg::{adapapg_solve, AdapConfig, AdapOutcome, CompositeSubproblem};
use crate::error::{Error, Result};
use crate::model::{ConstrainedProblem, Vector};

/// Smallest inner tolerance ever requested.
pub const EPS_HAT_FLOOR: f64 = 1e-12;

/// Output selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectOption {
    /// `argmin max{S, F, C}`
    I,
    /// `argmin max{S, F}`
    II,
}

impl SelectOption {
    pub fn score(self, r: &StationarityReport) -> f64 {
        match self {
            SelectOption::I => r.max_sfc(),
            SelectOption::II => r.max_sf(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SelectOption::I => "I",
            SelectOption::II => "II",
        }
    }
}

/// One outer iteration as recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub gamma: f64,
    pub beta: f64,
    pub eps_hat: f64,
    pub objective: f64,
    pub s: f64,
    pub f: f64,
    pub c: f64,
    pub inner_steps: u64,
    pub cum_steps: u64,
    pub wall_ms: f64,
}

impl TraceRecord {
    pub fn report(&self) -> StationarityReport {
        StationarityReport {
            s: self.s,
            f: self.f,
            c: self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The selected iterate meets the tolerance.
    Converged,
    /// `K_max` outer iterations elapsed.
    MaxOuter,
    /// The cumulative proximal-step budget ran out.
    ProxBudget,
    /// An inner solve exhausted its own step cap.
    InnerBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// Index into `records` of the selected iterate.
    pub r_index: Option<usize>,
    pub option: SelectOption,
}

impl SolveTrace {
    /// Recomputes the selected index from the records: argmin of the
    /// option's score, ties to the smallest index.
    pub fn select(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.records.iter().enumerate() {
            let v = self.option.score(&r.report());
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpppSettings {
    pub schedule: Schedule,
    pub option: SelectOption,
    pub eps: f64,
    pub k_max: usize,
    pub inner: AdapConfig,
    /// Cap on the total number of proximal gradient steps over all inner
    /// solves.
    pub prox_budget: Option<u64>,
    /// Record wall-clock time per outer iteration. Off by default so that
    /// traces are reproducible byte for byte.
    pub timing: bool,
}

impl IpppSettings {
    pub fn new(schedule: Schedule, option: SelectOption, eps: f64, k_max: usize) -> Self {
        Self {
            schedule,
            option,
            eps,
            k_max,
            inner: AdapConfig::default(),
            prox_budget: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IpppOutcome {
    /// Selected center `x_bar^(R)`.
    pub x_out: Vector,
    pub multipliers: Multipliers,
    pub report: StationarityReport,
    pub trace: SolveTrace,
    pub status: SolveStatus,
    /// The feasible-start schedule was used from an infeasible point.
    pub infeasible_start: bool,
    /// Final center, regardless of selection.
    pub x_last: Vector,
}

/// Everything known about one finished outer iteration.
pub struct OuterEvent<'a> {
    pub k: usize,
    pub values: ScheduleValues,
    pub subproblem: &'a CompositeSubproblem,
    pub x_prev: &'a Vector,
    pub x_next: &'a Vector,
    pub inner: &'a AdapOutcome,
    pub record: &'a TraceRecord,
}

pub fn ippp_solve(p: &ConstrainedProblem, settings: &IpppSettings, x0: &Vector) -> Result<IpppOutcome> {
    run(p, settings, x0, None)
}

pub fn ippp_solve_observed(
    p: &ConstrainedProblem,
    settings: &IpppSettings,
    x0: &Vector,
    observer: &mut dyn FnMut(&OuterEvent<'_>),
) -> Result<IpppOutcome> {
    run(p, settings, x0, Some(observer))
}

fn run(
    p: &ConstrainedProblem,
    st: &IpppSettings,
    x0: &Vector,
    mut observer: Option<&mut dyn FnMut(&OuterEvent<'_>)>,
) -> Result<IpppOutcome> {
    st.schedule.validate()?;
    st.inner.validate()?;
    if !(st.eps > 0.0) {
        return Err(Error::config("eps must be positive"));
    }
    if st.k_max == 0 {
        return Err(Error::config("K_max must be positive"));
    }
    p.check_point(x0)?;
    p.reg.domain().ensure_contains(x0)?;
    let infeasible_start = st.schedule.requires_feasible_start() && p.infeasibility(x0) > 0.0;

    let mut x_bar = x0.clone();
    let mut m_hat = st.inner.l_ini;
    let mut mu_hat = st.inner.mu0;
    let mut cum: u64 = 0;
    let mut trace = SolveTrace {
        records: Vec::new(),
        r_index: None,
        option: st.option,
    };
    let mut best: Option<(f64, Vector, Multipliers, StationarityReport)> = None;
    let mut status = SolveStatus::MaxOuter;

    for k in 0..st.k_max {
        let started = st.timing.then(Instant::now);
        let values = st.schedule.values(k)?;
        let eps_hat = values.eps_hat.max(EPS_HAT_FLOOR);
        let sub = make_subproblem(p, &x_bar, values.gamma, values.beta)?;
        if let Some(sc) = st.schedule.strong_convexity(k) {
            mu_hat = mu_hat.max(sc);
        }
        let l_min = st.inner.l_min.max(mu_hat);
        let mut inner_cap = st.inner.max_prox_steps;
        if let Some(b) = st.prox_budget {
            let left = b.saturating_sub(cum);
            if left == 0 {
                status = SolveStatus::ProxBudget;
                break;
            }
            inner_cap = inner_cap.min(left);
        }
        let cfg = AdapConfig {
            l_min,
            mu0: mu_hat,
            l_ini: m_hat.max(l_min),
            eps_hat,
            max_prox_steps: inner_cap,
            ..st.inner
        };
        let inner = adapapg_solve(&sub, &x_bar, &cfg)?;
        cum += inner.prox_steps;
        let x_next = inner.x_hat.clone();
        let (report, mult) = metrics(p, &x_next, values.beta)?;
        let record = TraceRecord {
            k,
            gamma: values.gamma,
            beta: values.beta,
            eps_hat,
            objective: p.objective(&x_next),
            s: report.s,
            f: report.f,
            c: report.c,
            inner_steps: inner.prox_steps,
            cum_steps: cum,
            wall_ms: started.map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3),
        };
        trace.records.push(record);
        let score = st.option.score(&report);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x_next.clone(), mult, report));
            trace.r_index = Some(k);
        }
        if let Some(obs) = observer.as_mut() {
            obs(&OuterEvent {
                k,
                values: ScheduleValues { eps_hat, ..values },
                subproblem: &sub,
                x_prev: &x_bar,
                x_next: &x_next,
                inner: &inner,
                record: &record,
            });
        }
        m_hat = inner.m_hat;
        mu_hat = inner.mu_hat;
        x_bar = x_next;

        if inner.budget_exhausted {
            status = if st.prox_budget.is_some_and(|b| cum >= b) {
                SolveStatus::ProxBudget
            } else {
                SolveStatus::InnerBudgetExhausted
            };
            break;
        }
        if best.as_ref().is_some_and(|b| b.0 <= st.eps) {
            status = SolveStatus::Converged;
            break;
        }
    }

    let (x_out, multipliers, report) = match best {
        Some((_, x, m, r)) => (x, m, r),
        None => {
            // budget was spent before the first outer iteration
            let beta = st.schedule.values(0)?.beta;
            let (r, m) = metrics(p, x0, beta)?;
            (x0.clone(), m, r)
        }
    };
    Ok(IpppOutcome {
        x_out,
        multipliers,
        report,
        trace,
        status,
        infeasible_start,
        x_last: x_bar,
    })
}
