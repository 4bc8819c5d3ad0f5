//! Sub-domain decomposition over the reward factor.
//!
//! Every sub-domain fixes the integer deadline of each class, which turns
//! the operator's problem into a linear program. Within a sub-domain the
//! reward only grows with ρ, so each one is solved at its lower bound and
//! the best of them wins.

mod subdomain;
mod subproblem;

use rayon::prelude::*;
use thiserror::Error;
use upmr_lp::{solve_lp, LpError, LpStatus};

pub use subdomain::{enumerate_subdomains, Subdomain};
pub use subproblem::{build_subproblem, extract_plan, Subproblem, SubproblemLayout, CLIP_TOL};

use crate::model::{
    cost_breakdown, derive_power_series, evaluate_plan, CostBreakdown, Instance, ModelError,
    PowerSeries, PricingSchedule, ScenarioKind, SchedulePlan, WorkloadTrace,
};
use crate::trace_io::{InputError, ScenarioConfig};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("LP solver failed: {0}")]
    Lp(#[from] LpError),
    #[error("negative energy price at slot {slot}; the grid-draw reformulation needs prices ≥ 0")]
    NegativePrice { slot: usize },
    #[error("sub-problem at rho = {lb} is {status:?}; serving everything immediately is always feasible, so this is a bug")]
    Subproblem { lb: f64, status: LpStatus },
    #[error("cannot extract a plan from a {0:?} solution")]
    NotOptimal(LpStatus),
    #[error(transparent)]
    Input(#[from] InputError),
}

/// What happened in one sub-domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainOutcome {
    pub subdomain: Subdomain,
    pub status: LpStatus,
    /// Profit recomputed from the extracted plan; NaN when not optimal.
    pub profit: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub kind: ScenarioKind,
    pub rho: f64,
    pub subdomain: Subdomain,
    pub plan: SchedulePlan,
    pub series: PowerSeries,
    pub cost: CostBreakdown,
    pub log: Vec<SubdomainOutcome>,
}

struct Solved {
    outcome: SubdomainOutcome,
    plan: SchedulePlan,
    cost: CostBreakdown,
}

fn solve_one(sub: &Subdomain, instance: &Instance, kind: ScenarioKind) -> Result<Solved, PlannerError> {
    let Subproblem { lp, layout } = build_subproblem(sub, instance, kind)?;
    let solution = solve_lp(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(PlannerError::Subproblem {
            lb: sub.lb,
            status: solution.status,
        });
    }
    let plan = extract_plan(&solution, &layout)?;
    let cost = evaluate_plan(
        &instance.trace,
        &instance.pricing,
        &instance.params,
        &instance.storage,
        &instance.policy,
        &plan,
    )?;
    Ok(Solved {
        outcome: SubdomainOutcome {
            subdomain: sub.clone(),
            status: solution.status,
            profit: cost.profit,
            iterations: solution.iterations,
        },
        plan,
        cost,
    })
}

/// The sub-domains a scenario searches: all of them when tenants are
/// rewarded, otherwise only ρ = 0 with no deferral.
pub fn scenario_subdomains(instance: &Instance, kind: ScenarioKind) -> Vec<Subdomain> {
    let classes = instance.trace.classes();
    if kind.uses_reward() {
        enumerate_subdomains(classes, instance.policy.d_max)
    } else {
        vec![Subdomain {
            lb: 0.0,
            ub: f64::INFINITY,
            d_lb: vec![0; classes.len()],
        }]
    }
}

/// Solves one scenario to global optimality over the continuous relaxation.
/// Ties go to the lowest reward factor.
pub fn solve_instance(instance: &Instance, kind: ScenarioKind) -> Result<PlanResult, PlannerError> {
    instance.validate()?;
    let subs = scenario_subdomains(instance, kind);
    let solved: Vec<Solved> = subs
        .par_iter()
        .map(|sub| solve_one(sub, instance, kind))
        .collect::<Result<_, _>>()?;

    let mut best = 0;
    for (k, s) in solved.iter().enumerate() {
        if s.cost.profit > solved[best].cost.profit {
            best = k;
        }
    }
    let log = solved.iter().map(|s| s.outcome.clone()).collect();
    let winner = solved.into_iter().nth(best).expect("at least one sub-domain");
    let series = derive_power_series(
        &instance.trace,
        &instance.params,
        &instance.storage,
        &winner.plan,
    )?;
    Ok(PlanResult {
        kind,
        rho: winner.plan.rho,
        subdomain: winner.outcome.subdomain,
        plan: winner.plan,
        series,
        cost: winner.cost,
        log,
    })
}

/// Assembles the instance a config describes and solves its scenario.
pub fn solve_scenario(
    config: &ScenarioConfig,
    trace: WorkloadTrace,
    pricing: PricingSchedule,
) -> Result<PlanResult, PlannerError> {
    let instance = config.instance(trace, pricing)?;
    solve_instance(&instance, config.kind)
}

/// Rounds the machine count of every slot up to an integer and prices the
/// result. Reported alongside the relaxation, never in its place.
pub fn round_machines(instance: &Instance, plan: &SchedulePlan) -> Result<(SchedulePlan, CostBreakdown), PlannerError> {
    let m0 = f64::from(instance.params.m0);
    let mut rounded = plan.clone();
    let mut before = m0;
    for (t, m) in plan.machines(instance.params.m0).into_iter().enumerate() {
        let up = (m - 1e-9).ceil().max(0.0);
        let delta = up - before;
        rounded.m_on[t] = delta.max(0.0);
        rounded.m_of[t] = (-delta).max(0.0);
        before = up;
    }
    let cost = cost_breakdown(
        &instance.trace,
        &instance.pricing,
        &instance.params,
        &instance.storage,
        &instance.policy,
        &rounded,
    )?;
    Ok((rounded, cost))
}
