use super::{
    check_feasibility, deadline_slots, derive_power_series, reward_rate, DataCenterParams,
    ModelError, PricingSchedule, RewardPolicy, SchedulePlan, StorageParams, WorkloadTrace,
};

/// Operator profit and its components, all in dollars.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub revenue: f64,
    pub reward: f64,
    pub wear: f64,
    pub energy_charge: f64,
    pub demand_charge: f64,
    pub bill: f64,
    pub profit: f64,
}

/// Prices a plan without checking it. The reward uses `plan.rho`.
pub fn cost_breakdown(
    trace: &WorkloadTrace,
    pricing: &PricingSchedule,
    params: &DataCenterParams,
    storage: &StorageParams,
    policy: &RewardPolicy,
    plan: &SchedulePlan,
) -> Result<CostBreakdown, ModelError> {
    if pricing.tau() != trace.tau() {
        return Err(ModelError::Dimension(format!(
            "tariff covers {} slots, trace {}",
            pricing.tau(),
            trace.tau()
        )));
    }
    let series = derive_power_series(trace, params, storage, plan)?;

    let revenue = policy.delta * trace.total_requests() / policy.psi;
    let mut reward = 0.0;
    for (i, class) in trace.classes().iter().enumerate() {
        let gamma = reward_rate(class.kappa, plan.rho, policy.d_max)?;
        reward += gamma * trace.class_total(i) / policy.psi;
    }

    let discharged: f64 = plan.storage.iter().map(|&s| (-s).max(0.0)).sum();
    let wear = storage.wear_usd_per_kwh * discharged
        + params.w_on_usd * plan.m_on.iter().sum::<f64>()
        + params.w_of_usd * plan.m_of.iter().sum::<f64>();

    let energy_charge: f64 = pricing
        .alpha()
        .iter()
        .zip(&series.grid_kwh)
        .map(|(a, p)| a * p)
        .sum();
    let demand_charge: f64 = pricing
        .demand_charges()
        .iter()
        .map(|dc| {
            let peak = dc
                .slots
                .iter()
                .map(|&t| series.grid_kwh[t])
                .fold(0.0, f64::max);
            dc.beta / trace.slot_hours() * peak
        })
        .sum();
    let bill = energy_charge + demand_charge;

    Ok(CostBreakdown {
        revenue,
        reward,
        wear,
        energy_charge,
        demand_charge,
        bill,
        profit: revenue - reward - wear - bill,
    })
}

/// Checks the plan against the deadlines its own ρ induces, then prices it.
pub fn evaluate_plan(
    trace: &WorkloadTrace,
    pricing: &PricingSchedule,
    params: &DataCenterParams,
    storage: &StorageParams,
    policy: &RewardPolicy,
    plan: &SchedulePlan,
) -> Result<CostBreakdown, ModelError> {
    if !(plan.rho >= 0.0) {
        return Err(ModelError::InvalidArgument(format!(
            "reward factor must be non-negative, got {}",
            plan.rho
        )));
    }
    let caps = trace
        .classes()
        .iter()
        .map(|c| deadline_slots(c.kappa, plan.rho, policy.d_max))
        .collect::<Result<Vec<_>, _>>()?;
    let violations = check_feasibility(trace, params, storage, policy, &caps, plan)?;
    if !violations.is_empty() {
        return Err(ModelError::Infeasible(violations));
    }
    cost_breakdown(trace, pricing, params, storage, policy, plan)
}
