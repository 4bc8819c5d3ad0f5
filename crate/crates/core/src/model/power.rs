use super::{
    ConstraintKind, DataCenterParams, ModelError, SchedulePlan, StorageParams, Violation,
    WorkloadTrace, FEASIBILITY_TOL,
};

/// Per-slot energy quantities implied by a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    /// Machines on.
    pub machines: Vec<f64>,
    /// Average utilization in [0, 1].
    pub utilization: Vec<f64>,
    /// Power of the active machines, KW.
    pub machine_kw: Vec<f64>,
    /// Switching overhead energy, KWh.
    pub overhead_kwh: Vec<f64>,
    /// Energy held in storage at the end of each slot, KWh.
    pub soc_kwh: Vec<f64>,
    /// Energy drawn from the grid, KWh.
    pub grid_kwh: Vec<f64>,
    /// Scheduled requests `[class][slot]`.
    pub scheduled: Vec<Vec<f64>>,
}

/// Recomputes every energy quantity from the raw decisions.
pub fn derive_power_series(
    trace: &WorkloadTrace,
    params: &DataCenterParams,
    storage: &StorageParams,
    plan: &SchedulePlan,
) -> Result<PowerSeries, ModelError> {
    plan.check_dims(trace)?;
    let tau = trace.tau();
    let classes = trace.classes().len();
    let n = params.n();
    let t_len = trace.slot_hours();

    let scheduled: Vec<Vec<f64>> = (0..classes)
        .map(|i| (0..tau).map(|t| plan.scheduled(trace, i, t)).collect())
        .collect();

    let mut machines = plan.machines(params.m0);
    let mut utilization = Vec::with_capacity(tau);
    let mut machine_kw = Vec::with_capacity(tau);
    let mut overhead_kwh = Vec::with_capacity(tau);
    let mut soc_kwh = Vec::with_capacity(tau);
    let mut grid_kwh = Vec::with_capacity(tau);
    let mut violations = Vec::new();
    let mut soc = storage.initial_kwh;

    for t in 0..tau {
        let load: f64 = scheduled.iter().map(|row| row[t]).sum();
        let m = machines[t];
        if m < -FEASIBILITY_TOL {
            violations.push(Violation::new(ConstraintKind::Switching, None, Some(t), -m));
        }
        let m = m.max(0.0);
        machines[t] = m;
        let u = if m > 0.0 {
            load / (n * m)
        } else if load <= FEASIBILITY_TOL {
            0.0
        } else {
            violations.push(Violation::new(
                ConstraintKind::MachineCapacity,
                None,
                Some(t),
                load / n,
            ));
            0.0
        };
        // m·(P_idle + (P_peak − P_idle)·u), expanded so m → 0 stays finite.
        let pm = m * params.p_idle_kw + (params.p_peak_kw - params.p_idle_kw) * load / n;
        let po = params.o_on_kwh * plan.m_on[t] + params.o_of_kwh * plan.m_of[t];
        soc += plan.storage[t];
        let grid = (params.e_pue * (pm * t_len + po) + plan.storage[t]).max(0.0);

        utilization.push(u);
        machine_kw.push(pm);
        overhead_kwh.push(po);
        soc_kwh.push(soc);
        grid_kwh.push(grid);
    }

    if !violations.is_empty() {
        return Err(ModelError::Infeasible(violations));
    }
    Ok(PowerSeries {
        machines,
        utilization,
        machine_kw,
        overhead_kwh,
        soc_kwh,
        grid_kwh,
        scheduled,
    })
}
