use std::fmt;

use super::{DataCenterParams, ModelError, RewardPolicy, SchedulePlan, StorageParams, WorkloadTrace};

/// Absolute tolerance applied to every feasibility check.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// ρ ≥ 0.
    RewardFactor,
    /// m_on, m_of ≥ 0 and m ≥ 0.
    Switching,
    /// Enough machines for the scheduled load.
    MachineCapacity,
    /// Charge and discharge rate limits.
    StorageRate,
    /// 0 ≤ soc ≤ C_s.
    StateOfCharge,
    /// 0 ≤ φ ≤ λ.
    DeferredRange,
    /// η ≥ 0 and λ̂ ≥ 0.
    ServedNonNegative,
    /// Cannot serve more than was deferred so far.
    Backlog,
    /// Deferred work served within its deadline.
    Deadline,
    /// Everything deferred is served within the cycle.
    TerminalCompletion,
}

impl ConstraintKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RewardFactor => "reward-factor",
            Self::Switching => "switching",
            Self::MachineCapacity => "machine-capacity",
            Self::StorageRate => "storage-rate",
            Self::StateOfCharge => "state-of-charge",
            Self::DeferredRange => "deferred-range",
            Self::ServedNonNegative => "served-non-negative",
            Self::Backlog => "backlog",
            Self::Deadline => "deadline",
            Self::TerminalCompletion => "terminal-completion",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated constraint instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ConstraintKind,
    /// Tenant class id.
    pub class: Option<u32>,
    /// 1-based slot.
    pub slot: Option<usize>,
    /// How far outside the feasible range the plan lies.
    pub residual: f64,
}

impl Violation {
    /// `slot` is a 0-based index and is stored 1-based.
    pub(crate) fn new(kind: ConstraintKind, class: Option<u32>, slot: Option<usize>, residual: f64) -> Self {
        Self {
            kind,
            class,
            slot: slot.map(|t| t + 1),
            residual,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(c) = self.class {
            write!(f, " class {c}")?;
        }
        if let Some(t) = self.slot {
            write!(f, " slot {t}")?;
        }
        write!(f, " off by {:.3e}", self.residual)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    /// Records a violation when `excess` is above tolerance.
    fn check(&mut self, kind: ConstraintKind, class: Option<u32>, slot: Option<usize>, excess: f64) {
        if excess > FEASIBILITY_TOL || excess.is_nan() {
            self.0.push(Violation::new(kind, class, slot, excess));
        }
    }
}

/// Lists every constraint the plan breaks. `caps` holds the integer
/// deadline of each class, in class order.
pub fn check_feasibility(
    trace: &WorkloadTrace,
    params: &DataCenterParams,
    storage: &StorageParams,
    policy: &RewardPolicy,
    caps: &[u32],
    plan: &SchedulePlan,
) -> Result<Vec<Violation>, ModelError> {
    use ConstraintKind::*;

    plan.check_dims(trace)?;
    if caps.len() != trace.classes().len() {
        return Err(ModelError::Dimension(format!(
            "{} deadline caps for {} classes",
            caps.len(),
            trace.classes().len()
        )));
    }
    if let Some(&c) = caps.iter().find(|&&c| c > policy.d_max) {
        return Err(ModelError::InvalidArgument(format!(
            "deadline cap {c} exceeds the maximum deferment {}",
            policy.d_max
        )));
    }
    let tau = trace.tau();
    let n = params.n();
    let t_len = trace.slot_hours();
    let mut out = Collector(Vec::new());

    out.check(RewardFactor, None, None, -plan.rho);

    let machines = plan.machines(params.m0);
    let mut soc = storage.initial_kwh;
    for t in 0..tau {
        out.check(Switching, None, Some(t), -plan.m_on[t]);
        out.check(Switching, None, Some(t), -plan.m_of[t]);
        out.check(Switching, None, Some(t), -machines[t]);

        let load: f64 = (0..trace.classes().len())
            .map(|i| plan.scheduled(trace, i, t))
            .sum();
        out.check(MachineCapacity, None, Some(t), load / n - machines[t]);

        let s = plan.storage[t];
        out.check(StorageRate, None, Some(t), s - storage.charge_kw * t_len);
        out.check(StorageRate, None, Some(t), -s - storage.discharge_kw * t_len);
        soc += s;
        out.check(StateOfCharge, None, Some(t), -soc);
        out.check(StateOfCharge, None, Some(t), soc - storage.capacity_kwh);
    }

    for (i, class) in trace.classes().iter().enumerate() {
        let id = Some(class.id);
        let phi = &plan.phi[i];
        let eta = &plan.eta[i];
        let cap = caps[i] as usize;

        let mut backlog = 0.0;
        let mut arrived = vec![0.0; tau + 1];
        let mut served = vec![0.0; tau + 1];
        for t in 0..tau {
            let lambda = trace.requests(i, t);
            out.check(DeferredRange, id, Some(t), -phi[t]);
            out.check(DeferredRange, id, Some(t), phi[t] - lambda);
            out.check(ServedNonNegative, id, Some(t), -eta[t]);
            let scheduled = plan.scheduled(trace, i, t);
            out.check(ServedNonNegative, id, Some(t), -scheduled);

            backlog += eta[t] - phi[t];
            out.check(Backlog, id, Some(t), backlog);

            arrived[t + 1] = arrived[t] + lambda;
            served[t + 1] = served[t] + scheduled;
        }
        for t in 0..tau {
            let horizon = (t + cap).min(tau - 1);
            out.check(Deadline, id, Some(t), arrived[t + 1] - served[horizon + 1]);
        }
        out.check(TerminalCompletion, id, None, backlog.abs());
    }
    Ok(out.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Kappa, TenantClass};

    fn setup() -> (WorkloadTrace, DataCenterParams, StorageParams, RewardPolicy) {
        let trace = WorkloadTrace::new(
            1.0,
            vec![
                TenantClass::new(1, Kappa::Inelastic),
                TenantClass::new(2, Kappa::Finite(0.1)),
            ],
            vec![vec![10, 20, 10], vec![20, 0, 0]],
        )
        .unwrap();
        let params = DataCenterParams {
            n_per_machine: 10,
            e_pue: 1.0,
            p_idle_kw: 0.1,
            p_peak_kw: 0.2,
            o_on_kwh: 0.0,
            o_of_kwh: 0.0,
            w_on_usd: 0.0,
            w_of_usd: 0.0,
            m0: 4,
        };
        let storage = StorageParams {
            capacity_kwh: 1.0,
            charge_kw: 0.5,
            discharge_kw: 0.5,
            wear_usd_per_kwh: 0.1,
            initial_kwh: 0.0,
        };
        let policy = RewardPolicy {
            delta: 1.0,
            psi: 10.0,
            d_max: 2,
            rho: 0.0,
        };
        (trace, params, storage, policy)
    }

    fn kinds(v: &[Violation]) -> Vec<ConstraintKind> {
        v.iter().map(|v| v.kind).collect()
    }

    #[test]
    fn idle_plan_with_enough_machines_is_feasible() {
        let (trace, params, storage, policy) = setup();
        let plan = SchedulePlan::idle(2, 3);
        let v = check_feasibility(&trace, &params, &storage, &policy, &[0, 0], &plan).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn unserved_deferral_breaks_terminal_completion() {
        let (trace, params, storage, policy) = setup();
        let mut plan = SchedulePlan::idle(2, 3);
        plan.phi[1][0] = 20.0;
        let v = check_feasibility(&trace, &params, &storage, &policy, &[0, 2], &plan).unwrap();
        let terminal = v
            .iter()
            .find(|v| v.kind == ConstraintKind::TerminalCompletion)
            .expect("terminal completion violation");
        assert_eq!(terminal.class, Some(2));
        assert_eq!(terminal.residual, 20.0);
    }

    #[test]
    fn overcharging_breaks_the_rate_bound() {
        let (trace, params, storage, policy) = setup();
        let mut plan = SchedulePlan::idle(2, 3);
        plan.storage[0] = storage.charge_kw + 1.0;
        let v = check_feasibility(&trace, &params, &storage, &policy, &[0, 0], &plan).unwrap();
        assert_eq!(v[0].kind, ConstraintKind::StorageRate);
        assert_eq!(v[0].slot, Some(1));
        // 1.5 KWh also exceeds the 1 KWh capacity.
        assert!(kinds(&v).contains(&ConstraintKind::StateOfCharge));
    }

    #[test]
    fn deferral_past_the_deadline_is_reported() {
        let (trace, params, storage, policy) = setup();
        let mut plan = SchedulePlan::idle(2, 3);
        plan.phi[1][0] = 20.0;
        plan.eta[1][2] = 20.0;
        let ok = check_feasibility(&trace, &params, &storage, &policy, &[0, 2], &plan).unwrap();
        assert!(ok.is_empty(), "{ok:?}");
        let late = check_feasibility(&trace, &params, &storage, &policy, &[0, 1], &plan).unwrap();
        assert_eq!(kinds(&late), vec![ConstraintKind::Deadline]);
        assert_eq!(late[0].slot, Some(1));
    }

    #[test]
    fn serving_before_deferring_breaks_backlog() {
        let (trace, params, storage, policy) = setup();
        let mut plan = SchedulePlan::idle(2, 3);
        plan.eta[0][0] = 5.0;
        plan.phi[0][1] = 5.0;
        let v = check_feasibility(&trace, &params, &storage, &policy, &[1, 0], &plan).unwrap();
        assert_eq!(kinds(&v), vec![ConstraintKind::Backlog]);
    }

    #[test]
    fn too_few_machines_and_negative_counts() {
        let (trace, mut params, storage, policy) = setup();
        params.m0 = 2;
        let mut plan = SchedulePlan::idle(2, 3);
        plan.m_on[0] = -1.0;
        plan.phi[1][0] = 25.0;
        let v = check_feasibility(&trace, &params, &storage, &policy, &[0, 0], &plan).unwrap();
        let k = kinds(&v);
        for expected in [
            ConstraintKind::Switching,
            ConstraintKind::MachineCapacity,
            ConstraintKind::DeferredRange,
            ConstraintKind::ServedNonNegative,
        ] {
            assert!(k.contains(&expected), "missing {expected} in {k:?}");
        }
    }

    #[test]
    fn tolerance_absorbs_rounding_noise() {
        let (trace, params, storage, policy) = setup();
        let mut plan = SchedulePlan::idle(2, 3);
        plan.phi[1][0] = 20.0 + 5e-8;
        plan.eta[1][1] = 20.0;
        let v = check_feasibility(&trace, &params, &storage, &policy, &[0, 1], &plan).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn violation_display_is_one_based() {
        let v = Violation::new(ConstraintKind::Deadline, Some(3), Some(0), 2.5);
        assert_eq!(v.to_string(), "deadline class 3 slot 1 off by 2.500e0");
    }
}
