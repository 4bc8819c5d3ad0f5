use proptest::prelude::*;
use upmr_core::model::{
    check_feasibility, cost_breakdown, deadline_slots, derive_power_series, DemandCharge, Instance,
    PricingSchedule, ScenarioKind, SchedulePlan,
};
use upmr_core::oracle::{grid_suite_instances, tiny_suite_instances};
use upmr_core::planner::solve_instance;

fn planned(inst: &Instance, kind: ScenarioKind) -> SchedulePlan {
    solve_instance(inst, kind).expect("suite instances solve").plan
}

fn scaled_tariff(p: &PricingSchedule, k: f64) -> PricingSchedule {
    let charges = p
        .demand_charges()
        .iter()
        .map(|dc| DemandCharge {
            beta: dc.beta * k,
            slots: dc.slots.clone(),
        })
        .collect();
    PricingSchedule::new(p.alpha().iter().map(|a| a * k).collect(), charges).unwrap()
}

fn instance_for(seed: u64, storage: bool) -> (Instance, ScenarioKind) {
    if storage {
        let (_, inst, kind) = tiny_suite_instances(seed, 2).pop().unwrap();
        (inst, kind)
    } else {
        let (_, inst) = grid_suite_instances(seed, 1).pop().unwrap();
        (inst, ScenarioKind::Upmr)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planned_schedules_respect_the_physics(seed in 0u64..10_000, storage in any::<bool>()) {
        let (inst, kind) = instance_for(seed, storage);
        let plan = planned(&inst, kind);
        let caps: Vec<u32> = inst.trace.classes().iter()
            .map(|c| deadline_slots(c.kappa, plan.rho, inst.policy.d_max).unwrap())
            .collect();
        let v = check_feasibility(&inst.trace, &inst.params, &inst.storage, &inst.policy, &caps, &plan).unwrap();
        prop_assert!(v.is_empty(), "{v:?}");

        let series = derive_power_series(&inst.trace, &inst.params, &inst.storage, &plan).unwrap();
        prop_assert!(series.grid_kwh.iter().all(|&p| p >= -1e-9));
        prop_assert!(series.utilization.iter().all(|&u| u <= 1.0 + 1e-9));
        for i in 0..inst.trace.classes().len() {
            let served: f64 = series.scheduled[i].iter().sum();
            prop_assert!((served - inst.trace.class_total(i)).abs() < 1e-6);
        }
    }

    #[test]
    fn profit_is_revenue_less_costs(seed in 0u64..10_000, storage in any::<bool>()) {
        let (inst, kind) = instance_for(seed, storage);
        let plan = planned(&inst, kind);
        let c = cost_breakdown(&inst.trace, &inst.pricing, &inst.params, &inst.storage, &inst.policy, &plan).unwrap();
        prop_assert_eq!(c.bill, c.energy_charge + c.demand_charge);
        prop_assert_eq!(c.profit, c.revenue - c.reward - c.wear - c.bill);
        prop_assert!(c.reward >= 0.0 && c.wear >= 0.0 && c.bill >= 0.0);
    }

    #[test]
    fn bill_scales_with_the_tariff(seed in 0u64..10_000, k in 0.1..10.0f64) {
        let (inst, kind) = instance_for(seed, false);
        let plan = planned(&inst, kind);
        let base = cost_breakdown(&inst.trace, &inst.pricing, &inst.params, &inst.storage, &inst.policy, &plan).unwrap();
        let scaled = cost_breakdown(&inst.trace, &scaled_tariff(&inst.pricing, k), &inst.params, &inst.storage, &inst.policy, &plan).unwrap();
        prop_assert!((scaled.bill - k * base.bill).abs() <= 1e-12 * (k * base.bill).max(1.0));
        prop_assert_eq!(scaled.wear, base.wear);
        prop_assert_eq!(scaled.reward, base.reward);
    }
}
