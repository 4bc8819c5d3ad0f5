use upmr_core::model::{
    check_feasibility, derive_power_series, DataCenterParams, DemandCharge, Instance, Kappa, PricingSchedule,
    RewardPolicy, ScenarioKind, SchedulePlan, StorageParams, TenantClass, WorkloadTrace,
};
use upmr_core::planner::{
    build_subproblem, enumerate_subdomains, extract_plan, round_machines, scenario_subdomains, solve_instance,
    PlannerError, Subdomain,
};
use upmr_lp::{solve_lp, LpSolution, LpStatus};

fn deferment_instance() -> Instance {
    Instance {
        trace: WorkloadTrace::new(1.0, vec![TenantClass::new(1, Kappa::Finite(0.01))], vec![vec![20, 0]]).unwrap(),
        pricing: PricingSchedule::new(vec![0.1, 0.01], vec![]).unwrap(),
        params: DataCenterParams {
            n_per_machine: 20,
            e_pue: 1.0,
            p_idle_kw: 0.1,
            p_peak_kw: 0.2,
            o_on_kwh: 0.0,
            o_of_kwh: 0.0,
            w_on_usd: 0.0,
            w_of_usd: 0.0,
            m0: 0,
        },
        storage: StorageParams::none(),
        policy: RewardPolicy {
            delta: 1.0,
            psi: 20.0,
            d_max: 1,
            rho: 0.0,
        },
    }
}

/// A day with a midday peak, two elastic classes, a demand charge over the
/// afternoon and a small battery.
fn day_instance(wear: f64) -> Instance {
    let base = [30u64, 25, 20, 20, 25, 40, 60, 80, 90, 100, 110, 120, 120, 115, 110, 100, 90, 80, 70, 60, 50, 45, 40, 35];
    let lambda = vec![
        base.iter().map(|&x| x * 2).collect(),
        base.iter().copied().collect(),
        base.iter().rev().map(|&x| x / 2).collect(),
    ];
    let classes = vec![
        TenantClass::new(1, Kappa::Inelastic),
        TenantClass::new(2, Kappa::Finite(0.01)),
        TenantClass::new(3, Kappa::Finite(0.012)),
    ];
    let alpha: Vec<f64> = (0..24).map(|t| if (8..20).contains(&t) { 0.12 } else { 0.05 }).collect();
    Instance {
        trace: WorkloadTrace::new(1.0, classes, lambda).unwrap(),
        pricing: PricingSchedule::new(alpha, vec![DemandCharge { beta: 2.0, slots: (12..18).collect() }]).unwrap(),
        params: DataCenterParams {
            n_per_machine: 20,
            e_pue: 1.2,
            p_idle_kw: 0.1,
            p_peak_kw: 0.2,
            o_on_kwh: 0.02,
            o_of_kwh: 0.01,
            w_on_usd: 0.003,
            w_of_usd: 0.002,
            m0: 5,
        },
        storage: StorageParams {
            capacity_kwh: 1.0,
            charge_kw: 0.5,
            discharge_kw: 0.5,
            wear_usd_per_kwh: wear,
            initial_kwh: 0.0,
        },
        policy: RewardPolicy {
            delta: 2.0,
            psi: 100.0,
            d_max: 4,
            rho: 0.0,
        },
    }
}

fn without_storage(mut inst: Instance) -> Instance {
    inst.storage = StorageParams::none();
    inst
}

#[test]
fn deferring_into_the_cheap_slot() {
    let inst = deferment_instance();
    let up = solve_instance(&inst, ScenarioKind::Up).unwrap();
    let upmr = solve_instance(&inst, ScenarioKind::Upmr).unwrap();

    assert!((upmr.rho - 0.02).abs() < 1e-12, "{}", upmr.rho);
    assert_eq!(upmr.subdomain.d_lb, vec![1]);
    assert_eq!(upmr.plan.phi[0], vec![20.0, 0.0]);
    assert_eq!(upmr.plan.eta[0], vec![0.0, 20.0]);
    assert!((upmr.cost.bill - 0.002).abs() < 1e-12);
    assert!((up.cost.bill - 0.02).abs() < 1e-12);
    assert!((upmr.cost.reward - 0.02 * 2f64.ln()).abs() < 1e-12);
    let gain = upmr.cost.profit - up.cost.profit;
    assert!((gain - 0.00414).abs() < 1e-5, "{gain}");
}

#[test]
fn zero_lower_bound_reproduces_up() {
    let inst = deferment_instance();
    let subs = enumerate_subdomains(inst.trace.classes(), 1);
    assert_eq!(subs[0].d_lb, vec![0]);
    let built = build_subproblem(&subs[0], &inst, ScenarioKind::Upmr).unwrap();
    let plan = extract_plan(&solve_lp(&built.lp).unwrap(), &built.layout).unwrap();
    let up = solve_instance(&inst, ScenarioKind::Up).unwrap();
    assert_eq!(plan, up.plan);
    assert_eq!(up.cost.reward, 0.0);
}

#[test]
fn up_solves_one_subproblem_at_zero() {
    let inst = day_instance(0.05);
    for kind in [ScenarioKind::Up, ScenarioKind::Ups] {
        let r = solve_instance(&inst, kind).unwrap();
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.rho, 0.0);
        assert_eq!(r.cost.reward, 0.0);
        assert!(r.plan.phi.iter().chain(&r.plan.eta).flatten().all(|&x| x == 0.0));
    }
    assert_eq!(scenario_subdomains(&inst, ScenarioKind::Upmr).len(), enumerate_subdomains(inst.trace.classes(), 4).len());
}

#[test]
fn winning_plan_is_feasible_under_its_deadlines() {
    let inst = day_instance(0.05);
    for kind in ScenarioKind::ALL {
        let r = solve_instance(&inst, kind).unwrap();
        let caps = if kind.uses_reward() { r.subdomain.d_lb.clone() } else { vec![0; 3] };
        let v = check_feasibility(&inst.trace, &inst.params, &inst.storage, &inst.policy, &caps, &r.plan).unwrap();
        assert!(v.is_empty(), "{kind}: {}", v[0]);
        let best = r.log.iter().map(|o| o.profit).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.cost.profit, best);
    }
}

#[test]
fn feasible_sets_nest() {
    let inst = day_instance(0.05);
    let profit = |k| solve_instance(&inst, k).unwrap().cost.profit;
    let (up, ups, upmr, upmrs) = (
        profit(ScenarioKind::Up),
        profit(ScenarioKind::Ups),
        profit(ScenarioKind::Upmr),
        profit(ScenarioKind::Upmrs),
    );
    let slack = |p: f64| 1e-6 * p.abs();
    assert!(ups >= up - slack(up));
    assert!(upmr >= up - slack(up));
    assert!(upmrs >= upmr - slack(upmr));
    assert!(upmrs >= ups - slack(ups));
    assert!(upmr > up, "deferral should pay off on a peaked day: {upmr} vs {up}");
}

#[test]
fn epigraphs_are_tight_at_the_optimum() {
    let inst = day_instance(0.05);
    let subs = enumerate_subdomains(inst.trace.classes(), inst.policy.d_max);
    for sub in [&subs[0], &subs[subs.len() / 2], subs.last().unwrap()] {
        let built = build_subproblem(sub, &inst, ScenarioKind::Upmrs).unwrap();
        let sol = solve_lp(&built.lp).unwrap();
        let plan = extract_plan(&sol, &built.layout).unwrap();
        let series = derive_power_series(&inst.trace, &inst.params, &inst.storage, &plan).unwrap();
        for (t, g) in built.layout.grid.iter().enumerate() {
            let g = sol.values[g.unwrap().0];
            assert!((g - series.grid_kwh[t]).abs() < 1e-6, "slot {t}: LP {g}, model {}", series.grid_kwh[t]);
        }
        let dc = &inst.pricing.demand_charges()[0];
        let peak = dc.slots.iter().map(|&t| series.grid_kwh[t]).fold(0.0, f64::max);
        assert!((sol.values[built.layout.peak[0].0] - peak).abs() < 1e-6);

        let (s_in, s_out) = (built.layout.s_in.unwrap(), built.layout.s_out.unwrap());
        for t in 0..24 {
            let both = sol.values[s_in[t].0] > 1e-7 && sol.values[s_out[t].0] > 1e-7;
            assert!(!both, "slot {t} charges and discharges at once");
        }
    }
}

#[test]
fn prohibitive_battery_wear_leaves_storage_idle() {
    let inst = day_instance(1e6);
    let upmrs = solve_instance(&inst, ScenarioKind::Upmrs).unwrap();
    let upmr = solve_instance(&without_storage(inst), ScenarioKind::Upmr).unwrap();
    assert!(upmrs.plan.storage.iter().all(|&s| s >= 0.0), "{:?}", upmrs.plan.storage);
    let gap = (upmrs.cost.profit - upmr.cost.profit).abs();
    assert!(gap <= 1e-6 * upmr.cost.profit.abs(), "{gap}");
}

#[test]
fn solving_is_deterministic() {
    let inst = day_instance(0.05);
    let a = solve_instance(&inst, ScenarioKind::Upmrs).unwrap();
    let b = solve_instance(&inst, ScenarioKind::Upmrs).unwrap();
    assert_eq!(a.plan, b.plan);
    assert_eq!(a.log, b.log);
}

#[test]
fn rounding_only_adds_machines() {
    let inst = day_instance(0.05);
    let r = solve_instance(&inst, ScenarioKind::Upmr).unwrap();
    let (rounded, cost) = round_machines(&inst, &r.plan).unwrap();
    let relaxed = r.plan.machines(inst.params.m0);
    for (a, b) in rounded.machines(inst.params.m0).iter().zip(&relaxed) {
        assert!(a >= &(b - 1e-9) && a.fract() == 0.0);
    }
    assert!(cost.profit <= r.cost.profit + 1e-9);
}

fn solution(len: usize, set: &[(usize, f64)]) -> LpSolution {
    let mut values = vec![0.0; len];
    for &(i, v) in set {
        values[i] = v;
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: 0.0,
        values,
        iterations: 0,
    }
}

fn storage_subproblem() -> (Subdomain, Instance) {
    let mut inst = day_instance(0.05);
    inst.params.m0 = 0;
    let sub = Subdomain { lb: 0.5, ub: 1.0, d_lb: vec![0, 2, 2] };
    (sub, inst)
}

#[test]
fn extracting_from_an_all_zero_point() {
    let (sub, inst) = storage_subproblem();
    let built = build_subproblem(&sub, &inst, ScenarioKind::Upmrs).unwrap();
    let plan = extract_plan(&solution(built.lp.num_vars(), &[]), &built.layout).unwrap();
    let mut expected = SchedulePlan::idle(3, 24);
    expected.rho = 0.5;
    assert_eq!(plan, expected);
}

#[test]
fn extracting_net_storage_and_clipping_noise() {
    let (sub, inst) = storage_subproblem();
    let built = build_subproblem(&sub, &inst, ScenarioKind::Upmrs).unwrap();
    let s_in = built.layout.s_in.as_ref().unwrap();
    let s_out = built.layout.s_out.as_ref().unwrap();
    let m = &built.layout.machines;
    let sol = solution(
        built.lp.num_vars(),
        &[(s_in[2].0, 0.5), (s_out[4].0, 1e-12), (m[0].0, 1e-12), (m[1].0, 2.0)],
    );
    let plan = extract_plan(&sol, &built.layout).unwrap();
    assert_eq!(plan.storage[2], 0.5);
    assert_eq!(plan.storage[4], 0.0);
    assert_eq!(plan.m_on[0], 0.0);
    assert_eq!(plan.m_on[1], 2.0);
}

#[test]
fn extracting_from_a_non_optimal_point_fails() {
    let (sub, inst) = storage_subproblem();
    let built = build_subproblem(&sub, &inst, ScenarioKind::Upmrs).unwrap();
    let mut sol = solution(built.lp.num_vars(), &[]);
    sol.status = LpStatus::Infeasible;
    assert!(matches!(extract_plan(&sol, &built.layout), Err(PlannerError::NotOptimal(LpStatus::Infeasible))));
}

#[test]
fn deadline_count_must_match_the_classes() {
    let (mut sub, inst) = storage_subproblem();
    sub.d_lb.pop();
    assert!(build_subproblem(&sub, &inst, ScenarioKind::Upmr).is_err());
}
