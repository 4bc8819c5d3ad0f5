//! Seeded instance families and the suite runners shared by the CLI and the
//! acceptance tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use upmr_lp::{solve_lp, LpStatus};

use super::{
    check_theorem1, check_theorem2, default_grid_step, rho_grid_oracle, tiny_instance_oracle,
    OracleError, OracleReport,
};
use crate::model::{
    cost_breakdown, reward_rate, DataCenterParams, DemandCharge, Instance, Kappa, PricingSchedule,
    RewardPolicy, ScenarioKind, StorageParams, TenantClass, WorkloadTrace,
};
use crate::planner::{build_subproblem, enumerate_subdomains, extract_plan, solve_instance};

/// Tolerance for every optimum comparison in the suites.
pub const PROFIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSet {
    pub name: String,
    pub classes: Vec<TenantClass>,
    pub d_max: u32,
}

/// The case-study classes (κ = 0.1, 0.11 and an inelastic one, D_max = 24)
/// followed by `random` seeded sets of 1 to 4 classes.
pub fn kappa_sets(seed: u64, random: usize) -> Vec<KappaSet> {
    let mut sets = vec![KappaSet {
        name: "case-study".into(),
        classes: vec![
            TenantClass::new(1, Kappa::Inelastic),
            TenantClass::new(2, Kappa::Finite(0.1)),
            TenantClass::new(3, Kappa::Finite(0.11)),
        ],
        d_max: 24,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        let count = rng.gen_range(1..=4);
        let classes = (0..count)
            .map(|i| {
                let kappa = match rng.gen_range(0..10) {
                    0 => Kappa::Inelastic,
                    1 => Kappa::Finite(0.0),
                    _ => Kappa::Finite((rng.gen_range(0.005..2.0f64) * 1000.0).round() / 1000.0),
                };
                TenantClass::new(i + 1, kappa)
            })
            .collect();
        sets.push(KappaSet {
            name: format!("random{k:02}"),
            classes,
            d_max: rng.gen_range(1..=30),
        });
    }
    sets
}

fn prefixed(set: &str, reports: Vec<OracleReport>) -> Vec<OracleReport> {
    reports
        .into_iter()
        .map(|mut r| {
            r.case = format!("{set}/{}", r.case);
            r
        })
        .collect()
}

pub fn run_theorem1_suite(sets: &[KappaSet], samples: usize) -> Vec<OracleReport> {
    sets.iter()
        .flat_map(|s| prefixed(&s.name, check_theorem1(&s.classes, s.d_max, samples)))
        .collect()
}

pub fn run_theorem2_suite(sets: &[KappaSet]) -> Vec<OracleReport> {
    sets.iter()
        .flat_map(|s| prefixed(&s.name, check_theorem2(&s.classes, s.d_max)))
        .collect()
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, options: &[T]) -> T {
    *options.choose(rng).expect("non-empty")
}

/// Random tiny UPMR instances for the grid oracle: up to 4 slots, 1 or 2
/// classes, time-varying prices and sometimes a demand charge.
pub fn grid_suite_instances(seed: u64, count: usize) -> Vec<(String, Instance)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let tau = rng.gen_range(2..=4);
            let nclasses = rng.gen_range(1..=2);
            let classes: Vec<TenantClass> = (0..nclasses)
                .map(|i| {
                    let kappa = if i == 1 && rng.gen_bool(0.3) {
                        Kappa::Inelastic
                    } else {
                        Kappa::Finite(f64::from(rng.gen_range(1..=20u32)) * 0.0005)
                    };
                    TenantClass::new(i as u32 + 1, kappa)
                })
                .collect();
            let lambda: Vec<Vec<u64>> = (0..nclasses)
                .map(|_| (0..tau).map(|_| rng.gen_range(0..=40)).collect())
                .collect();
            let alpha: Vec<f64> = (0..tau).map(|_| (rng.gen_range(0.01..0.2f64) * 1e4).round() / 1e4).collect();
            let mut charges = Vec::new();
            if rng.gen_bool(0.4) {
                let a = rng.gen_range(0..tau);
                let b = rng.gen_range(a..tau);
                charges.push(DemandCharge {
                    beta: (rng.gen_range(0.5..10.0f64) * 100.0).round() / 100.0,
                    slots: (a..=b).collect(),
                });
            }
            let instance = Instance {
                trace: WorkloadTrace::new(1.0, classes, lambda).expect("generated trace is valid"),
                pricing: PricingSchedule::new(alpha, charges).expect("generated tariff is valid"),
                params: DataCenterParams {
                    n_per_machine: 10,
                    e_pue: pick(&mut rng, &[1.0, 1.2, 1.5]),
                    p_idle_kw: 0.1,
                    p_peak_kw: 0.2,
                    o_on_kwh: pick(&mut rng, &[0.0, 0.01, 0.02]),
                    o_of_kwh: pick(&mut rng, &[0.0, 0.01]),
                    w_on_usd: pick(&mut rng, &[0.0, 0.001, 0.003]),
                    w_of_usd: pick(&mut rng, &[0.0, 0.002]),
                    m0: rng.gen_range(0..=3),
                },
                storage: StorageParams::none(),
                policy: RewardPolicy {
                    delta: 1.0,
                    psi: 10.0,
                    d_max: rng.gen_range(1..=3),
                    rho: 0.0,
                },
            };
            (format!("grid{k:02}"), instance)
        })
        .collect()
}

/// Planner (UPMR) against [`rho_grid_oracle`] at the default step.
pub fn run_grid_suite(instances: &[(String, Instance)]) -> Result<Vec<OracleReport>, OracleError> {
    instances
        .par_iter()
        .map(|(name, inst)| {
            let kappas: Vec<Kappa> = inst.trace.classes().iter().map(|c| c.kappa).collect();
            let step = default_grid_step(&kappas, inst.policy.d_max);
            let oracle = rho_grid_oracle(inst, ScenarioKind::Upmr, step)?;
            let planned = solve_instance(inst, ScenarioKind::Upmr)?;
            Ok(OracleReport::compare(format!("grid/{name}"), oracle.profit, planned.cost.profit, PROFIT_TOL)
                .with_note(format!("oracle rho {}, planner rho {}", oracle.rho, planned.rho)))
        })
        .collect()
}

/// Random tiny instances aligned with the enumeration grid: loads in
/// multiples of N = Ψ = 10 requests, and every energy quantity (a loaded
/// machine, a switch-on, storage size and rates) a multiple of 0.2 KWh so
/// that the LP optimum is a grid point. Storage on every other instance.
pub fn tiny_suite_instances(seed: u64, count: usize) -> Vec<(String, Instance, ScenarioKind)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let with_storage = k % 2 == 1;
            let tau = if with_storage { 3 } else { rng.gen_range(2..=4) };
            let mut classes = vec![TenantClass::new(1, Kappa::Finite(f64::from(rng.gen_range(1..=10u32)) * 0.001))];
            let mut lambda: Vec<Vec<u64>> = vec![(0..tau).map(|_| 10 * rng.gen_range(0..=2)).collect()];
            if rng.gen_bool(0.5) {
                classes.push(TenantClass::new(2, Kappa::Inelastic));
                lambda.push((0..tau).map(|_| 10 * rng.gen_range(0..=1)).collect());
            }
            while lambda.iter().flatten().sum::<u64>() > 60 {
                let t = rng.gen_range(0..tau);
                lambda[0][t] = lambda[0][t].saturating_sub(10);
            }
            let alpha: Vec<f64> = (0..tau).map(|_| f64::from(rng.gen_range(1..=20u32)) * 0.01).collect();
            let mut charges = Vec::new();
            if rng.gen_bool(0.3) {
                charges.push(DemandCharge {
                    beta: 1.0,
                    slots: vec![rng.gen_range(0..tau)],
                });
            }
            let storage = if with_storage {
                StorageParams {
                    capacity_kwh: pick(&mut rng, &[0.2, 0.4]),
                    charge_kw: 0.2,
                    discharge_kw: 0.2,
                    wear_usd_per_kwh: pick(&mut rng, &[0.005, 0.02]),
                    initial_kwh: pick(&mut rng, &[0.0, 0.2]),
                }
            } else {
                StorageParams::none()
            };
            let instance = Instance {
                trace: WorkloadTrace::new(1.0, classes, lambda).expect("generated trace is valid"),
                pricing: PricingSchedule::new(alpha, charges).expect("generated tariff is valid"),
                params: DataCenterParams {
                    n_per_machine: 10,
                    e_pue: 1.0,
                    p_idle_kw: 0.1,
                    p_peak_kw: 0.2,
                    o_on_kwh: 0.0,
                    o_of_kwh: 0.0,
                    w_on_usd: 0.0,
                    w_of_usd: 0.0,
                    m0: rng.gen_range(0..=2),
                },
                storage,
                policy: RewardPolicy {
                    delta: 1.0,
                    psi: 10.0,
                    d_max: rng.gen_range(1..=2),
                    rho: 0.0,
                },
            };
            let kind = if with_storage { ScenarioKind::Upmrs } else { ScenarioKind::Upmr };
            (format!("tiny{k:02}"), instance, kind)
        })
        .collect()
}

/// Every sub-problem LP of every instance against [`tiny_instance_oracle`]
/// at the same reward factor. The LP is a relaxation of the enumeration
/// grid, so it may only exceed the oracle, and by at most the tolerance.
pub fn run_tiny_suite(instances: &[(String, Instance, ScenarioKind)]) -> Result<Vec<OracleReport>, OracleError> {
    let jobs: Vec<(String, &Instance, ScenarioKind, crate::planner::Subdomain)> = instances
        .iter()
        .flat_map(|(name, inst, kind)| {
            enumerate_subdomains(inst.trace.classes(), inst.policy.d_max)
                .into_iter()
                .enumerate()
                .map(move |(j, sub)| (format!("tiny/{name}/sub{j}"), inst, *kind, sub))
        })
        .collect();
    jobs.par_iter()
        .map(|(case, inst, kind, sub)| {
            let mut at_lb = (*inst).clone();
            at_lb.policy.rho = sub.lb;
            let oracle = tiny_instance_oracle(&at_lb, *kind)?;

            let built = build_subproblem(sub, inst, *kind)?;
            let sol = solve_lp(&built.lp)?;
            if sol.status != LpStatus::Optimal {
                return Err(OracleError::Lp(format!("{case}: sub-problem is {:?}", sol.status)));
            }
            let tr = &inst.trace;
            let p = &inst.policy;
            let revenue = p.delta * tr.total_requests() / p.psi;
            let mut reward = 0.0;
            for (i, c) in tr.classes().iter().enumerate() {
                reward += reward_rate(c.kappa, sub.lb, p.d_max)? * tr.class_total(i) / p.psi;
            }
            let lp_profit = sol.objective + revenue - reward;
            let plan = extract_plan(&sol, &built.layout)?;
            let priced = cost_breakdown(tr, &inst.pricing, &inst.params, &inst.storage, p, &plan)?;

            let mut report = OracleReport::compare(case.clone(), oracle.profit, lp_profit, PROFIT_TOL)
                .with_note(format!("{} plans priced; extracted plan profit {}", oracle.evaluated, priced.profit));
            if (priced.profit - lp_profit).abs() > PROFIT_TOL * lp_profit.abs().max(1e-6) {
                report.pass = false;
            }
            Ok(report)
        })
        .collect()
}
