//! The nine acceptance criteria, run in order with one pass/fail line each.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use upmr_core::model::{check_feasibility, derive_power_series, CostBreakdown, Instance, ScenarioKind, SchedulePlan};
use upmr_core::oracle::{
    check_tenant_response, grid_suite_instances, kappa_sets, run_grid_suite, run_theorem1_suite,
    run_theorem2_suite, run_tiny_suite, tiny_suite_instances, OracleReport,
};
use upmr_core::planner::{build_subproblem, extract_plan, scenario_subdomains, solve_instance, Subdomain};
use upmr_core::trace_io::{load_scenario, TariffOptions};
use upmr_lp::{solve_lp, LpStatus};

const SEED: u64 = 1;
const NESTING_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn suite_outcome(reports: &[OracleReport], elapsed: Duration, limit: Option<Duration>) -> Outcome {
    let failed: Vec<&OracleReport> = reports.iter().filter(|r| !r.pass).collect();
    let worst = reports.iter().map(|r| r.rel_gap).fold(0.0, f64::max);
    let mut detail = format!(
        "{} cases, {} failed, worst gap {worst:.2e}, {elapsed:.1?}",
        reports.len(),
        failed.len()
    );
    if let Some(limit) = limit {
        detail += &format!(" (limit {limit:?})");
    }
    if let Some(r) = failed.first() {
        detail += &format!("; first failure {} {}", r.case, r.note.as_deref().unwrap_or(""));
    }
    Outcome {
        pass: failed.is_empty() && !reports.is_empty() && limit.is_none_or(|l| elapsed < l),
        detail,
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

/// A sub-problem whose plan criterion 8 audits.
struct Audit {
    label: String,
    instance: Instance,
    kind: ScenarioKind,
    subdomain: Subdomain,
    /// The plan the planner returned for this sub-problem, if it won.
    expected: Option<SchedulePlan>,
}

/// Re-solves one sub-problem and lists every problem found in its plan.
fn audit(a: &Audit) -> Vec<String> {
    let inst = &a.instance;
    let mut problems = Vec::new();
    let built = match build_subproblem(&a.subdomain, inst, a.kind) {
        Ok(b) => b,
        Err(e) => return vec![format!("{}: {e}", a.label)],
    };
    let sol = match solve_lp(&built.lp) {
        Ok(s) if s.status == LpStatus::Optimal => s,
        Ok(s) => return vec![format!("{}: {:?}", a.label, s.status)],
        Err(e) => return vec![format!("{}: {e}", a.label)],
    };
    let plan = extract_plan(&sol, &built.layout).expect("optimal solution");
    if a.expected.as_ref().is_some_and(|p| *p != plan) {
        problems.push(format!("{}: re-solved plan differs from the planner's", a.label));
    }
    let violations =
        check_feasibility(&inst.trace, &inst.params, &inst.storage, &inst.policy, &a.subdomain.d_lb, &plan)
            .expect("dimensions match");
    problems.extend(violations.iter().map(|v| format!("{}: {v}", a.label)));

    let series = derive_power_series(&inst.trace, &inst.params, &inst.storage, &plan).expect("dimensions match");
    let alpha = inst.pricing.alpha();
    for (t, g) in built.layout.grid.iter().enumerate() {
        if let Some(g) = g {
            let g = sol.values[g.0];
            if alpha[t] > 0.0 && (g - series.grid_kwh[t]).abs() > 1e-6 * series.grid_kwh[t].max(1.0) {
                problems.push(format!("{}: slot {t} grid epigraph {g} vs draw {}", a.label, series.grid_kwh[t]));
            }
        }
    }
    for (dc, q) in inst.pricing.demand_charges().iter().zip(&built.layout.peak) {
        let peak = dc.slots.iter().map(|&t| series.grid_kwh[t]).fold(0.0, f64::max);
        let q = sol.values[q.0];
        if dc.beta > 0.0 && (q - peak).abs() > 1e-6 * peak.max(1.0) {
            problems.push(format!("{}: peak epigraph {q} vs peak draw {peak}", a.label));
        }
    }
    if let (Some(s_in), Some(s_out)) = (&built.layout.s_in, &built.layout.s_out) {
        if inst.storage.wear_usd_per_kwh > 0.0 {
            for (t, (i, o)) in s_in.iter().zip(s_out).enumerate() {
                if sol.values[i.0] > 1e-7 && sol.values[o.0] > 1e-7 {
                    problems.push(format!("{}: slot {t} charges and discharges at once", a.label));
                }
            }
        }
    }
    problems
}

fn bundled(tariff: &str, kind: ScenarioKind) -> Instance {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(tariff)
        .join(format!("{}.conf", kind.as_str().to_lowercase()));
    let (config, instance) = load_scenario(&path, TariffOptions::default()).expect("bundled config loads");
    assert_eq!(config.kind, kind);
    instance
}

struct Bundle {
    tariff: &'static str,
    costs: Vec<(ScenarioKind, CostBreakdown)>,
    elapsed: Duration,
}

impl Bundle {
    fn cost(&self, kind: ScenarioKind) -> CostBreakdown {
        self.costs.iter().find(|(k, _)| *k == kind).expect("all four solved").1
    }

    fn bill_reduction(&self) -> f64 {
        let up = self.cost(ScenarioKind::Up).bill;
        (up - self.cost(ScenarioKind::Upmr).bill) / up
    }
}

fn solve_bundle(tariff: &'static str, audits: &mut Vec<Audit>) -> Bundle {
    let start = Instant::now();
    let mut costs = Vec::new();
    for kind in ScenarioKind::ALL {
        let instance = bundled(tariff, kind);
        let r = solve_instance(&instance, kind).expect("bundled scenario solves");
        costs.push((kind, r.cost));
        audits.push(Audit {
            label: format!("{tariff}/{kind}"),
            instance,
            kind,
            subdomain: r.subdomain,
            expected: Some(r.plan),
        });
    }
    Bundle {
        tariff,
        costs,
        elapsed: start.elapsed(),
    }
}

fn nesting(b: &Bundle) -> Result<String, String> {
    use ScenarioKind::*;
    let p = |k| b.cost(k).profit;
    let holds = |hi: f64, lo: f64| hi >= lo - NESTING_TOL * lo.abs();
    let text = format!(
        "{}: UP {:.4}, UPS {:.4}, UPMR {:.4}, UPMRS {:.4} in {:.1?}",
        b.tariff,
        p(Up),
        p(Ups),
        p(Upmr),
        p(Upmrs),
        b.elapsed
    );
    if holds(p(Upmrs), p(Upmr)) && holds(p(Upmr), p(Up)) && holds(p(Ups), p(Up)) {
        Ok(text)
    } else {
        Err(text)
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut audits: Vec<Audit> = Vec::new();

    let grid_instances = grid_suite_instances(SEED, 25);
    let (reports, elapsed) = timed(|| run_grid_suite(&grid_instances).expect("grid suite runs"));
    results.push((1, "planner matches the reward-factor grid oracle", suite_outcome(&reports, elapsed, Some(Duration::from_secs(60)))));
    for (name, inst) in &grid_instances {
        let r = solve_instance(inst, ScenarioKind::Upmr).expect("grid instance solves");
        audits.push(Audit {
            label: format!("grid/{name}"),
            instance: inst.clone(),
            kind: ScenarioKind::Upmr,
            subdomain: r.subdomain,
            expected: Some(r.plan),
        });
    }

    let tiny_instances = tiny_suite_instances(SEED, 10);
    let (reports, elapsed) = timed(|| run_tiny_suite(&tiny_instances).expect("tiny suite runs"));
    results.push((2, "sub-problem LPs match exhaustive enumeration", suite_outcome(&reports, elapsed, Some(Duration::from_secs(300)))));
    for (name, inst, kind) in &tiny_instances {
        for (j, sub) in scenario_subdomains(inst, *kind).into_iter().enumerate() {
            audits.push(Audit {
                label: format!("tiny/{name}/sub{j}"),
                instance: inst.clone(),
                kind: *kind,
                subdomain: sub,
                expected: None,
            });
        }
    }

    let sets = kappa_sets(SEED, 20);
    let (reports, elapsed) = timed(|| run_theorem1_suite(&sets, 100));
    results.push((3, "deadline floors are constant on every sub-domain", suite_outcome(&reports, elapsed, None)));
    let (reports, elapsed) = timed(|| run_theorem2_suite(&sets));
    results.push((4, "reward is smallest at each sub-domain's lower bound", suite_outcome(&reports, elapsed, None)));

    let peak = solve_bundle("peak", &mut audits);
    let tdp = solve_bundle("tdp", &mut audits);
    let limit = Duration::from_secs(600);
    let (a, b) = (nesting(&peak), nesting(&tdp));
    let slow = peak.elapsed >= limit || tdp.elapsed >= limit;
    let detail = format!("{}; {}", a.as_ref().unwrap_or_else(|e| e), b.as_ref().unwrap_or_else(|e| e));
    results.push((5, "scenario profits nest on the bundled week", Outcome { pass: a.is_ok() && b.is_ok() && !slow, detail }));

    let (up, upmr) = (peak.cost(ScenarioKind::Up), peak.cost(ScenarioKind::Upmr));
    let reduction = peak.bill_reduction();
    results.push((
        6,
        "reward cuts the bill under peak pricing",
        Outcome {
            pass: reduction >= 0.02 && upmr.profit > up.profit,
            detail: format!(
                "bill {:.4} -> {:.4} ({:.2}% lower), profit {:.4} -> {:.4}",
                up.bill,
                upmr.bill,
                100.0 * reduction,
                up.profit,
                upmr.profit
            ),
        },
    ));

    let tdp_reduction = tdp.bill_reduction();
    results.push((
        7,
        "time-dependent prices give a smaller bill cut",
        Outcome {
            pass: tdp_reduction < reduction,
            detail: format!("{:.2}% under TDP vs {:.2}% under peak pricing", 100.0 * tdp_reduction, 100.0 * reduction),
        },
    ));

    let (problems, elapsed) = timed(|| audits.iter().flat_map(audit).collect::<Vec<_>>());
    results.push((
        8,
        "every produced plan is feasible with tight epigraphs",
        Outcome {
            pass: problems.is_empty(),
            detail: format!(
                "{} plans audited, {} problems in {elapsed:.1?}{}",
                audits.len(),
                problems.len(),
                problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
            ),
        },
    ));

    let (reports, elapsed) = timed(|| check_tenant_response(1000, SEED));
    results.push((9, "tenant best response is optimal and monotone", suite_outcome(&reports, elapsed, Some(Duration::from_secs(10)))));

    let mut all = true;
    for (n, name, o) in &results {
        all &= o.pass;
        println!("criterion {n} {}: {name} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
