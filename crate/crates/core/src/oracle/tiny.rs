//! Exhaustive search over every plan on a coarse grid: deferral in steps of
//! Ψ requests, whole machines, storage levels in steps of 0.1 KWh. Each
//! candidate is checked and priced by the model alone.

use super::OracleError;
use crate::model::{
    check_feasibility, cost_breakdown, deadline_slots, Instance, ScenarioKind, SchedulePlan,
};

/// Largest number of candidate plans the oracle will enumerate.
pub const TINY_STATE_LIMIT: u64 = 10_000_000;
const SOC_STEP: f64 = 0.1;
const MAX_SLOTS: usize = 4;
const MAX_CLASSES: usize = 2;
const MAX_REQUESTS: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TinyOptimum {
    pub profit: f64,
    pub plan: SchedulePlan,
    /// Candidate plans priced (after the machine-capacity prefilter).
    pub evaluated: u64,
}

/// Net deferral `φ − η` per slot for one class: multiples of `unit` that
/// never serve more than is waiting and leave nothing at the end.
fn deferral_paths(lambda: &[f64], unit: f64) -> Vec<Vec<f64>> {
    fn walk(lambda: &[f64], unit: f64, t: usize, backlog: f64, path: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if t == lambda.len() {
            if backlog.abs() < 1e-9 {
                out.push(path.clone());
            }
            return;
        }
        let lo = -(backlog / unit).floor() as i64;
        let hi = (lambda[t] / unit + 1e-9).floor() as i64;
        for k in lo..=hi {
            let x = k as f64 * unit;
            path.push(x);
            walk(lambda, unit, t + 1, backlog + x, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(lambda, unit, 0, 0.0, &mut Vec::new(), &mut out);
    out
}

fn cartesian<T: Clone>(choices: &[Vec<T>], len: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                choices.iter().map(move |c| {
                    let mut q = p.clone();
                    q.extend(c.iter().cloned());
                    q
                })
            })
            .collect();
    }
    out
}

/// Best profit at the instance's own `policy.rho`, by enumeration.
///
/// Refuses instances with more than 4 slots, 2 classes or 60 requests, or
/// whose slot totals are not multiples of the per-machine capacity.
pub fn tiny_instance_oracle(instance: &Instance, kind: ScenarioKind) -> Result<TinyOptimum, OracleError> {
    instance.validate()?;
    let tr = &instance.trace;
    let p = &instance.params;
    let st = &instance.storage;
    let policy = &instance.policy;
    let tau = tr.tau();
    let n = p.n();
    let nclasses = tr.classes().len();
    if tau > MAX_SLOTS || nclasses > MAX_CLASSES || tr.total_requests() > MAX_REQUESTS {
        return Err(OracleError::TooLarge(format!(
            "{tau} slots, {nclasses} classes, {} requests",
            tr.total_requests()
        )));
    }
    if let Some(t) = (0..tau).find(|&t| tr.slot_total(t) % n != 0.0) {
        return Err(OracleError::InvalidInput(format!(
            "slot {} load is not a multiple of {n}",
            t + 1
        )));
    }

    let rho = if kind.uses_reward() { policy.rho } else { 0.0 };
    let caps: Vec<u32> = if kind.uses_reward() {
        tr.classes()
            .iter()
            .map(|c| deadline_slots(c.kappa, rho, policy.d_max))
            .collect::<Result<_, _>>()?
    } else {
        vec![0; nclasses]
    };

    let per_class: Vec<Vec<Vec<f64>>> = (0..nclasses)
        .map(|i| {
            if caps[i] == 0 {
                vec![vec![0.0; tau]]
            } else {
                let lambda: Vec<f64> = (0..tau).map(|t| tr.requests(i, t)).collect();
                deferral_paths(&lambda, policy.psi)
            }
        })
        .collect();
    let mut deferrals: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for paths in &per_class {
        deferrals = deferrals
            .into_iter()
            .flat_map(|acc| {
                paths.iter().map(move |path| {
                    let mut next = acc.clone();
                    next.push(path.clone());
                    next
                })
            })
            .collect();
    }

    let most = tr.total_requests() / n;
    let m_top = (f64::from(p.m0).max(most)).ceil() as u32;
    let levels: Vec<Vec<u32>> = (0..=m_top).map(|m| vec![m]).collect();
    let machine_paths = cartesian(&levels, tau);

    let soc_paths: Vec<Vec<f64>> = if kind.uses_storage() && st.is_present() {
        let top = (st.capacity_kwh / SOC_STEP + 1e-9).floor() as usize;
        let grid: Vec<Vec<f64>> = (0..=top).map(|k| vec![k as f64 * SOC_STEP]).collect();
        cartesian(&grid, tau)
    } else {
        vec![Vec::new()]
    };

    let states = deferrals.len() as u64 * machine_paths.len() as u64 * soc_paths.len() as u64;
    if states > TINY_STATE_LIMIT {
        return Err(OracleError::TooLarge(format!("{states} candidate plans")));
    }

    let mut plan = SchedulePlan::idle(nclasses, tau);
    plan.rho = rho;
    let mut best: Option<(f64, SchedulePlan)> = None;
    let mut evaluated = 0;
    for defer in &deferrals {
        for (i, path) in defer.iter().enumerate() {
            for t in 0..tau {
                plan.phi[i][t] = path[t].max(0.0);
                plan.eta[i][t] = (-path[t]).max(0.0);
            }
        }
        let load: Vec<f64> = (0..tau)
            .map(|t| (0..nclasses).map(|i| plan.scheduled(tr, i, t)).sum())
            .collect();
        for machines in &machine_paths {
            if (0..tau).any(|t| f64::from(machines[t]) * n < load[t] - 1e-9) {
                continue;
            }
            let mut prev = f64::from(p.m0);
            for t in 0..tau {
                let m = f64::from(machines[t]);
                plan.m_on[t] = (m - prev).max(0.0);
                plan.m_of[t] = (prev - m).max(0.0);
                prev = m;
            }
            for soc in &soc_paths {
                let mut level = st.initial_kwh;
                for t in 0..soc.len() {
                    plan.storage[t] = soc[t] - level;
                    level = soc[t];
                }
                evaluated += 1;
                if !check_feasibility(tr, p, st, policy, &caps, &plan)?.is_empty() {
                    continue;
                }
                let cost = cost_breakdown(tr, &instance.pricing, p, st, policy, &plan)?;
                if best.as_ref().is_none_or(|(b, _)| cost.profit > *b) {
                    best = Some((cost.profit, plan.clone()));
                }
            }
        }
    }
    let (profit, plan) = best.ok_or_else(|| {
        OracleError::InvalidInput("no feasible plan on the grid; raise the machine or storage range".into())
    })?;
    Ok(TinyOptimum { profit, plan, evaluated })
}
