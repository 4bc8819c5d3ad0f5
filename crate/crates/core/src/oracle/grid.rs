//! Brute-force search over a grid of reward factors. Each grid point gets
//! its deadlines from the tenant's closed-form response and an LP written
//! directly in cumulative-sum form, independent of the planner's model.

use std::collections::HashMap;

use upmr_lp::{solve_lp, Comparator, LinearProgram, LpStatus, VarId};

use super::OracleError;
use crate::model::{cost_breakdown, deadline_slots, Instance, Kappa, ScenarioKind, SchedulePlan};

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub rho: f64,
    pub profit: f64,
    /// Grid points evaluated.
    pub points: usize,
    /// Distinct deadline vectors, one LP each.
    pub lps: usize,
}

/// Reward factors at which some class's integer deadline steps up.
pub fn breakpoints(kappas: &[Kappa], d_max: u32) -> Vec<f64> {
    let mut out: Vec<f64> = kappas
        .iter()
        .filter_map(|k| k.value().filter(|&v| v > 0.0))
        .flat_map(|k| (1..=d_max).map(move |d| (f64::from(d) + 1.0) * k))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

/// A tenth of the smallest gap between consecutive breakpoints (including
/// the gap from 0 to the first one).
pub fn default_grid_step(kappas: &[Kappa], d_max: u32) -> f64 {
    let bps = breakpoints(kappas, d_max);
    let mut prev = 0.0;
    let mut gap = f64::INFINITY;
    for &b in &bps {
        gap = gap.min(b - prev);
        prev = b;
    }
    if gap.is_finite() {
        gap / 10.0
    } else {
        1.0
    }
}

struct Columns {
    m_on: Vec<VarId>,
    m_of: Vec<VarId>,
    storage: Option<Vec<VarId>>,
    phi: Vec<Vec<VarId>>,
    eta: Vec<Vec<VarId>>,
}

/// Maximizes minus (wear + bill) for fixed integer deadlines.
fn inner_lp(instance: &Instance, kind: ScenarioKind, caps: &[u32]) -> (LinearProgram, Columns) {
    let tr = &instance.trace;
    let p = &instance.params;
    let st = &instance.storage;
    let pricing = &instance.pricing;
    let tau = tr.tau();
    let t_len = tr.slot_hours();
    let n = p.n();
    let e = p.e_pue;
    let m0 = f64::from(p.m0);
    let dyn_kwh = e * t_len * (p.p_peak_kw - p.p_idle_kw) / n;
    let defer = kind.uses_reward();
    let store = kind.uses_storage() && st.is_present();

    let mut lp = LinearProgram::new();
    let m_on: Vec<VarId> = (0..tau).map(|t| lp.add_var(format!("on{t}"), 0.0, f64::INFINITY, -p.w_on_usd)).collect();
    let m_of: Vec<VarId> = (0..tau).map(|t| lp.add_var(format!("off{t}"), 0.0, f64::INFINITY, -p.w_of_usd)).collect();
    let mut phi = Vec::new();
    let mut eta = Vec::new();
    for i in 0..tr.classes().len() {
        let total = tr.class_total(i);
        let hi = |x: f64| if defer { x } else { 0.0 };
        phi.push((0..tau).map(|t| lp.add_var(format!("phi{i}_{t}"), 0.0, hi(tr.requests(i, t)), 0.0)).collect::<Vec<_>>());
        eta.push((0..tau).map(|t| lp.add_var(format!("eta{i}_{t}"), 0.0, hi(total), 0.0)).collect::<Vec<_>>());
    }
    let storage = store.then(|| {
        let s: Vec<VarId> = (0..tau)
            .map(|t| lp.add_var(format!("s{t}"), -st.discharge_kw * t_len, st.charge_kw * t_len, 0.0))
            .collect();
        for t in 0..tau {
            let w = lp.add_var(format!("wear{t}"), 0.0, f64::INFINITY, -st.wear_usd_per_kwh);
            lp.add_row(format!("wear{t}"), [(w, 1.0), (s[t], 1.0)], Comparator::Ge, 0.0);
            let cum: Vec<(VarId, f64)> = s[..=t].iter().map(|&v| (v, 1.0)).collect();
            lp.add_row(format!("soc_lo{t}"), cum.clone(), Comparator::Ge, -st.initial_kwh);
            lp.add_row(format!("soc_hi{t}"), cum, Comparator::Le, st.capacity_kwh - st.initial_kwh);
        }
        s
    });

    let switching = |t: usize| -> Vec<(VarId, f64)> {
        (0..=t).flat_map(|k| [(m_on[k], 1.0), (m_of[k], -1.0)]).collect()
    };
    let net = |t: usize| -> Vec<(VarId, f64)> {
        (0..phi.len()).flat_map(|i| [(phi[i][t], 1.0), (eta[i][t], -1.0)]).collect()
    };

    let mut draws: Vec<Option<VarId>> = vec![None; tau];
    for t in 0..tau {
        lp.add_row(format!("m_nonneg{t}"), switching(t), Comparator::Ge, -m0);
        let mut cap = switching(t);
        cap.extend(net(t).into_iter().map(|(v, a)| (v, a / n)));
        lp.add_row(format!("cap{t}"), cap, Comparator::Ge, tr.slot_total(t) / n - m0);

        if pricing.alpha()[t] > 0.0 || pricing.in_any_window(t) {
            let g = lp.add_var(format!("g{t}"), 0.0, f64::INFINITY, -pricing.alpha()[t]);
            let mut row = vec![(g, 1.0), (m_on[t], -e * p.o_on_kwh), (m_of[t], -e * p.o_of_kwh)];
            row.extend(switching(t).into_iter().map(|(v, a)| (v, -a * e * t_len * p.p_idle_kw)));
            row.extend(net(t).into_iter().map(|(v, a)| (v, a * dyn_kwh)));
            if let Some(s) = &storage {
                row.push((s[t], -1.0));
            }
            let rhs = e * t_len * p.p_idle_kw * m0 + dyn_kwh * tr.slot_total(t);
            lp.add_row(format!("draw{t}"), row, Comparator::Ge, rhs);
            draws[t] = Some(g);
        }
    }
    for (j, dc) in pricing.demand_charges().iter().enumerate() {
        let q = lp.add_var(format!("q{j}"), 0.0, f64::INFINITY, -dc.beta / t_len);
        for &t in &dc.slots {
            lp.add_row(format!("q{j}_{t}"), [(q, 1.0), (draws[t].unwrap(), -1.0)], Comparator::Ge, 0.0);
        }
    }

    for (i, &d) in caps.iter().enumerate() {
        let lambda: Vec<f64> = (0..tau).map(|t| tr.requests(i, t)).collect();
        for t in 0..tau {
            let backlog: Vec<(VarId, f64)> = (0..=t).flat_map(|k| [(eta[i][k], 1.0), (phi[i][k], -1.0)]).collect();
            lp.add_row(format!("backlog{i}_{t}"), backlog, Comparator::Le, 0.0);
            let h = (t + d as usize).min(tau - 1);
            let served: Vec<(VarId, f64)> = (0..=h).flat_map(|k| [(eta[i][k], 1.0), (phi[i][k], -1.0)]).collect();
            let arrived: f64 = lambda[..=t].iter().sum();
            let window: f64 = lambda[..=h].iter().sum();
            lp.add_row(format!("deadline{i}_{t}"), served, Comparator::Ge, arrived - window);
        }
        let all: Vec<(VarId, f64)> = (0..tau).flat_map(|k| [(phi[i][k], 1.0), (eta[i][k], -1.0)]).collect();
        lp.add_row(format!("terminal{i}"), all, Comparator::Eq, 0.0);
    }

    (lp, Columns { m_on, m_of, storage, phi, eta })
}

fn clip(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        0.0
    } else {
        x
    }
}

/// Best plan for fixed deadlines, with `rho` attached.
pub fn solve_fixed_deadlines(
    instance: &Instance,
    kind: ScenarioKind,
    caps: &[u32],
    rho: f64,
) -> Result<SchedulePlan, OracleError> {
    let (lp, cols) = inner_lp(instance, kind, caps);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(OracleError::Lp(format!("inner LP is {:?}", sol.status)));
    }
    let x = |v: VarId| clip(sol.values[v.0]);
    let tau = instance.trace.tau();
    let mut plan = SchedulePlan::idle(cols.phi.len(), tau);
    plan.rho = rho;
    for t in 0..tau {
        plan.m_on[t] = x(cols.m_on[t]);
        plan.m_of[t] = x(cols.m_of[t]);
        if let Some(s) = &cols.storage {
            plan.storage[t] = x(s[t]);
        }
        for i in 0..cols.phi.len() {
            plan.phi[i][t] = x(cols.phi[i][t]);
            plan.eta[i][t] = x(cols.eta[i][t]);
        }
    }
    Ok(plan)
}

/// Evaluates every ρ in `{k·step} ∪ breakpoints` up to one step past the
/// last breakpoint and returns the most profitable, lowest ρ on ties.
pub fn rho_grid_oracle(instance: &Instance, kind: ScenarioKind, step: f64) -> Result<GridOptimum, OracleError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(OracleError::InvalidInput(format!("grid step must be positive, got {step}")));
    }
    let classes = instance.trace.classes();
    let d_max = instance.policy.d_max;
    let kappas: Vec<Kappa> = classes.iter().map(|c| c.kappa).collect();
    let mut grid = vec![0.0];
    if kind.uses_reward() {
        let bps = breakpoints(&kappas, d_max);
        let end = bps.last().copied().unwrap_or(0.0) + step;
        let count = (end / step).floor() as usize;
        if count > 10_000_000 {
            return Err(OracleError::TooLarge(format!("{count} grid points")));
        }
        grid.extend((1..=count).map(|k| k as f64 * step));
        grid.extend(bps);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }

    let mut cache: HashMap<Vec<u32>, SchedulePlan> = HashMap::new();
    let mut best: Option<(f64, f64)> = None;
    for &rho in &grid {
        let caps: Vec<u32> = if kind.uses_reward() {
            kappas.iter().map(|&k| deadline_slots(k, rho, d_max)).collect::<Result<_, _>>()?
        } else {
            vec![0; classes.len()]
        };
        if !cache.contains_key(&caps) {
            let plan = solve_fixed_deadlines(instance, kind, &caps, rho)?;
            cache.insert(caps.clone(), plan);
        }
        let mut plan = cache[&caps].clone();
        plan.rho = rho;
        let cost = cost_breakdown(
            &instance.trace,
            &instance.pricing,
            &instance.params,
            &instance.storage,
            &instance.policy,
            &plan,
        )?;
        if best.is_none_or(|(_, p)| cost.profit > p) {
            best = Some((rho, cost.profit));
        }
    }
    let (rho, profit) = best.expect("grid contains 0");
    Ok(GridOptimum {
        rho,
        profit,
        points: grid.len(),
        lps: cache.len(),
    })
}
