use upmr_lp::{Comparator, LinearProgram, LpSolution, LpStatus, VarId};

use super::{PlannerError, Subdomain};
use crate::model::{Instance, ScenarioKind, SchedulePlan};

/// Values with a smaller magnitude are reported as exact zeros.
pub const CLIP_TOL: f64 = 1e-9;

/// Where each decision lives in a built sub-problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemLayout {
    pub rho: f64,
    pub tau: usize,
    pub m0: f64,
    /// Machines on in each slot.
    pub machines: Vec<VarId>,
    pub m_on: Vec<VarId>,
    pub m_of: Vec<VarId>,
    /// Backlog of deferred-but-unserved requests after each slot, for every
    /// class allowed to defer.
    pub backlog: Vec<Option<Vec<VarId>>>,
    pub s_in: Option<Vec<VarId>>,
    pub s_out: Option<Vec<VarId>>,
    pub soc: Option<Vec<VarId>>,
    /// Grid draw, present in slots with a price on it.
    pub grid: Vec<Option<VarId>>,
    /// Peak draw of each demand charge.
    pub peak: Vec<VarId>,
}

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub lp: LinearProgram,
    pub layout: SubproblemLayout,
}

/// Per-slot cap on the backlog: requests that arrived in the last `d` slots
/// (including this one) may still be waiting; nothing may wait past the end.
pub(crate) fn backlog_caps(lambda: &[u64], d: u32) -> Vec<f64> {
    let tau = lambda.len();
    let d = d as usize;
    let mut window = 0.0;
    let mut caps = Vec::with_capacity(tau);
    for s in 0..tau {
        window += lambda[s] as f64;
        if s >= d {
            window -= lambda[s - d] as f64;
        }
        caps.push(if s + 1 == tau { 0.0 } else { window });
    }
    caps
}

/// Builds the linear program for one sub-domain with ρ fixed at its lower
/// bound. The objective is the negated cost (wear plus bill); revenue and
/// reward do not depend on the decisions and are added back by the caller.
pub fn build_subproblem(
    sub: &Subdomain,
    instance: &Instance,
    kind: ScenarioKind,
) -> Result<Subproblem, PlannerError> {
    instance.validate()?;
    let trace = &instance.trace;
    let pricing = &instance.pricing;
    let p = &instance.params;
    let st = &instance.storage;
    if let Some(t) = pricing.alpha().iter().position(|&a| a < 0.0) {
        return Err(PlannerError::NegativePrice { slot: t + 1 });
    }
    if sub.d_lb.len() != trace.classes().len() {
        return Err(PlannerError::Model(crate::model::ModelError::Dimension(format!(
            "sub-domain has {} deadlines for {} classes",
            sub.d_lb.len(),
            trace.classes().len()
        ))));
    }

    let tau = trace.tau();
    let t_len = trace.slot_hours();
    let n = p.n();
    let e = p.e_pue;
    // Energy per scheduled request beyond idle, KWh.
    let per_request = e * t_len * (p.p_peak_kw - p.p_idle_kw) / n;
    let mut lp = LinearProgram::new();

    let m_on: Vec<VarId> = (0..tau)
        .map(|t| lp.add_var(format!("m_on[{}]", t + 1), 0.0, f64::INFINITY, -p.w_on_usd))
        .collect();
    let m_of: Vec<VarId> = (0..tau)
        .map(|t| lp.add_var(format!("m_of[{}]", t + 1), 0.0, f64::INFINITY, -p.w_of_usd))
        .collect();
    let machines: Vec<VarId> = (0..tau)
        .map(|t| lp.add_var(format!("m[{}]", t + 1), 0.0, f64::INFINITY, 0.0))
        .collect();
    for t in 0..tau {
        let mut row = vec![(machines[t], 1.0), (m_on[t], -1.0), (m_of[t], 1.0)];
        let rhs = if t == 0 {
            f64::from(p.m0)
        } else {
            row.push((machines[t - 1], -1.0));
            0.0
        };
        lp.add_row(format!("switch[{}]", t + 1), row, Comparator::Eq, rhs);
    }

    let backlog: Vec<Option<Vec<VarId>>> = trace
        .classes()
        .iter()
        .zip(&sub.d_lb)
        .enumerate()
        .map(|(i, (class, &d))| {
            if !kind.uses_reward() || d == 0 {
                return None;
            }
            let caps = backlog_caps(&trace.lambda()[i], d);
            let vars: Vec<VarId> = caps
                .iter()
                .enumerate()
                .map(|(t, &cap)| lp.add_var(format!("B{}[{}]", class.id, t + 1), 0.0, cap, 0.0))
                .collect();
            for t in 0..tau {
                // B[t] − B[t−1] is what gets deferred net of what gets served.
                let mut row = vec![(vars[t], 1.0)];
                if t > 0 {
                    row.push((vars[t - 1], -1.0));
                }
                lp.add_row(
                    format!("defer{}[{}]", class.id, t + 1),
                    row,
                    Comparator::Le,
                    trace.requests(i, t),
                );
            }
            Some(vars)
        })
        .collect();
    let net_deferred = |t: usize| -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for vars in backlog.iter().flatten() {
            terms.push((vars[t], 1.0));
            if t > 0 {
                terms.push((vars[t - 1], -1.0));
            }
        }
        terms
    };

    for t in 0..tau {
        let mut row = vec![(machines[t], 1.0)];
        row.extend(net_deferred(t).into_iter().map(|(v, a)| (v, a / n)));
        lp.add_row(
            format!("capacity[{}]", t + 1),
            row,
            Comparator::Ge,
            trace.slot_total(t) / n,
        );
    }

    let storage = kind.uses_storage() && st.is_present();
    let (s_in, s_out, soc) = if storage {
        let s_in: Vec<VarId> = (0..tau)
            .map(|t| lp.add_var(format!("s_in[{}]", t + 1), 0.0, st.charge_kw * t_len, 0.0))
            .collect();
        let s_out: Vec<VarId> = (0..tau)
            .map(|t| {
                lp.add_var(
                    format!("s_out[{}]", t + 1),
                    0.0,
                    st.discharge_kw * t_len,
                    -st.wear_usd_per_kwh,
                )
            })
            .collect();
        let soc: Vec<VarId> = (0..tau)
            .map(|t| lp.add_var(format!("soc[{}]", t + 1), 0.0, st.capacity_kwh, 0.0))
            .collect();
        for t in 0..tau {
            let mut row = vec![(soc[t], 1.0), (s_in[t], -1.0), (s_out[t], 1.0)];
            let rhs = if t == 0 {
                st.initial_kwh
            } else {
                row.push((soc[t - 1], -1.0));
                0.0
            };
            lp.add_row(format!("charge[{}]", t + 1), row, Comparator::Eq, rhs);
        }
        (Some(s_in), Some(s_out), Some(soc))
    } else {
        (None, None, None)
    };

    let mut grid = vec![None; tau];
    for t in 0..tau {
        let alpha = pricing.alpha()[t];
        if alpha == 0.0 && !pricing.in_any_window(t) {
            continue;
        }
        let g = lp.add_var(format!("g[{}]", t + 1), 0.0, f64::INFINITY, -alpha);
        let mut row = vec![
            (g, 1.0),
            (machines[t], -e * t_len * p.p_idle_kw),
            (m_on[t], -e * p.o_on_kwh),
            (m_of[t], -e * p.o_of_kwh),
        ];
        row.extend(net_deferred(t).into_iter().map(|(v, a)| (v, a * per_request)));
        if let (Some(s_in), Some(s_out)) = (&s_in, &s_out) {
            row.push((s_in[t], -1.0));
            row.push((s_out[t], 1.0));
        }
        lp.add_row(
            format!("draw[{}]", t + 1),
            row,
            Comparator::Ge,
            per_request * trace.slot_total(t),
        );
        grid[t] = Some(g);
    }

    let mut peak = Vec::with_capacity(pricing.demand_charges().len());
    for (j, dc) in pricing.demand_charges().iter().enumerate() {
        let q = lp.add_var(format!("peak[{}]", j + 1), 0.0, f64::INFINITY, -dc.beta / t_len);
        for &t in &dc.slots {
            let g = grid[t].expect("window slots always carry a grid variable");
            lp.add_row(
                format!("peak{}[{}]", j + 1, t + 1),
                [(q, 1.0), (g, -1.0)],
                Comparator::Ge,
                0.0,
            );
        }
        peak.push(q);
    }

    Ok(Subproblem {
        lp,
        layout: SubproblemLayout {
            rho: sub.lb,
            tau,
            m0: f64::from(p.m0),
            machines,
            m_on,
            m_of,
            backlog,
            s_in,
            s_out,
            soc,
            grid,
            peak,
        },
    })
}

fn clip(x: f64) -> f64 {
    if x.abs() < CLIP_TOL {
        0.0
    } else {
        x
    }
}

/// Turns an optimal LP point back into raw decisions.
///
/// Switching is read off the machine state so the reported counts chain
/// exactly; deferral and service are the positive and negative parts of the
/// backlog change.
pub fn extract_plan(
    solution: &LpSolution,
    layout: &SubproblemLayout,
) -> Result<SchedulePlan, PlannerError> {
    if solution.status != LpStatus::Optimal {
        return Err(PlannerError::NotOptimal(solution.status));
    }
    let x = |v: VarId| clip(solution.values[v.0]);
    let tau = layout.tau;
    let classes = layout.backlog.len();
    let mut plan = SchedulePlan::idle(classes, tau);
    plan.rho = layout.rho;

    let mut before = layout.m0;
    for t in 0..tau {
        let m = x(layout.machines[t]);
        let delta = clip(m - before);
        plan.m_on[t] = delta.max(0.0);
        plan.m_of[t] = (-delta).max(0.0);
        before = m;
    }

    if let (Some(s_in), Some(s_out)) = (&layout.s_in, &layout.s_out) {
        for t in 0..tau {
            plan.storage[t] = clip(x(s_in[t]) - x(s_out[t]));
        }
    }

    for (i, vars) in layout.backlog.iter().enumerate() {
        let Some(vars) = vars else { continue };
        let mut before = 0.0;
        for t in 0..tau {
            let b = x(vars[t]);
            let delta = clip(b - before);
            plan.phi[i][t] = delta.max(0.0);
            plan.eta[i][t] = (-delta).max(0.0);
            before = b;
        }
    }
    Ok(plan)
}
