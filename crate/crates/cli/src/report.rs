use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use upmr_core::model::{CostBreakdown, Instance, ScenarioKind};
use upmr_core::planner::PlanResult;

pub const SUMMARY_HEADER: [&str; 11] = [
    "scenario",
    "rho",
    "revenue",
    "reward",
    "wear",
    "energy_charge",
    "demand_charge",
    "bill",
    "profit",
    "profit_norm",
    "bill_norm",
];

pub struct SummaryRow {
    pub scenario: String,
    pub rho: f64,
    pub cost: CostBreakdown,
}

fn num(x: f64) -> String {
    format!("{:.10}", x + 0.0)
}

fn normalized(x: f64, max: f64) -> f64 {
    if max == 0.0 {
        0.0
    } else {
        x / max
    }
}

fn create(path: &Path) -> io::Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

/// Normalized columns divide by the largest profit and bill among `rows`.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> io::Result<()> {
    let max_profit = rows.iter().map(|r| r.cost.profit.abs()).fold(0.0, f64::max);
    let max_bill = rows.iter().map(|r| r.cost.bill).fold(0.0, f64::max);
    let mut w = create(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let c = &r.cost;
        w.write_record([
            r.scenario.clone(),
            num(r.rho),
            num(c.revenue),
            num(c.reward),
            num(c.wear),
            num(c.energy_charge),
            num(c.demand_charge),
            num(c.bill),
            num(c.profit),
            num(normalized(c.profit, max_profit)),
            num(normalized(c.bill, max_bill)),
        ])?;
    }
    w.flush()
}

pub fn write_series(path: &Path, instance: &Instance, result: &PlanResult) -> io::Result<()> {
    let s = &result.series;
    let mut w = create(path)?;
    w.write_record(["slot", "P_kwh", "u", "m", "soc", "alpha"])?;
    for t in 0..instance.trace.tau() {
        w.write_record([
            (t + 1).to_string(),
            num(s.grid_kwh[t]),
            num(s.utilization[t]),
            num(s.machines[t]),
            num(s.soc_kwh[t]),
            instance.pricing.alpha()[t].to_string(),
        ])?;
    }
    w.flush()
}

/// One row per slot: switching, storage flow and per-class `phi.<id>`,
/// `eta.<id>` columns.
pub fn write_plan(path: &Path, instance: &Instance, result: &PlanResult) -> io::Result<()> {
    let p = &result.plan;
    let classes = instance.trace.classes();
    let mut header = vec!["slot".to_string(), "m_on".into(), "m_of".into(), "storage_kwh".into()];
    header.extend(classes.iter().map(|c| format!("phi.{}", c.id)));
    header.extend(classes.iter().map(|c| format!("eta.{}", c.id)));
    let mut w = create(path)?;
    w.write_record(&header)?;
    for t in 0..instance.trace.tau() {
        let mut rec = vec![(t + 1).to_string(), num(p.m_on[t]), num(p.m_of[t]), num(p.storage[t])];
        rec.extend(p.phi.iter().map(|row| num(row[t])));
        rec.extend(p.eta.iter().map(|row| num(row[t])));
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn write_subdomains(path: &Path, instance: &Instance, result: &PlanResult) -> io::Result<()> {
    let classes = instance.trace.classes();
    let mut header = vec!["lb".to_string(), "ub".into()];
    header.extend(classes.iter().map(|c| format!("d_lb.{}", c.id)));
    header.extend(["status".into(), "profit".into(), "iterations".into()]);
    let mut w = create(path)?;
    w.write_record(&header)?;
    for o in &result.log {
        let mut rec = vec![num(o.subdomain.lb), o.subdomain.ub.to_string()];
        rec.extend(o.subdomain.d_lb.iter().map(u32::to_string));
        rec.push(format!("{:?}", o.status));
        rec.push(num(o.profit));
        rec.push(o.iterations.to_string());
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn print_table(out: &mut impl Write, rows: &[SummaryRow]) -> io::Result<()> {
    writeln!(
        out,
        "{:<14} {:>9} {:>12} {:>10} {:>10} {:>12} {:>12}",
        "scenario", "rho", "revenue", "reward", "wear", "bill", "profit"
    )?;
    for r in rows {
        let c = &r.cost;
        writeln!(
            out,
            "{:<14} {:>9.4} {:>12.4} {:>10.4} {:>10.4} {:>12.4} {:>12.4}",
            r.scenario, r.rho, c.revenue, c.reward, c.wear, c.bill, c.profit
        )?;
    }
    Ok(())
}

pub fn series_name(kind: ScenarioKind) -> String {
    format!("series_{kind}.csv")
}
