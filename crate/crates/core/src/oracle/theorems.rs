use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::OracleReport;
use crate::model::{reward_rate, tenant_best_response, Kappa, TenantClass};
use crate::planner::{enumerate_subdomains, Subdomain};

/// Sub-domains wider than this are sampled only over their first stretch.
const SAMPLE_SPAN: f64 = 10.0;

fn sample_end(sub: &Subdomain) -> f64 {
    sub.ub.min(sub.lb + SAMPLE_SPAN)
}

/// Checks that the plain floor of every class's best response equals the
/// sub-domain's deadline at `samples` points per enumerated sub-domain.
pub fn check_theorem1(classes: &[TenantClass], d_max: u32, samples: usize) -> Vec<OracleReport> {
    let subs = enumerate_subdomains(classes, d_max);
    check_theorem1_on(&subs, classes, d_max, samples)
}

/// [`check_theorem1`] against a caller-supplied sub-domain list. One row
/// per sub-domain plus a final row for the tiling of `[0, ∞)`.
pub fn check_theorem1_on(
    subs: &[Subdomain],
    classes: &[TenantClass],
    d_max: u32,
    samples: usize,
) -> Vec<OracleReport> {
    let mut reports = Vec::with_capacity(subs.len() + 1);
    for (k, sub) in subs.iter().enumerate() {
        let hi = sample_end(sub);
        let mut bad = 0;
        let mut first = None;
        for j in 0..samples {
            let rho = sub.lb + (j as f64 + 0.5) / samples as f64 * (hi - sub.lb);
            for (i, c) in classes.iter().enumerate() {
                let d = tenant_best_response(c.kappa, rho, d_max).expect("sampled rho is valid");
                let floor = d.floor() as u32;
                if floor != sub.d_lb[i] {
                    bad += 1;
                    first.get_or_insert_with(|| {
                        format!("rho {rho}: class {} has floor {floor}, sub-domain says {}", c.id, sub.d_lb[i])
                    });
                }
            }
        }
        reports.push(OracleReport::count(format!("theorem1/sub{k:03}"), bad, first));
    }

    let mut gaps = Vec::new();
    if subs.first().map(|s| s.lb) != Some(0.0) {
        gaps.push("first lower bound is not 0".to_string());
    }
    for w in subs.windows(2) {
        if w[0].ub != w[1].lb || !(w[0].lb < w[0].ub) {
            gaps.push(format!("[{}, {}) then [{}, {})", w[0].lb, w[0].ub, w[1].lb, w[1].ub));
        }
    }
    if subs.last().is_none_or(|s| s.ub.is_finite()) {
        gaps.push("last upper bound is finite".to_string());
    }
    let note = gaps.first().cloned();
    reports.push(OracleReport::count("theorem1/tiling", gaps.len(), note));
    reports
}

fn total_reward(classes: &[TenantClass], rho: f64, reward: &impl Fn(Kappa, f64) -> f64) -> f64 {
    classes.iter().map(|c| reward(c.kappa, rho)).sum()
}

/// Checks that the reward term at each sub-domain's lower bound is no larger
/// than at 10 interior points, with one Ψ of requests per class.
pub fn check_theorem2(classes: &[TenantClass], d_max: u32) -> Vec<OracleReport> {
    let subs = enumerate_subdomains(classes, d_max);
    check_theorem2_with(&subs, classes, |k, rho| {
        reward_rate(k, rho, d_max).expect("sampled rho is valid")
    })
}

/// [`check_theorem2`] with the reward per Ψ requests supplied by the caller.
pub fn check_theorem2_with(
    subs: &[Subdomain],
    classes: &[TenantClass],
    reward: impl Fn(Kappa, f64) -> f64,
) -> Vec<OracleReport> {
    subs.iter()
        .enumerate()
        .map(|(k, sub)| {
            let at_lb = total_reward(classes, sub.lb, &reward);
            let hi = sample_end(sub);
            let mut lowest = f64::INFINITY;
            let mut arg = sub.lb;
            for j in 1..=10 {
                let rho = sub.lb + j as f64 / 11.0 * (hi - sub.lb);
                let r = total_reward(classes, rho, &reward);
                if r < lowest {
                    lowest = r;
                    arg = rho;
                }
            }
            let excess = (at_lb - lowest).max(0.0);
            let tol = 1e-12 * at_lb.abs().max(1.0);
            OracleReport {
                case: format!("theorem2/sub{k:03}"),
                oracle: at_lb,
                artifact: lowest,
                abs_gap: excess,
                rel_gap: excess / at_lb.abs().max(1.0),
                tolerance: tol,
                pass: excess <= tol,
                note: (excess > tol).then(|| format!("reward at rho {arg} is below the value at Lb {}", sub.lb)),
            }
        })
        .collect()
}

fn utility(kappa: f64, rho: f64, d: f64) -> f64 {
    rho * d.ln_1p() - kappa * d
}

/// Three property rows over `samples` random draws: the closed-form
/// response beats a 0.001-step scan of `[0, D_max]`, it is non-decreasing
/// in ρ, and non-increasing in κ.
pub fn check_tenant_response(samples: usize, seed: u64) -> Vec<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-3;

    let mut worst: Option<(f64, f64, String)> = None;
    let mut worst_gap = 0.0;
    let mut optimal_bad = 0;
    let mut rho_bad = 0;
    let mut kappa_bad = 0;
    let mut rho_note = None;
    let mut kappa_note = None;

    for _ in 0..samples {
        let d_max: u32 = rng.gen_range(1..=24);
        let kappa: f64 = rng.gen_range(0.01..1.0);
        let rho: f64 = rng.gen_range(0.0..kappa * (f64::from(d_max) + 2.0));

        let d = tenant_best_response(Kappa::Finite(kappa), rho, d_max).unwrap();
        let closed = utility(kappa, rho, d);
        let points = (f64::from(d_max) / step).round() as usize;
        let scanned = (0..=points)
            .map(|k| utility(kappa, rho, k as f64 * step))
            .fold(f64::NEG_INFINITY, f64::max);
        // Concavity bounds how far the scan can fall short of the true maximum.
        let slack = rho * step * step;
        let below = scanned - closed;
        let above = closed - scanned;
        let gap = below.max(above - slack).max(0.0);
        if below > 1e-12 || above > slack + 1e-12 {
            optimal_bad += 1;
        }
        if worst.is_none() || gap > worst_gap {
            worst_gap = gap;
            worst = Some((scanned, closed, format!("kappa {kappa}, rho {rho}, D_max {d_max}")));
        }

        let rho2 = rho + rng.gen_range(0.0..kappa * 3.0);
        let d2 = tenant_best_response(Kappa::Finite(kappa), rho2, d_max).unwrap();
        let r1 = reward_rate(Kappa::Finite(kappa), rho, d_max).unwrap();
        let r2 = reward_rate(Kappa::Finite(kappa), rho2, d_max).unwrap();
        if d2 < d || r2 < r1 {
            rho_bad += 1;
            rho_note.get_or_insert_with(|| format!("kappa {kappa}: rho {rho} -> {rho2} lowers D or reward"));
        }

        let heavier = if rng.gen_bool(0.1) {
            Kappa::Inelastic
        } else {
            Kappa::Finite(kappa + rng.gen_range(0.0..1.0))
        };
        let d3 = tenant_best_response(heavier, rho, d_max).unwrap();
        if d3 > d {
            kappa_bad += 1;
            kappa_note.get_or_insert_with(|| format!("rho {rho}: kappa {kappa} -> {heavier} raises D"));
        }
    }

    let (scanned, closed, note) = worst.unwrap_or((0.0, 0.0, String::new()));
    let optimal = OracleReport {
        case: "tenant/closed-form-optimal".into(),
        oracle: scanned,
        artifact: closed,
        abs_gap: worst_gap,
        rel_gap: worst_gap / scanned.abs().max(1.0),
        tolerance: 0.0,
        pass: optimal_bad == 0,
        note: Some(note),
    };
    vec![
        optimal,
        OracleReport::count("tenant/monotone-in-rho", rho_bad, rho_note),
        OracleReport::count("tenant/monotone-in-kappa", kappa_bad, kappa_note),
    ]
}
