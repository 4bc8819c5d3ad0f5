use crate::model::{deadline_slots, Kappa, TenantClass};

/// A half-open interval `[lb, ub)` of reward factors on which every class
/// keeps the same integer deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub lb: f64,
    /// `f64::INFINITY` for the last sub-domain.
    pub ub: f64,
    /// Integer deadline of each class, in class order.
    pub d_lb: Vec<u32>,
}

/// Splits `[0, ∞)` into the sub-domains on which `⌊D_i⌋` is constant.
///
/// Classes with κ = 0 or INELASTIC never move a boundary: the first sits at
/// `D_max` for every ρ, the second at 0.
pub fn enumerate_subdomains(classes: &[TenantClass], d_max: u32) -> Vec<Subdomain> {
    let last_step = f64::from(d_max) + 1.0;
    let mut out = Vec::new();
    let mut lb = 0.0;
    loop {
        let d_lb: Vec<u32> = classes
            .iter()
            .map(|c| deadline_slots(c.kappa, lb, d_max).expect("lb is finite and non-negative"))
            .collect();

        let mut ub = f64::INFINITY;
        for (c, &d) in classes.iter().zip(&d_lb) {
            let Kappa::Finite(k) = c.kappa else { continue };
            if k > 0.0 && lb < last_step * k {
                ub = ub.min((f64::from(d) + 2.0) * k);
            }
        }
        if ub <= lb {
            // Only reachable through rounding in the tolerant floor; the
            // next boundary is one step further out.
            ub = classes
                .iter()
                .filter_map(|c| c.kappa.value().filter(|&k| k > 0.0))
                .map(|k| ((lb / k).floor() + 1.0) * k)
                .filter(|&b| b > lb)
                .fold(f64::INFINITY, f64::min);
        }
        out.push(Subdomain { lb, ub, d_lb });
        if ub.is_infinite() {
            return out;
        }
        lb = ub;
    }
}
