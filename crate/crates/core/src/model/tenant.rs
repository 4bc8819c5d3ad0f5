//! Tenant-side economics: deferment best response, reward rate and loss.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::ModelError;

/// Revenue-loss factor of a tenant class, in dollars per Ψ requests per slot
/// of deferment. `Inelastic` stands for κ → ∞ and orders above every finite
/// value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Finite(f64),
    Inelastic,
}

impl Kappa {
    pub fn finite(value: f64) -> Result<Self, ModelError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Kappa::Finite(value))
        } else {
            Err(ModelError::InvalidArgument(format!(
                "loss factor must be a finite non-negative number, got {value}"
            )))
        }
    }

    pub fn is_elastic(self) -> bool {
        matches!(self, Kappa::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Finite(v) => Some(v),
            Kappa::Inelastic => None,
        }
    }
}

impl PartialOrd for Kappa {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Kappa::Finite(a), Kappa::Finite(b)) => a.partial_cmp(b),
            (Kappa::Finite(_), Kappa::Inelastic) => Some(Ordering::Less),
            (Kappa::Inelastic, Kappa::Finite(_)) => Some(Ordering::Greater),
            (Kappa::Inelastic, Kappa::Inelastic) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Finite(v) => write!(f, "{v}"),
            Kappa::Inelastic => f.write_str("inf"),
        }
    }
}

impl FromStr for Kappa {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Kappa::Inelastic);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| ModelError::InvalidArgument(format!("cannot parse loss factor {s:?}")))?;
        Kappa::finite(v)
    }
}

fn check_rho(rho: f64) -> Result<(), ModelError> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidArgument(format!(
            "reward factor must be finite and non-negative, got {rho}"
        )))
    }
}

/// Deferment threshold a rational tenant picks for reward factor `rho`:
/// `max(min(ρ/κ − 1, D_max), 0)`, and 0 for inelastic tenants.
///
/// A class with κ = 0 loses nothing by waiting, so it accepts the longest
/// deferment for any reward (including ρ = 0, where every D is optimal).
pub fn tenant_best_response(kappa: Kappa, rho: f64, d_max: u32) -> Result<f64, ModelError> {
    check_rho(rho)?;
    let d_max = f64::from(d_max);
    Ok(match kappa {
        Kappa::Inelastic => 0.0,
        Kappa::Finite(k) if k == 0.0 => d_max,
        Kappa::Finite(k) => (rho / k - 1.0).min(d_max).max(0.0),
    })
}

/// Reward per Ψ requests, `ρ · ln(1 + D)` at the tenant's best response.
pub fn reward_rate(kappa: Kappa, rho: f64, d_max: u32) -> Result<f64, ModelError> {
    let d = tenant_best_response(kappa, rho, d_max)?;
    Ok(rho * d.ln_1p())
}

/// Tenant revenue loss per Ψ requests for deferment `d`.
pub fn revenue_loss(kappa: Kappa, d: f64) -> Result<f64, ModelError> {
    let Kappa::Finite(k) = kappa else {
        return Err(ModelError::InvalidArgument(
            "revenue loss of an inelastic class is unbounded".into(),
        ));
    };
    if !(d >= 0.0) {
        return Err(ModelError::InvalidArgument(format!(
            "deferment must be non-negative, got {d}"
        )));
    }
    Ok(k * d)
}

/// Integer deadline `⌊D⌋`, with values within 1e-9 of an integer snapped
/// to it: `ρ = (k+1)·κ` computed in floating point maps to `k`.
pub fn deferment_floor(d: f64) -> u32 {
    let nearest = d.round();
    let snapped = if (d - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        d.floor()
    };
    snapped.max(0.0) as u32
}

/// Integer deadline the class accepts at reward factor `rho`.
pub fn deadline_slots(kappa: Kappa, rho: f64, d_max: u32) -> Result<u32, ModelError> {
    Ok(deferment_floor(tenant_best_response(kappa, rho, d_max)?).min(d_max))
}
