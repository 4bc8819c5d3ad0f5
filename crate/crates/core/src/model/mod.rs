//! Domain types and the closed-form tenant and operator formulas.
//!
//! Slots are indexed from 0 internally; every user-facing surface (files,
//! violation messages) numbers them from 1.

mod cost;
mod feasibility;
mod power;
mod tenant;

use std::fmt;

use thiserror::Error;

pub use cost::{cost_breakdown, evaluate_plan, CostBreakdown};
pub use feasibility::{check_feasibility, ConstraintKind, Violation, FEASIBILITY_TOL};
pub use power::{derive_power_series, PowerSeries};
pub use tenant::{
    deadline_slots, deferment_floor, revenue_loss, reward_rate, tenant_best_response, Kappa,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("infeasible plan ({} violations, first: {})", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Infeasible(Vec<Violation>),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError::InvalidArgument(msg.into()))
}

fn non_negative(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be finite and non-negative, got {v}"))
    }
}

/// One tenant type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TenantClass {
    pub id: u32,
    pub kappa: Kappa,
}

impl TenantClass {
    pub fn new(id: u32, kappa: Kappa) -> Self {
        Self { id, kappa }
    }
}

/// Requests per tenant class and slot over one billing cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadTrace {
    slot_hours: f64,
    classes: Vec<TenantClass>,
    lambda: Vec<Vec<u64>>,
}

impl WorkloadTrace {
    pub fn new(
        slot_hours: f64,
        classes: Vec<TenantClass>,
        lambda: Vec<Vec<u64>>,
    ) -> Result<Self, ModelError> {
        if !(slot_hours.is_finite() && slot_hours > 0.0) {
            return invalid(format!("slot length must be positive, got {slot_hours}"));
        }
        if classes.is_empty() {
            return invalid("a trace needs at least one tenant class");
        }
        if lambda.len() != classes.len() {
            return Err(ModelError::Dimension(format!(
                "{} classes but {} request rows",
                classes.len(),
                lambda.len()
            )));
        }
        let tau = lambda[0].len();
        if tau == 0 {
            return invalid("a trace needs at least one slot");
        }
        if lambda.iter().any(|row| row.len() != tau) {
            return Err(ModelError::Dimension("request rows differ in length".into()));
        }
        let mut ids: Vec<u32> = classes.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("tenant class ids must be unique");
        }
        Ok(Self {
            slot_hours,
            classes,
            lambda,
        })
    }

    pub fn tau(&self) -> usize {
        self.lambda[0].len()
    }

    pub fn slot_hours(&self) -> f64 {
        self.slot_hours
    }

    pub fn classes(&self) -> &[TenantClass] {
        &self.classes
    }

    /// `lambda()[class][slot]`.
    pub fn lambda(&self) -> &[Vec<u64>] {
        &self.lambda
    }

    pub fn requests(&self, class: usize, slot: usize) -> f64 {
        self.lambda[class][slot] as f64
    }

    /// Total arrivals of one class over the cycle.
    pub fn class_total(&self, class: usize) -> f64 {
        self.lambda[class].iter().map(|&x| x as f64).sum()
    }

    pub fn slot_total(&self, slot: usize) -> f64 {
        self.lambda.iter().map(|row| row[slot] as f64).sum()
    }

    pub fn total_requests(&self) -> f64 {
        (0..self.classes.len()).map(|i| self.class_total(i)).sum()
    }
}

/// A demand charge billed on the peak grid draw over a set of slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandCharge {
    /// Dollars per KW of peak.
    pub beta: f64,
    /// Sorted, de-duplicated, 0-based slot indices.
    pub slots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingSchedule {
    alpha: Vec<f64>,
    demand_charges: Vec<DemandCharge>,
}

impl PricingSchedule {
    /// Rejects negative energy prices; the linear reformulation of the bill
    /// is only exact for α ≥ 0.
    pub fn new(alpha: Vec<f64>, demand_charges: Vec<DemandCharge>) -> Result<Self, ModelError> {
        if alpha.is_empty() {
            return invalid("energy price series is empty");
        }
        for (t, &a) in alpha.iter().enumerate() {
            if !a.is_finite() {
                return invalid(format!("energy price at slot {} is not finite", t + 1));
            }
            if a < 0.0 {
                return invalid(format!("negative energy price {a} at slot {}", t + 1));
            }
        }
        let tau = alpha.len();
        let mut charges = Vec::with_capacity(demand_charges.len());
        for (j, mut dc) in demand_charges.into_iter().enumerate() {
            non_negative(&format!("demand charge {} price", j + 1), dc.beta)?;
            dc.slots.sort_unstable();
            dc.slots.dedup();
            if dc.slots.is_empty() {
                return invalid(format!("demand charge {} has an empty window", j + 1));
            }
            if let Some(&last) = dc.slots.last() {
                if last >= tau {
                    return invalid(format!(
                        "demand charge {} covers slot {} beyond the cycle of {tau}",
                        j + 1,
                        last + 1
                    ));
                }
            }
            charges.push(dc);
        }
        Ok(Self {
            alpha,
            demand_charges: charges,
        })
    }

    /// Flat energy price with one demand charge over the whole cycle.
    pub fn flat(tau: usize, alpha: f64, beta: f64) -> Result<Self, ModelError> {
        let charges = if beta > 0.0 {
            vec![DemandCharge {
                beta,
                slots: (0..tau).collect(),
            }]
        } else {
            Vec::new()
        };
        Self::new(vec![alpha; tau], charges)
    }

    pub fn tau(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn demand_charges(&self) -> &[DemandCharge] {
        &self.demand_charges
    }

    /// Whether slot `t` belongs to any demand-charge window.
    pub fn in_any_window(&self, t: usize) -> bool {
        self.demand_charges
            .iter()
            .any(|dc| dc.slots.binary_search(&t).is_ok())
    }
}

/// Physical and cost parameters of the data center.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCenterParams {
    /// Requests one machine serves per slot.
    pub n_per_machine: u32,
    pub e_pue: f64,
    pub p_idle_kw: f64,
    pub p_peak_kw: f64,
    pub o_on_kwh: f64,
    pub o_of_kwh: f64,
    pub w_on_usd: f64,
    pub w_of_usd: f64,
    /// Machines on before the first slot.
    pub m0: u32,
}

impl DataCenterParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_per_machine == 0 {
            return invalid("machine capacity N must be positive");
        }
        if !(self.e_pue.is_finite() && self.e_pue >= 1.0) {
            return invalid(format!("PUE must be at least 1, got {}", self.e_pue));
        }
        non_negative("idle power", self.p_idle_kw)?;
        non_negative("peak power", self.p_peak_kw)?;
        if self.p_peak_kw < self.p_idle_kw {
            return invalid("peak power must not be below idle power");
        }
        non_negative("switch-on energy", self.o_on_kwh)?;
        non_negative("switch-off energy", self.o_of_kwh)?;
        non_negative("switch-on wear", self.w_on_usd)?;
        non_negative("switch-off wear", self.w_of_usd)
    }

    pub fn n(&self) -> f64 {
        f64::from(self.n_per_machine)
    }
}

/// On-site energy storage. All-zero means no storage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StorageParams {
    pub capacity_kwh: f64,
    /// Maximum charge rate.
    pub charge_kw: f64,
    /// Maximum discharge rate.
    pub discharge_kw: f64,
    /// Wear cost per KWh discharged.
    pub wear_usd_per_kwh: f64,
    pub initial_kwh: f64,
}

impl StorageParams {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_present(&self) -> bool {
        self.capacity_kwh > 0.0
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        non_negative("storage capacity", self.capacity_kwh)?;
        non_negative("charge rate", self.charge_kw)?;
        non_negative("discharge rate", self.discharge_kw)?;
        non_negative("battery wear", self.wear_usd_per_kwh)?;
        non_negative("initial stored energy", self.initial_kwh)?;
        if self.initial_kwh > self.capacity_kwh {
            return invalid("initial stored energy exceeds the capacity");
        }
        Ok(())
    }
}

/// Usage price and reward terms offered to tenants.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardPolicy {
    /// Dollars per Ψ requests.
    pub delta: f64,
    pub psi: f64,
    pub d_max: u32,
    pub rho: f64,
}

impl RewardPolicy {
    pub fn validate(&self) -> Result<(), ModelError> {
        non_negative("usage price", self.delta)?;
        if !(self.psi.is_finite() && self.psi > 0.0) {
            return invalid(format!("request unit must be positive, got {}", self.psi));
        }
        non_negative("reward factor", self.rho)
    }
}

/// The four pricing and storage combinations that get compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Up,
    Ups,
    Upmr,
    Upmrs,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [Self::Up, Self::Ups, Self::Upmr, Self::Upmrs];

    pub fn uses_reward(self) -> bool {
        matches!(self, Self::Upmr | Self::Upmrs)
    }

    pub fn uses_storage(self) -> bool {
        matches!(self, Self::Ups | Self::Upmrs)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Up => "UP",
            Self::Ups => "UPS",
            Self::Upmr => "UPMR",
            Self::Upmrs => "UPMRS",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "UP" => Ok(Self::Up),
            "UPS" => Ok(Self::Ups),
            "UPMR" => Ok(Self::Upmr),
            "UPMRS" => Ok(Self::Upmrs),
            other => invalid(format!("unknown scenario kind {other:?}")),
        }
    }
}

/// Everything the operator's problem depends on besides its decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub trace: WorkloadTrace,
    pub pricing: PricingSchedule,
    pub params: DataCenterParams,
    pub storage: StorageParams,
    pub policy: RewardPolicy,
}

impl Instance {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.params.validate()?;
        self.storage.validate()?;
        self.policy.validate()?;
        if self.pricing.tau() != self.trace.tau() {
            return Err(ModelError::Dimension(format!(
                "tariff covers {} slots, trace {}",
                self.pricing.tau(),
                self.trace.tau()
            )));
        }
        Ok(())
    }
}

/// The operator's raw decisions for one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePlan {
    pub rho: f64,
    pub m_on: Vec<f64>,
    pub m_of: Vec<f64>,
    /// Energy into storage per slot, KWh; negative when discharging.
    pub storage: Vec<f64>,
    /// Requests deferred at arrival, `[class][slot]`.
    pub phi: Vec<Vec<f64>>,
    /// Deferred requests served, `[class][slot]`.
    pub eta: Vec<Vec<f64>>,
}

impl SchedulePlan {
    /// The do-nothing plan: no switching, no storage, no deferral.
    pub fn idle(classes: usize, tau: usize) -> Self {
        Self {
            rho: 0.0,
            m_on: vec![0.0; tau],
            m_of: vec![0.0; tau],
            storage: vec![0.0; tau],
            phi: vec![vec![0.0; tau]; classes],
            eta: vec![vec![0.0; tau]; classes],
        }
    }

    pub fn tau(&self) -> usize {
        self.m_on.len()
    }

    pub(crate) fn check_dims(&self, trace: &WorkloadTrace) -> Result<(), ModelError> {
        let tau = trace.tau();
        let classes = trace.classes().len();
        let ok = self.m_on.len() == tau
            && self.m_of.len() == tau
            && self.storage.len() == tau
            && self.phi.len() == classes
            && self.eta.len() == classes
            && self.phi.iter().chain(&self.eta).all(|r| r.len() == tau);
        if ok {
            Ok(())
        } else {
            Err(ModelError::Dimension(format!(
                "plan does not have {classes} classes × {tau} slots"
            )))
        }
    }

    /// Scheduled requests `λ̂ = λ − φ + η` for one class and slot.
    pub fn scheduled(&self, trace: &WorkloadTrace, class: usize, slot: usize) -> f64 {
        trace.requests(class, slot) - self.phi[class][slot] + self.eta[class][slot]
    }

    /// Machines on in each slot, `m0 + Σ (m_on − m_of)`.
    pub fn machines(&self, m0: u32) -> Vec<f64> {
        let mut m = f64::from(m0);
        self.m_on
            .iter()
            .zip(&self.m_of)
            .map(|(on, of)| {
                m += on - of;
                m
            })
            .collect()
    }
}
