use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::InputError;
use crate::model::{TenantClass, WorkloadTrace};

/// Mean rate and daily swing of one class, requests per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRate {
    pub class: TenantClass,
    pub base: f64,
    pub amplitude: f64,
}

/// Parameters of a synthetic trace with one cosine cycle per day.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub tau: usize,
    pub slot_hours: f64,
    pub classes: Vec<ClassRate>,
    /// Hour of day at which load peaks.
    pub peak_hour: f64,
    /// Each count is scaled by a uniform factor in `[1 − noise, 1 + noise]`.
    pub noise: f64,
}

impl SynthSpec {
    /// Splits `total_base` requests per slot so that elastic classes carry
    /// `elastic_share` of it, evenly, and inelastic ones the rest. Every
    /// class swings by `swing` times its base over the day.
    pub fn with_elastic_share(
        seed: u64,
        tau: usize,
        classes: Vec<TenantClass>,
        total_base: f64,
        swing: f64,
        elastic_share: f64,
    ) -> Self {
        let elastic = classes.iter().filter(|c| c.kappa.is_elastic()).count();
        let inelastic = classes.len() - elastic;
        let (e_share, i_share) = match (elastic, inelastic) {
            (0, _) => (0.0, 1.0),
            (_, 0) => (1.0, 0.0),
            _ => (elastic_share, 1.0 - elastic_share),
        };
        let classes = classes
            .into_iter()
            .map(|class| {
                let base = if class.kappa.is_elastic() {
                    total_base * e_share / elastic as f64
                } else {
                    total_base * i_share / inelastic as f64
                };
                ClassRate {
                    class,
                    base,
                    amplitude: base * swing,
                }
            })
            .collect();
        Self {
            seed,
            tau,
            slot_hours: 1.0,
            classes,
            peak_hour: 14.0,
            noise: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |msg: String| Err(InputError::Invalid(msg));
        if self.tau == 0 {
            return bad("synthetic trace needs at least one slot".into());
        }
        if !(self.slot_hours.is_finite() && self.slot_hours > 0.0) {
            return bad(format!("slot length must be positive, got {}", self.slot_hours));
        }
        if self.classes.is_empty() {
            return bad("synthetic trace needs at least one class".into());
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad(format!("noise must lie in [0, 1), got {}", self.noise));
        }
        if !self.peak_hour.is_finite() {
            return bad("peak hour must be finite".into());
        }
        for c in &self.classes {
            if !(c.base.is_finite() && c.base >= 0.0) {
                return bad(format!("class {} base rate must be non-negative", c.class.id));
            }
            if !(c.amplitude >= 0.0 && c.amplitude <= c.base) {
                return bad(format!(
                    "class {} amplitude {} must lie between 0 and its base rate {}",
                    c.class.id, c.amplitude, c.base
                ));
            }
        }
        Ok(())
    }

    /// Largest count the generator can produce for a class.
    pub fn max_count(&self, class: usize) -> u64 {
        let c = &self.classes[class];
        ((c.base + c.amplitude) * (1.0 + self.noise)).round() as u64
    }
}

/// Deterministic diurnal trace: `base + amplitude·cos(2π(h − peak)/24)`
/// scaled by multiplicative noise and rounded.
pub fn synth_diurnal(spec: &SynthSpec) -> Result<WorkloadTrace, InputError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut lambda = vec![Vec::with_capacity(spec.tau); spec.classes.len()];
    for t in 0..spec.tau {
        let hour = (t as f64 * spec.slot_hours) % 24.0;
        let phase = ((hour - spec.peak_hour) / 24.0 * TAU).cos();
        for (row, c) in lambda.iter_mut().zip(&spec.classes) {
            let factor = if spec.noise > 0.0 {
                1.0 + rng.gen_range(-spec.noise..=spec.noise)
            } else {
                1.0
            };
            let rate = (c.base + c.amplitude * phase) * factor;
            row.push(rate.max(0.0).round() as u64);
        }
    }
    let classes = spec.classes.iter().map(|c| c.class).collect();
    Ok(WorkloadTrace::new(spec.slot_hours, classes, lambda)?)
}
