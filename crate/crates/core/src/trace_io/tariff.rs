use std::collections::BTreeSet;
use std::io::{Read, Write};

use super::{parse_err, record_line, InputError};
use crate::model::{DemandCharge, PricingSchedule};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TariffOptions {
    /// Replace negative energy prices with zero instead of failing.
    pub clamp_negative: bool,
}

fn parse_range(field: &str, tau: usize, line: u64) -> Result<std::ops::RangeInclusive<usize>, InputError> {
    let (a, b) = field.split_once('-').unwrap_or((field, field));
    let (Ok(a), Ok(b)) = (a.trim().parse::<usize>(), b.trim().parse::<usize>()) else {
        return parse_err(line, format!("window range {field:?} is not <start>-<end>"));
    };
    if a < 1 || b < a || b > tau {
        return parse_err(line, format!("window range {a}-{b} is outside slots 1-{tau}"));
    }
    Ok(a - 1..=b - 1)
}

/// Reads a `slot,alpha_usd_per_kwh` CSV with optional
/// `window,<beta>,<start>-<end>,...` lines mixed in.
pub fn load_tariff<R: Read>(
    reader: R,
    tau: usize,
    options: TariffOptions,
) -> Result<PricingSchedule, InputError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["slot", "alpha_usd_per_kwh"] {
        return parse_err(1, "expected header slot,alpha_usd_per_kwh");
    }

    let mut alpha: Vec<Option<f64>> = vec![None; tau];
    let mut extra_slots = 0;
    let mut charges = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.get(0) == Some("window") {
            if rec.len() < 3 {
                return parse_err(line, "window needs a price and at least one slot range");
            }
            let beta: f64 = match rec[1].parse() {
                Ok(b) if b >= 0.0 && f64::is_finite(b) => b,
                _ => return parse_err(line, format!("demand price {:?} must be a non-negative number", &rec[1])),
            };
            let mut slots = BTreeSet::new();
            for field in rec.iter().skip(2) {
                slots.extend(parse_range(field, tau, line)?);
            }
            charges.push(DemandCharge {
                beta,
                slots: slots.into_iter().collect(),
            });
            continue;
        }
        if rec.len() != 2 {
            return parse_err(line, format!("expected 2 fields, got {}", rec.len()));
        }
        let slot: usize = match rec[0].parse() {
            Ok(s) if s >= 1 => s,
            _ => return parse_err(line, format!("slot {:?} is not a positive integer", &rec[0])),
        };
        let Ok(mut a) = rec[1].parse::<f64>() else {
            return parse_err(line, format!("price {:?} is not a number", &rec[1]));
        };
        if !a.is_finite() {
            return parse_err(line, "price is not finite");
        }
        if a < 0.0 {
            if !options.clamp_negative {
                return parse_err(line, format!("negative energy price {a} (use the clamp option to read it as 0)"));
            }
            a = 0.0;
        }
        if slot > tau {
            extra_slots = extra_slots.max(slot);
            continue;
        }
        if alpha[slot - 1].replace(a).is_some() {
            return parse_err(line, format!("duplicate price for slot {slot}"));
        }
    }
    if extra_slots > 0 {
        return Err(InputError::Invalid(format!(
            "tariff has prices up to slot {extra_slots} but the cycle has {tau} slots"
        )));
    }
    let missing = alpha.iter().filter(|a| a.is_none()).count();
    if missing > 0 {
        let first = alpha.iter().position(Option::is_none).unwrap() + 1;
        return Err(InputError::Invalid(format!(
            "tariff covers {} of {tau} slots (first missing: {first})",
            tau - missing
        )));
    }
    Ok(PricingSchedule::new(alpha.into_iter().flatten().collect(), charges)?)
}

/// Writes a tariff in the format [`load_tariff`] reads, compressing each
/// window into contiguous ranges.
pub fn write_tariff<W: Write>(writer: W, pricing: &PricingSchedule) -> Result<(), InputError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    w.write_record(["slot", "alpha_usd_per_kwh"])?;
    for (t, a) in pricing.alpha().iter().enumerate() {
        w.write_record([(t + 1).to_string(), a.to_string()])?;
    }
    for dc in pricing.demand_charges() {
        let mut rec = vec!["window".to_string(), dc.beta.to_string()];
        let mut start = dc.slots[0];
        let mut prev = start;
        for &s in dc.slots.iter().skip(1).chain(std::iter::once(&usize::MAX)) {
            if s != prev + 1 {
                rec.push(format!("{}-{}", start + 1, prev + 1));
                start = s;
            }
            prev = s;
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
