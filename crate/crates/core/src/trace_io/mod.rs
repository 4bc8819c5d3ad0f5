//! Reading and writing traces, tariffs and scenario configurations, plus
//! the synthetic diurnal trace generator.

mod config;
mod synth;
mod tariff;
mod trace;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelError;

pub use config::{load_config, load_scenario, ScenarioConfig};
pub use synth::{synth_diurnal, ClassRate, SynthSpec};
pub use tariff::{load_tariff, write_tariff, TariffOptions};
pub use trace::{load_trace, write_trace};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        source: Box<InputError>,
    },
}

fn parse_err<T>(line: u64, msg: impl Into<String>) -> Result<T, InputError> {
    Err(InputError::Parse {
        line,
        msg: msg.into(),
    })
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}
