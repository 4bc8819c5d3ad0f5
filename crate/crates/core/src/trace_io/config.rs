use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use super::{load_tariff, load_trace, parse_err, InputError, TariffOptions};
use crate::model::{
    DataCenterParams, Instance, Kappa, PricingSchedule, RewardPolicy, ScenarioKind,
    StorageParams, TenantClass, WorkloadTrace,
};

const SCALAR_KEYS: [&str; 22] = [
    "scenario",
    "tau",
    "slot_hours",
    "psi",
    "delta",
    "d_max",
    "n_per_machine",
    "e_pue",
    "p_idle_kw",
    "p_peak_kw",
    "o_on_kwh",
    "o_of_kwh",
    "w_on_usd",
    "w_of_usd",
    "m0",
    "c_s_kwh",
    "l_in_kw",
    "l_out_kw",
    "zeta_usd_per_kwh",
    "s0_kwh",
    "trace_file",
    "tariff_file",
];

/// One row of the scenario matrix with everything but the input series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub tau: usize,
    pub slot_hours: f64,
    /// Sorted by id.
    pub classes: Vec<TenantClass>,
    pub params: DataCenterParams,
    pub storage: StorageParams,
    /// `rho` is left at 0; the planner chooses it.
    pub policy: RewardPolicy,
    pub trace_file: PathBuf,
    pub tariff_file: PathBuf,
}

impl ScenarioConfig {
    pub fn instance(&self, trace: WorkloadTrace, pricing: PricingSchedule) -> Result<Instance, InputError> {
        if trace.tau() != self.tau {
            return Err(InputError::Invalid(format!(
                "trace has {} slots, config says tau = {}",
                trace.tau(),
                self.tau
            )));
        }
        let instance = Instance {
            trace,
            pricing,
            params: self.params.clone(),
            storage: self.storage.clone(),
            policy: self.policy.clone(),
        };
        instance.validate()?;
        Ok(instance)
    }
}

struct Entries {
    values: BTreeMap<String, (u64, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Result<(u64, &str), InputError> {
        self.values
            .get(key)
            .map(|(line, v)| (*line, v.as_str()))
            .ok_or_else(|| InputError::Invalid(format!("missing parameter {key}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, InputError> {
        let (line, v) = self.raw(key)?;
        v.parse()
            .or_else(|_| parse_err(line, format!("cannot parse {key} = {v:?}")))
    }
}

/// Parses a `key = value` scenario file. `#` starts a comment.
pub fn load_config<R: Read>(reader: R) -> Result<ScenarioConfig, InputError> {
    let mut values = BTreeMap::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let n = n as u64 + 1;
        let line = line.map_err(|e| InputError::Parse {
            line: n,
            msg: e.to_string(),
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return parse_err(n, format!("expected key = value, got {line:?}"));
        };
        let key = key.trim();
        let known = SCALAR_KEYS.contains(&key)
            || key
                .strip_prefix("kappa.")
                .is_some_and(|id| id.parse::<u32>().is_ok());
        if !known {
            return parse_err(n, format!("unknown key {key:?}"));
        }
        if values
            .insert(key.to_string(), (n, value.trim().to_string()))
            .is_some()
        {
            return parse_err(n, format!("{key} given twice"));
        }
    }
    let e = Entries { values };

    let (line, kind) = e.raw("scenario")?;
    let kind: ScenarioKind = kind
        .parse()
        .or_else(|err: crate::model::ModelError| parse_err(line, err.to_string()))?;

    let mut classes = Vec::new();
    for (key, (line, v)) in &e.values {
        if let Some(id) = key.strip_prefix("kappa.") {
            let kappa: Kappa = v
                .parse()
                .or_else(|err: crate::model::ModelError| parse_err(*line, err.to_string()))?;
            classes.push(TenantClass::new(id.parse().expect("checked above"), kappa));
        }
    }
    if classes.is_empty() {
        return Err(InputError::Invalid("no tenant classes (kappa.<id>) declared".into()));
    }
    classes.sort_by_key(|c| c.id);

    let params = DataCenterParams {
        n_per_machine: e.parse("n_per_machine")?,
        e_pue: e.parse("e_pue")?,
        p_idle_kw: e.parse("p_idle_kw")?,
        p_peak_kw: e.parse("p_peak_kw")?,
        o_on_kwh: e.parse("o_on_kwh")?,
        o_of_kwh: e.parse("o_of_kwh")?,
        w_on_usd: e.parse("w_on_usd")?,
        w_of_usd: e.parse("w_of_usd")?,
        m0: e.parse("m0")?,
    };
    params.validate()?;
    let storage = StorageParams {
        capacity_kwh: e.parse("c_s_kwh")?,
        charge_kw: e.parse("l_in_kw")?,
        discharge_kw: e.parse("l_out_kw")?,
        wear_usd_per_kwh: e.parse("zeta_usd_per_kwh")?,
        initial_kwh: e.parse("s0_kwh")?,
    };
    storage.validate()?;
    if kind.uses_storage() {
        if !storage.is_present() {
            return Err(InputError::Invalid(format!("{kind} needs storage: set c_s_kwh > 0")));
        }
    } else if storage.capacity_kwh != 0.0
        || storage.charge_kw != 0.0
        || storage.discharge_kw != 0.0
        || storage.initial_kwh != 0.0
    {
        return Err(InputError::Invalid(format!(
            "{kind} has no storage: c_s_kwh, l_in_kw, l_out_kw and s0_kwh must be 0"
        )));
    }
    let policy = RewardPolicy {
        delta: e.parse("delta")?,
        psi: e.parse("psi")?,
        d_max: e.parse("d_max")?,
        rho: 0.0,
    };
    policy.validate()?;

    let tau: usize = e.parse("tau")?;
    if tau == 0 {
        return Err(InputError::Invalid("tau must be at least 1".into()));
    }
    let slot_hours: f64 = e.parse("slot_hours")?;
    if !(slot_hours.is_finite() && slot_hours > 0.0) {
        return Err(InputError::Invalid("slot_hours must be positive".into()));
    }
    Ok(ScenarioConfig {
        kind,
        tau,
        slot_hours,
        classes,
        params,
        storage,
        policy,
        trace_file: PathBuf::from(e.raw("trace_file")?.1),
        tariff_file: PathBuf::from(e.raw("tariff_file")?.1),
    })
}

fn open(path: &Path) -> Result<File, InputError> {
    File::open(path).map_err(|source| InputError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file<T>(path: &Path, r: Result<T, InputError>) -> Result<T, InputError> {
    r.map_err(|e| InputError::InFile {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Loads a config file and the trace and tariff it points to. Relative
/// paths are taken from the config file's directory.
pub fn load_scenario(path: &Path, tariff: TariffOptions) -> Result<(ScenarioConfig, Instance), InputError> {
    let mut config = in_file(path, load_config(open(path)?))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    config.trace_file = dir.join(&config.trace_file);
    config.tariff_file = dir.join(&config.tariff_file);

    let trace = in_file(
        &config.trace_file,
        load_trace(open(&config.trace_file)?, &config.classes, config.slot_hours),
    )?;
    let pricing = in_file(
        &config.tariff_file,
        load_tariff(open(&config.tariff_file)?, config.tau, tariff),
    )?;
    let instance = in_file(path, config.instance(trace, pricing))?;
    Ok((config, instance))
}
