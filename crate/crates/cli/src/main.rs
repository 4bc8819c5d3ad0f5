mod report;

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use upmr_core::model::{Instance, Kappa, ScenarioKind, TenantClass};
use upmr_core::oracle::{
    check_tenant_response, grid_suite_instances, kappa_sets, run_grid_suite, run_theorem1_suite,
    run_theorem2_suite, run_tiny_suite, tiny_suite_instances, write_reports, OracleReport,
};
use upmr_core::planner::{round_machines, solve_instance, PlanResult};
use upmr_core::trace_io::{load_scenario, synth_diurnal, write_trace, SynthSpec, TariffOptions};

use report::SummaryRow;

#[derive(Parser)]
#[command(name = "upmr", version, about = "Plan a data center billing cycle under UP, UPS, UPMR and UPMRS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write summary, series, plan and sub-domain CSVs.
    Run {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Read negative energy prices as zero.
        #[arg(long)]
        clamp_negative_prices: bool,
        /// Also report the plan with machine counts rounded up.
        #[arg(long)]
        round_machines: bool,
    },
    /// Solve the four scenarios on a shared trace and tariff.
    Compare {
        #[arg(num_args = 4, required = true)]
        configs: Vec<PathBuf>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        clamp_negative_prices: bool,
    },
    /// Run oracle suites; exits 0 only if every case passes.
    Verify {
        suite: String,
        /// Report CSV; printed to stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write a synthetic diurnal trace.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 168)]
        tau: usize,
        /// Number of classes; class 1 is inelastic, the rest elastic.
        #[arg(long, default_value_t = 3, conflicts_with = "kappas")]
        classes: u32,
        /// Comma-separated κ per class (`inf` for inelastic), in id order.
        #[arg(long, value_delimiter = ',')]
        kappas: Option<Vec<String>>,
        /// Mean requests per slot, summed over classes.
        #[arg(long, default_value_t = 2000.0)]
        base: f64,
        /// Daily swing around the mean, summed over classes.
        #[arg(long, default_value_t = 1200.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.5)]
        elastic_share: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 14.0)]
        peak_hour: f64,
        #[arg(long, default_value_t = 1.0)]
        slot_hours: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Theorem1,
    Theorem2,
    Tenant,
    Grid,
    Tiny,
    All,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Display) -> Failure {
    Failure { code: 2, msg: msg.to_string() }
}

fn runtime(msg: impl Display) -> Failure {
    Failure { code: 1, msg: msg.to_string() }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            clamp_negative_prices,
            round_machines,
        } => cmd_run(&config, &out, TariffOptions { clamp_negative: clamp_negative_prices }, round_machines),
        Command::Compare {
            configs,
            out,
            clamp_negative_prices,
        } => cmd_compare(&configs, &out, TariffOptions { clamp_negative: clamp_negative_prices }),
        Command::Verify { suite, out, seed } => cmd_verify(&suite, out.as_deref(), seed),
        Command::Synth {
            seed,
            tau,
            classes,
            kappas,
            base,
            amplitude,
            elastic_share,
            noise,
            peak_hour,
            slot_hours,
            out,
        } => synth_classes(classes, kappas.as_deref()).and_then(|classes| {
            let spec = SynthSpec {
                slot_hours,
                peak_hour,
                noise,
                ..SynthSpec::with_elastic_share(seed, tau, classes, base, amplitude / base, elastic_share)
            };
            cmd_synth(&spec, base, amplitude, elastic_share, &out)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn solve(instance: &Instance, kind: ScenarioKind) -> Result<PlanResult, Failure> {
    solve_instance(instance, kind).map_err(|e| runtime(format!("{kind}: {e}")))
}

fn prepare_dir(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(io_err(out))
}

fn cmd_run(config: &Path, out: &Path, tariff: TariffOptions, round: bool) -> Result<(), Failure> {
    let (config, instance) = load_scenario(config, tariff).map_err(usage)?;
    let result = solve(&instance, config.kind)?;
    prepare_dir(out)?;

    let mut rows = vec![SummaryRow {
        scenario: config.kind.to_string(),
        rho: result.rho,
        cost: result.cost,
    }];
    if round {
        let (plan, cost) = round_machines(&instance, &result.plan).map_err(runtime)?;
        rows.push(SummaryRow {
            scenario: format!("{}+rounded", config.kind),
            rho: plan.rho,
            cost,
        });
    }
    let path = out.join("summary.csv");
    report::write_summary(&path, &rows).map_err(io_err(&path))?;
    let path = out.join("series.csv");
    report::write_series(&path, &instance, &result).map_err(io_err(&path))?;
    let path = out.join("plan.csv");
    report::write_plan(&path, &instance, &result).map_err(io_err(&path))?;
    let path = out.join("subdomains.csv");
    report::write_subdomains(&path, &instance, &result).map_err(io_err(&path))?;

    report::print_table(&mut io::stdout().lock(), &rows).map_err(runtime)
}

fn cmd_compare(configs: &[PathBuf], out: &Path, tariff: TariffOptions) -> Result<(), Failure> {
    let mut loaded = Vec::with_capacity(configs.len());
    for path in configs {
        loaded.push(load_scenario(path, tariff).map_err(usage)?);
    }
    let order = [ScenarioKind::Up, ScenarioKind::Ups, ScenarioKind::Upmr, ScenarioKind::Upmrs];
    let mut kinds: Vec<ScenarioKind> = loaded.iter().map(|(c, _)| c.kind).collect();
    kinds.sort_by_key(|k| order.iter().position(|o| o == k));
    if kinds != order {
        let given: Vec<String> = loaded.iter().map(|(c, _)| c.kind.to_string()).collect();
        return Err(usage(format!("compare needs exactly UP, UPS, UPMR and UPMRS; got {}", given.join(", "))));
    }
    let (_, first) = &loaded[0];
    for ((c, inst), path) in loaded.iter().zip(configs).skip(1) {
        if inst.trace != first.trace || inst.pricing != first.pricing {
            return Err(usage(format!(
                "{} ({}) does not share the trace and tariff of {}",
                path.display(),
                c.kind,
                configs[0].display()
            )));
        }
    }
    prepare_dir(out)?;

    let mut rows = Vec::new();
    for kind in order {
        let (_, instance) = loaded.iter().find(|(c, _)| c.kind == kind).expect("checked above");
        let result = solve(instance, kind)?;
        let path = out.join(report::series_name(kind));
        report::write_series(&path, instance, &result).map_err(io_err(&path))?;
        rows.push(SummaryRow {
            scenario: kind.to_string(),
            rho: result.rho,
            cost: result.cost,
        });
    }
    let path = out.join("summary.csv");
    report::write_summary(&path, &rows).map_err(io_err(&path))?;
    report::print_table(&mut io::stdout().lock(), &rows).map_err(runtime)
}

const KAPPA_SETS: usize = 20;
const THEOREM1_SAMPLES: usize = 100;
const TENANT_SAMPLES: usize = 1000;
const GRID_INSTANCES: usize = 25;
const TINY_INSTANCES: usize = 10;

fn run_suite(suite: Suite, seed: u64) -> Result<Vec<OracleReport>, Failure> {
    let sets = || kappa_sets(seed, KAPPA_SETS);
    Ok(match suite {
        Suite::Theorem1 => run_theorem1_suite(&sets(), THEOREM1_SAMPLES),
        Suite::Theorem2 => run_theorem2_suite(&sets()),
        Suite::Tenant => check_tenant_response(TENANT_SAMPLES, seed),
        Suite::Grid => run_grid_suite(&grid_suite_instances(seed, GRID_INSTANCES)).map_err(runtime)?,
        Suite::Tiny => run_tiny_suite(&tiny_suite_instances(seed, TINY_INSTANCES)).map_err(runtime)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in [Suite::Theorem1, Suite::Theorem2, Suite::Tenant, Suite::Grid, Suite::Tiny] {
                all.extend(run_suite(s, seed)?);
            }
            all
        }
    })
}

fn cmd_verify(suite: &str, out: Option<&Path>, seed: u64) -> Result<(), Failure> {
    let suite = Suite::from_str(suite, true).map_err(|_| {
        usage(format!("unknown suite {suite:?}; expected theorem1, theorem2, tenant, grid, tiny or all"))
    })?;
    let reports = run_suite(suite, seed)?;
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(io_err(path))?;
            write_reports(file, &reports).map_err(runtime)?;
        }
        None => write_reports(io::stdout().lock(), &reports).map_err(runtime)?,
    }
    let failed: Vec<&OracleReport> = reports.iter().filter(|r| !r.pass).collect();
    let mut err = io::stderr().lock();
    let _ = writeln!(err, "{} cases, {} failed", reports.len(), failed.len());
    for r in failed.iter().take(10) {
        let _ = writeln!(err, "  {}: gap {:.3e} {}", r.case, r.rel_gap, r.note.as_deref().unwrap_or(""));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(runtime(format!("{} oracle cases failed", failed.len())))
    }
}

fn synth_classes(count: u32, kappas: Option<&[String]>) -> Result<Vec<TenantClass>, Failure> {
    match kappas {
        Some(list) => list
            .iter()
            .zip(1..)
            .map(|(k, id)| {
                k.parse::<Kappa>()
                    .map(|kappa| TenantClass::new(id, kappa))
                    .map_err(|e| usage(format!("--kappas: {e}")))
            })
            .collect(),
        None if count == 0 => Err(usage("--classes must be at least 1")),
        None => Ok((1..=count)
            .map(|id| {
                let kappa = if id == 1 {
                    Kappa::Inelastic
                } else {
                    Kappa::Finite(0.1 + 0.01 * f64::from(id - 2))
                };
                TenantClass::new(id, kappa)
            })
            .collect()),
    }
}

fn cmd_synth(spec: &SynthSpec, base: f64, amplitude: f64, elastic_share: f64, out: &Path) -> Result<(), Failure> {
    if !(base > 0.0 && base.is_finite()) {
        return Err(usage(format!("--base must be positive, got {base}")));
    }
    if !(0.0..=base).contains(&amplitude) {
        return Err(usage(format!("--amplitude {amplitude} must lie between 0 and --base {base}")));
    }
    if !(0.0..=1.0).contains(&elastic_share) {
        return Err(usage(format!("--elastic-share must lie in [0, 1], got {elastic_share}")));
    }
    let trace = synth_diurnal(spec).map_err(usage)?;
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace).map_err(runtime)?;
    fs::write(out, buf).map_err(io_err(out))
}
