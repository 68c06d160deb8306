//! Command-line front end. Schedule files use the solution format read by
//! [`import_solution`], so schedules written here and by external solvers are
//! interchangeable.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::heuristic::{qin_modified, ThresholdPolicy};
use crate::metrics::{compare, summarize, write_profile_csvs, DEFAULT_DT};
use crate::milp::{
    build_beb_model, export_mps_with, import_solution, write_solution, BuildOptions, FinalChargeMode, ModelIR,
    MpsFormat,
};
use crate::scenario::{generate_scenario, load_scenario, save_scenario, GeneratorParams, Scenario};
use crate::schedule::Schedule;
use crate::solver::{solve_exact, solve_via_export_with, ExternalOptions, SearchLimits};
use crate::validator::{validate_schedule_with, ValidationOptions, DEFAULT_TOL};

/// Default command template for `solve` when neither `--exact` nor `--via` is given.
pub const SOLVER_ENV: &str = "BEBSCHED_SOLVER";

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VIOLATIONS: u8 = 2;
pub const EXIT_NO_SOLUTION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "bebsched", version, about = "Battery-electric bus charge scheduling")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic scenario.
    Generate(GenerateArgs),
    /// Parse and check a scenario file.
    ValidateScenario {
        scenario: PathBuf,
    },
    /// Write the charging model as MPS.
    Export(ExportArgs),
    /// Solve a scenario and write a schedule file.
    Solve(SolveArgs),
    /// Run the threshold heuristic and write a schedule file.
    Qin(QinArgs),
    /// Check a schedule against every constraint family.
    Validate(ValidateArgs),
    /// Write profile CSVs and a summary or comparison report.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 4)]
    pub buses: usize,
    #[arg(long, default_value_t = 3)]
    pub visits_per_bus: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Charger rates in kW.
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 100.0, 400.0])]
    pub chargers: Vec<f64>,
    /// Idle queues; one per bus when omitted.
    #[arg(long)]
    pub idle_count: Option<usize>,
    #[arg(long, default_value_t = 24.0)]
    pub horizon_hours: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Fixed,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FinalChargeArg {
    OnArrival,
    AfterCharge,
}

impl From<FinalChargeArg> for FinalChargeMode {
    fn from(a: FinalChargeArg) -> Self {
        match a {
            FinalChargeArg::OnArrival => FinalChargeMode::OnArrival,
            FinalChargeArg::AfterCharge => FinalChargeMode::AfterCharge,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = FinalChargeArg::OnArrival)]
    pub final_charge: FinalChargeArg,
    /// Fix the order of each bus's own visits.
    #[arg(long)]
    pub presolve_same_bus: bool,
}

impl ModelArgs {
    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            big_m: None,
            presolve_same_bus_order: self.presolve_same_bus,
            final_charge: self.final_charge.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Fixed)]
    pub format: FormatArg,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Grid search; small instances only.
    #[arg(long, conflicts_with = "via")]
    pub exact: bool,
    /// Solver command with `{mps}` and `{sol}` placeholders.
    #[arg(long)]
    pub via: Option<String>,
    /// Grid step in seconds.
    #[arg(long, default_value_t = 300.0)]
    pub grid: f64,
    #[arg(long, default_value_t = 50_000_000)]
    pub max_nodes: u64,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct QinArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub low: Option<f64>,
    #[arg(long)]
    pub medium: Option<f64>,
    #[arg(long)]
    pub high: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub scenario: PathBuf,
    pub schedule: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_enum, default_value_t = FinalChargeArg::OnArrival)]
    pub final_charge: FinalChargeArg,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub scenario: PathBuf,
    pub schedule: PathBuf,
    /// Second schedule to compare against the first.
    pub other: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Sampling step in seconds.
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long)]
    pub json: bool,
}

/// Runs one command and returns the process exit code.
pub fn run(config: RunConfig) -> Result<u8> {
    match config.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::ValidateScenario { scenario } => {
            let s = read_scenario(&scenario)?;
            println!(
                "ok: {} buses, {} visits, {} queues, hash {}",
                s.bus_count(),
                s.visit_count(),
                s.queue_count(),
                s.content_hash()
            );
            Ok(EXIT_OK)
        }
        Command::Export(a) => cmd_export(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Qin(a) => cmd_qin(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Metrics(a) => cmd_metrics(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<u8> {
    let params = GeneratorParams {
        buses: a.buses,
        visits_per_bus: a.visits_per_bus,
        horizon_s: a.horizon_hours * 3600.0,
        idle_count: a.idle_count,
        charger_rates_kw: a.chargers.clone(),
        ..GeneratorParams::default()
    };
    let scenario = generate_scenario(&params, a.seed)?;
    save_scenario(&scenario, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(EXIT_OK)
}

pub fn cmd_export(a: &ExportArgs) -> Result<u8> {
    let scenario = read_scenario(&a.scenario)?;
    let model = build_beb_model(&scenario, &a.model.build_options())?;
    let format = match a.format {
        FormatArg::Fixed => MpsFormat::Fixed,
        FormatArg::Free => MpsFormat::Free,
    };
    write_file(&a.out, &export_mps_with(&model, format)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let scenario = read_scenario(&a.scenario)?;
    let options = a.model.build_options();
    let model = build_beb_model(&scenario, &options)?;
    let template = match (&a.via, a.exact) {
        (Some(t), _) => Some(t.clone()),
        (None, true) => None,
        (None, false) => match std::env::var(SOLVER_ENV) {
            Ok(t) if !t.trim().is_empty() => Some(t),
            _ => bail!("give --exact or --via, or set {SOLVER_ENV}"),
        },
    };
    let schedule = match template {
        Some(t) => {
            let ext = ExternalOptions {
                build: options,
                ..ExternalOptions::default()
            };
            solve_via_export_with(&scenario, &t, &ext)?
        }
        None => {
            if options.final_charge != FinalChargeMode::OnArrival {
                bail!("--exact supports --final-charge on-arrival only");
            }
            let limits = SearchLimits {
                max_nodes: a.max_nodes,
                time_limit_s: a.time_limit,
                grid_step_s: a.grid,
                parallel: a.parallel,
            };
            let out = solve_exact(&scenario, &limits)?;
            log::info!("{} nodes in {:?}", out.nodes, out.elapsed);
            out.schedule
        }
    };
    write_schedule(&model, &scenario, &schedule, &a.out)?;
    eprintln!("{}", schedule.status);
    Ok(if schedule.has_plan() { EXIT_OK } else { EXIT_NO_SOLUTION })
}

pub fn cmd_qin(a: &QinArgs) -> Result<u8> {
    let scenario = read_scenario(&a.scenario)?;
    let mut policy = ThresholdPolicy::default();
    policy.low = a.low.unwrap_or(policy.low);
    policy.medium = a.medium.unwrap_or(policy.medium);
    policy.high = a.high.unwrap_or(policy.high);
    let out = qin_modified(&scenario, &policy)?;
    let model = build_beb_model(&scenario, &BuildOptions::default())?;
    write_schedule(&model, &scenario, &out.schedule, &a.out)?;
    Ok(EXIT_OK)
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<u8> {
    let scenario = read_scenario(&a.scenario)?;
    let options = BuildOptions {
        final_charge: a.final_charge.into(),
        ..BuildOptions::default()
    };
    let schedule = read_schedule(&scenario, &options, &a.schedule)?;
    if !schedule.has_plan() {
        eprintln!("schedule has no plan (status {})", schedule.status);
        return Ok(EXIT_NO_SOLUTION);
    }
    let report = validate_schedule_with(
        &scenario,
        &schedule,
        &ValidationOptions {
            tol: a.tol,
            final_charge: options.final_charge,
        },
    )?;
    if a.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_table());
    }
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_VIOLATIONS })
}

pub fn cmd_metrics(a: &MetricsArgs) -> Result<u8> {
    let scenario = read_scenario(&a.scenario)?;
    let options = BuildOptions::default();
    let first = read_schedule(&scenario, &options, &a.schedule)?;
    let second = match &a.other {
        Some(p) => Some(read_schedule(&scenario, &options, p)?),
        None => None,
    };
    for s in std::iter::once(&first).chain(second.as_ref()) {
        if !s.has_plan() {
            eprintln!("schedule has no plan (status {})", s.status);
            return Ok(EXIT_NO_SOLUTION);
        }
    }
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let report = match (&a.other, &second) {
        (Some(other), Some(second)) => {
            let (la, mut lb) = (label(&a.schedule), label(other));
            if lb == la {
                lb.push_str("_b");
            }
            write_profile_csvs(&scenario, &first, &la, a.dt, &a.out_dir)?;
            write_profile_csvs(&scenario, second, &lb, a.dt, &a.out_dir)?;
            let c = compare(&scenario, &first, second, a.dt)?.with_labels(&la, &lb);
            if a.json {
                c.to_json()
            } else {
                c.to_table()
            }
        }
        _ => {
            write_profile_csvs(&scenario, &first, &label(&a.schedule), a.dt, &a.out_dir)?;
            let s = summarize(&scenario, &first, &label(&a.schedule), a.dt)?;
            serde_json::to_string_pretty(&s)? + "\n"
        }
    };
    write_file(&a.out_dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(EXIT_OK)
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    load_scenario(path).with_context(|| format!("reading scenario {}", path.display()))
}

fn read_schedule(scenario: &Scenario, options: &BuildOptions, path: &Path) -> Result<Schedule> {
    if !path.is_file() {
        bail!("schedule file {} not found", path.display());
    }
    let model = build_beb_model(scenario, options)?;
    let imported = import_solution(&model, path).with_context(|| format!("reading schedule {}", path.display()))?;
    for w in &imported.warnings {
        log::warn!("{w}");
    }
    Ok(imported.schedule)
}

fn write_schedule(model: &ModelIR, scenario: &Scenario, schedule: &Schedule, path: &Path) -> Result<()> {
    let arrivals: Vec<f64> = scenario.visits().iter().map(|v| v.arrival_s).collect();
    write_file(path, &write_solution(model, schedule, &arrivals)?)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "schedule".to_string())
}
