use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use chiller_ddo::baselining::{fit_baseline, savings, SavingsReport};
use chiller_ddo::control::{ControllerContext, ControllerRegistry};
use chiller_ddo::enrich::EnrichmentPlan;
use chiller_ddo::optimize::{percentile_bounds, DdoSettings, OptimizationResult, SolverRegistry};
use chiller_ddo::simplant::{simulate, Scenario};
use chiller_ddo::surrogate::{train_graph, MlpConfig, ModelBundle, OperatingPoint, TrainConfig};
use chiller_ddo::telemetry::{clean_records, read_records, CleanConfig, RecordStore};

use crate::config::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "plantd", version, about = "Chiller plant simulator, model training and optimizer service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario under a controller and write telemetry.
    Simulate(SimulateArgs),
    /// Add daily enrichment windows to a scenario.
    Enrich(EnrichArgs),
    /// Clean telemetry, train the model graph and write a bundle.
    Train(TrainArgs),
    /// Solve once for a telemetry record and print the result.
    Optimize(OptimizeArgs),
    /// Run the control service.
    Serve(ServeArgs),
    /// Fit a baseline on one run and report savings of another.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON; the built-in scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario length.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub days: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "fixed-vsd")]
    pub controller: String,
    /// Controller parameters as JSON.
    #[arg(long)]
    pub params: Option<String>,
    /// Model bundle, required by the `ddo` controller.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = chiller_ddo::enrich::DEFAULT_WINDOWS_PER_DAY)]
    pub windows: usize,
    /// Window length in minutes.
    #[arg(long, default_value_t = chiller_ddo::enrich::DEFAULT_WINDOW_MINUTES)]
    pub duration: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub telemetry: PathBuf,
    /// Scenario whose enrichment windows bound the optimizer's predicted quantities.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 3)]
    pub days_per_fold: u64,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the MAPE table here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub telemetry: PathBuf,
    /// Record to solve for; the last one when omitted.
    #[arg(long)]
    pub at: Option<u64>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = "cobyla")]
    pub solver: String,
    #[arg(long)]
    pub solver_params: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config JSON; overridden by PLANTD_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Un-optimized telemetry the baseline model is fitted on.
    #[arg(long)]
    pub baseline: PathBuf,
    /// Telemetry to measure savings on.
    #[arg(long)]
    pub optimized: PathBuf,
    /// Also write the report here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn load_scenario(path: Option<&Path>) -> anyhow::Result<Scenario> {
    Ok(match path {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    })
}

fn parse_json(text: Option<&str>, what: &str) -> anyhow::Result<Value> {
    match text {
        Some(t) => serde_json::from_str(t).with_context(|| format!("parsing {what}")),
        None => Ok(Value::Null),
    }
}

pub fn simulate_cmd(a: &SimulateArgs) -> anyhow::Result<usize> {
    let mut scenario = load_scenario(a.scenario.as_deref())?;
    if let Some(d) = a.days {
        scenario.days = d;
    }
    if let Some(s) = a.seed {
        scenario.seed = s;
    }
    scenario.validate()?;
    let graph = match &a.bundle {
        Some(p) => Some(Arc::new(ModelBundle::load(p)?.graph)),
        None => None,
    };
    let solvers = SolverRegistry::default();
    let ctx = ControllerContext { scenario: &scenario, graph, solvers: &solvers };
    let params = parse_json(a.params.as_deref(), "--params")?;
    let mut controller = ControllerRegistry::default().build(&a.controller, &params, &ctx)?;
    let records = simulate(&scenario, controller.as_mut(), scenario.duration_minutes())?;
    let n = records.len();
    let mut store = RecordStore::create(&a.out)?;
    for r in records {
        store.append(r)?;
    }
    store.flush()?;
    Ok(n)
}

pub fn enrich_cmd(a: &EnrichArgs) -> anyhow::Result<Scenario> {
    let mut scenario = load_scenario(a.scenario.as_deref())?;
    let mut plan = EnrichmentPlan::daily(scenario.days, a.windows, a.duration, a.seed)?;
    if let Some(existing) = &scenario.enrichment {
        plan.ranges = existing.ranges;
        plan.redraw_minutes = existing.redraw_minutes;
        for w in &existing.windows {
            plan.add_window(*w)?;
        }
    }
    plan.validate(&scenario.plant.speed)?;
    scenario.enrichment = Some(plan);
    std::fs::write(&a.out, serde_json::to_string_pretty(&scenario)?).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(scenario)
}

pub fn train_cmd(a: &TrainArgs) -> anyhow::Result<ModelBundle> {
    let raw = read_records(&a.telemetry)?;
    let cleaned = clean_records(&raw, &CleanConfig::default());
    tracing::info!("{} records, {} dropouts and {} outliers removed", raw.len(), cleaned.dropouts, cleaned.outliers);
    let plan = match &a.scenario {
        Some(p) => Scenario::load(p)?.enrichment,
        None => None,
    };
    let cfg = TrainConfig { folds: a.folds, days_per_fold: a.days_per_fold, mlp: MlpConfig::default() };
    let (graph, report) = train_graph(&cleaned.records, &cfg)?;
    let bounds = percentile_bounds(&cleaned.records, plan.as_ref(), 5.0, 95.0);
    let table = report.to_table();
    if let Some(p) = &a.report {
        std::fs::write(p, &table).with_context(|| format!("writing {}", p.display()))?;
    }
    let bundle = ModelBundle::new(graph, bounds, Some(report));
    bundle.save(&a.out)?;
    Ok(bundle)
}

pub fn optimize_cmd(a: &OptimizeArgs) -> anyhow::Result<OptimizationResult> {
    let bundle = ModelBundle::load(&a.bundle)?;
    let scenario = load_scenario(a.scenario.as_deref())?;
    let records = read_records(&a.telemetry)?;
    let record = match a.at {
        Some(ts) => records.iter().find(|r| r.ts == ts).with_context(|| format!("no record at minute {ts}"))?,
        None => records.last().context("telemetry is empty")?,
    };
    let solver = SolverRegistry::default().build(&a.solver, &parse_json(a.solver_params.as_deref(), "--solver-params")?)?;
    let settings = DdoSettings { predicted: bundle.bounds, ..DdoSettings::for_plant(&scenario.plant) };
    let problem = chiller_ddo::optimize::OptimizationProblem {
        model: &bundle.graph,
        point: OperatingPoint::of(record),
        bounds: settings.speed,
        predicted: settings.bounds_for(&scenario.plant, record.load_rt),
        start: record.control,
    };
    Ok(solver.solve(&problem)?)
}

pub fn evaluate_cmd(a: &EvaluateArgs) -> anyhow::Result<SavingsReport> {
    let base = read_records(&a.baseline)?;
    let opt = read_records(&a.optimized)?;
    let model = fit_baseline(&base, 0..u64::MAX, &MlpConfig::default())?;
    Ok(savings(&model, &opt))
}

pub fn serve_config(a: &ServeArgs) -> anyhow::Result<ServiceConfig> {
    match ServiceConfig::resolve_path(a.config.clone()) {
        Some(p) => ServiceConfig::load(&p),
        None => Ok(ServiceConfig::default()),
    }
}

/// Runs a parsed command, printing its result to stdout.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let n = simulate_cmd(&a)?;
            println!("wrote {n} records to {}", a.out.display());
        }
        Command::Enrich(a) => {
            let s = enrich_cmd(&a)?;
            let n = s.enrichment.map_or(0, |p| p.windows.len());
            println!("wrote scenario with {n} enrichment windows to {}", a.out.display());
        }
        Command::Train(a) => {
            let bundle = train_cmd(&a)?;
            if let Some(r) = &bundle.report {
                print!("{}", r.to_table());
            }
            println!("wrote bundle to {}", a.out.display());
        }
        Command::Optimize(a) => {
            let result = optimize_cmd(&a)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Serve(a) => {
            let cfg = serve_config(&a)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::serve(cfg))?;
        }
        Command::Evaluate(a) => {
            let report = evaluate_cmd(&a)?;
            let json = report.to_json();
            if let Some(p) = &a.out {
                std::fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
            }
            println!("{json}");
        }
    }
    Ok(())
}
