use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use botsched::cli::{
    load_scenario, parse_budgets, parse_limits, plan_run, run_sweep, SchedulerKind, SweepSpec,
};
use botsched::model::validate_scenario;
use botsched::oracle::OracleLimits;

/// Execution planning for bag-of-tasks workloads on hourly-billed cloud
/// instance types, under a budget.
#[derive(Parser)]
#[command(name = "botsched", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one execution plan with a chosen scheduler.
    Plan(PlanArgs),
    /// Run schedulers over a budget range and emit a CSV of the results.
    Sweep(SweepArgs),
    /// Compute the exact optimum by exhaustive search (small instances only).
    Oracle(OracleArgs),
    /// Check a scenario file and report any violations.
    Validate { scenario: String },
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario file path or bundled name (table1, table1-small, paper-4g).
    scenario: String,
    /// Scheduler: heuristic, mi or mp.
    #[arg(long)]
    scheduler: SchedulerKind,
    /// Budget override; defaults to the scenario file's budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-phase cost/makespan snapshots (heuristic only).
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file path or bundled name.
    scenario: String,
    /// Budgets: a..b:step (inclusive) or a comma-separated list.
    #[arg(long)]
    budgets: String,
    /// Comma-separated subset of heuristic,mi,mp,oracle.
    #[arg(long)]
    schedulers: String,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Write measured scheduling wall time into the CSV. Off by default so
    /// repeated sweeps are byte-identical.
    #[arg(long)]
    timings: bool,
    /// Oracle search limits, e.g. tasks=8,types=3,per_type=8,total=8.
    #[arg(long)]
    limits: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario file path or bundled name.
    scenario: String,
    /// Budget override; defaults to the scenario file's budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Search limits, e.g. tasks=8,types=3,per_type=8,total=8.
    #[arg(long)]
    limits: Option<String>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Plan(args) => {
            if args.scheduler == SchedulerKind::Oracle {
                return Err("use the `oracle` subcommand for exhaustive search".into());
            }
            let run = plan_run(
                &args.scenario,
                args.scheduler,
                args.budget,
                &OracleLimits::default(),
                args.trace,
            )
            .map_err(|e| e.to_string())?;
            emit_json(&run, args.out.as_deref())
        }
        Command::Sweep(args) => {
            let spec = SweepSpec {
                scenario: args.scenario,
                budgets: parse_budgets(&args.budgets)?,
                schedulers: parse_schedulers(&args.schedulers)?,
                timings: args.timings,
                oracle_limits: match &args.limits {
                    Some(text) => parse_limits(text)?,
                    None => OracleLimits::default(),
                },
            };
            let output = run_sweep(&spec).map_err(|e| e.to_string())?;
            std::fs::write(&args.out, output.to_csv())
                .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;
            println!("{}", output.summary());
            Ok(())
        }
        Command::Oracle(args) => {
            let limits = match &args.limits {
                Some(text) => parse_limits(text)?,
                None => OracleLimits::default(),
            };
            let run = plan_run(
                &args.scenario,
                SchedulerKind::Oracle,
                args.budget,
                &limits,
                false,
            )
            .map_err(|e| e.to_string())?;
            emit_json(&run, args.out.as_deref())
        }
        Command::Validate { scenario } => {
            // load_scenario already validates; reaching Ok means no findings.
            let s = load_scenario(&scenario).map_err(|e| e.to_string())?;
            debug_assert!(validate_scenario(&s).is_empty());
            println!(
                "ok: {} applications, {} tasks, {} instance types",
                s.applications.len(),
                s.tasks.len(),
                s.instance_types.len()
            );
            Ok(())
        }
    }
}

fn parse_schedulers(text: &str) -> Result<Vec<SchedulerKind>, String> {
    text.split(',')
        .map(|part| part.trim().parse())
        .collect::<Result<Vec<_>, _>>()
}

fn emit_json(run: &botsched::cli::PlanRun, out: Option<&std::path::Path>) -> Result<(), String> {
    let json = serde_json::to_string_pretty(run).expect("plan runs serialize");
    match out {
        Some(path) => std::fs::write(path, json.as_bytes())
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}
