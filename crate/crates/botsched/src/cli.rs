//! Experiment harness: scenario ingestion from JSON (with a workload
//! generator shorthand), bundled fixtures, single-plan runs and budget
//! sweeps with CSV output.
//!
//! Sweep output is byte-deterministic by default: the `schedule_wall_ms`
//! column is written as 0 unless timings are explicitly requested, since
//! measured wall time varies between runs.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{mi_plan, mp_plan};
use crate::evaluator::evaluate;
use crate::heuristic::{find_plan, find_plan_traced, SchedulerResult, TraceEntry};
use crate::model::{
    validate_scenario, Application, ExecutionPlan, InstanceType, Money, PlanReport, Scenario,
    ScenarioViolation, Seconds, Task, DEFAULT_BILLING_QUANTUM_S,
};
use crate::oracle::{brute_force_optimal, OracleError, OracleLimits};

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// On-disk scenario document. Tasks come from the `workload` section: one
/// entry per application with a task count and a size distribution, either
/// an explicit list of sizes or the shorthand `"uniform-levels(lo,hi)"`
/// expanding to equal counts of each integer size in `lo..=hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub applications: Vec<AppEntry>,
    pub instance_types: Vec<TypeEntry>,
    #[serde(default)]
    pub workload: Vec<WorkloadEntry>,
    #[serde(default)]
    pub budget: Money,
    #[serde(default)]
    pub startup_overhead_s: Seconds,
    #[serde(default = "default_quantum")]
    pub billing_quantum_s: Seconds,
}

fn default_quantum() -> Seconds {
    DEFAULT_BILLING_QUANTUM_S
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppEntry {
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeEntry {
    pub name: String,
    pub cost_per_hour: Money,
    pub perf: Vec<Seconds>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkloadEntry {
    pub app: String,
    pub count: usize,
    pub sizes: SizeSpec,
}

/// Either an explicit size list or a distribution pattern string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    Pattern(String),
    Explicit(Vec<u64>),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{path}: {message}")]
    Workload { path: String, message: String },
    #[error("{path}: invalid scenario: {}", format_scenario_violations(.violations))]
    Invalid { path: String, violations: Vec<ScenarioViolation> },
    #[error("no such file or bundled scenario: {0} (bundled: {})", BUILTIN_NAMES.join(", "))]
    NotFound(String),
}

fn format_scenario_violations(violations: &[ScenarioViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Bundled scenario names accepted anywhere a scenario path is.
pub const BUILTIN_NAMES: [&str; 3] = ["table1", "table1-small", "paper-4g"];

/// Loads a scenario from a JSON file, or by bundled fixture name when no
/// such file exists. The result is always validated.
pub fn load_scenario(path_or_name: &str) -> Result<Scenario, LoadError> {
    if Path::new(path_or_name).is_file() {
        let text = std::fs::read_to_string(path_or_name).map_err(|source| LoadError::Io {
            path: path_or_name.to_string(),
            source,
        })?;
        return parse_scenario_str(&text, path_or_name);
    }
    match builtin_scenario_file(path_or_name) {
        Some(file) => expand_scenario(&file, path_or_name),
        None => Err(LoadError::NotFound(path_or_name.to_string())),
    }
}

/// Parses and validates a scenario document from a JSON string. `origin` is
/// used in diagnostics only.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<Scenario, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|source| LoadError::Parse {
        path: origin.to_string(),
        source,
    })?;
    expand_scenario(&file, origin)
}

/// Expands the workload generator and validates the resulting scenario.
pub fn expand_scenario(file: &ScenarioFile, origin: &str) -> Result<Scenario, LoadError> {
    let workload_err = |message: String| LoadError::Workload {
        path: origin.to_string(),
        message,
    };

    let applications: Vec<Application> = file
        .applications
        .iter()
        .enumerate()
        .map(|(id, entry)| Application { id, name: entry.name.clone() })
        .collect();
    let instance_types: Vec<InstanceType> = file
        .instance_types
        .iter()
        .enumerate()
        .map(|(id, entry)| InstanceType {
            id,
            name: entry.name.clone(),
            cost_per_hour: entry.cost_per_hour,
            perf: entry.perf.clone(),
        })
        .collect();

    let mut tasks: Vec<Task> = Vec::new();
    for entry in &file.workload {
        let app_id = applications
            .iter()
            .position(|app| app.name == entry.app)
            .ok_or_else(|| workload_err(format!("workload names unknown application {:?}", entry.app)))?;
        let sizes = expand_sizes(entry).map_err(workload_err)?;
        for size in sizes {
            tasks.push(Task { id: tasks.len(), app_id, size });
        }
    }

    let scenario = Scenario {
        applications,
        tasks,
        instance_types,
        budget: file.budget,
        startup_overhead_s: file.startup_overhead_s,
        billing_quantum_s: file.billing_quantum_s,
    };
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        return Err(LoadError::Invalid { path: origin.to_string(), violations });
    }
    Ok(scenario)
}

fn expand_sizes(entry: &WorkloadEntry) -> Result<Vec<u64>, String> {
    match &entry.sizes {
        SizeSpec::Explicit(sizes) => {
            if sizes.len() != entry.count {
                return Err(format!(
                    "workload for {:?} lists {} sizes but count is {}",
                    entry.app,
                    sizes.len(),
                    entry.count
                ));
            }
            Ok(sizes.clone())
        }
        SizeSpec::Pattern(pattern) => {
            let (lo, hi) = parse_uniform_levels(pattern).ok_or_else(|| {
                format!(
                    "unknown size distribution {:?} for {:?}; expected uniform-levels(lo,hi)",
                    pattern, entry.app
                )
            })?;
            if lo == 0 || hi < lo {
                return Err(format!("invalid size range in {:?}", pattern));
            }
            let levels = (hi - lo + 1) as usize;
            let base = entry.count / levels;
            let extra = entry.count % levels;
            let mut sizes = Vec::with_capacity(entry.count);
            for (i, size) in (lo..=hi).enumerate() {
                let n = base + usize::from(i < extra);
                sizes.extend(std::iter::repeat(size).take(n));
            }
            Ok(sizes)
        }
    }
}

fn parse_uniform_levels(pattern: &str) -> Option<(u64, u64)> {
    let rest = pattern.trim().strip_prefix("uniform-levels(")?;
    let inner = rest.strip_suffix(')')?;
    let (lo, hi) = inner.split_once(',')?;
    Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?))
}

// ---------------------------------------------------------------------------
// Bundled fixtures
// ---------------------------------------------------------------------------

/// The bundled scenario documents. `table1` is the four-type catalog with
/// three applications of 250 tasks each, sizes 1..=5 in equal counts;
/// `table1-small` is the same at 25 tasks per application; `paper-4g` is the
/// two-type, ten-task worked example with budget 2.
pub fn builtin_scenario_file(name: &str) -> Option<ScenarioFile> {
    match name {
        "table1" => Some(table1_file(250)),
        "table1-small" => Some(table1_file(25)),
        "paper-4g" => Some(ScenarioFile {
            applications: vec![AppEntry { name: "A1".into() }],
            instance_types: vec![
                TypeEntry { name: "it1".into(), cost_per_hour: 2, perf: vec![8] },
                TypeEntry { name: "it2".into(), cost_per_hour: 1, perf: vec![10] },
            ],
            workload: vec![WorkloadEntry {
                app: "A1".into(),
                count: 10,
                sizes: SizeSpec::Pattern("uniform-levels(1,1)".into()),
            }],
            budget: 2,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        }),
        _ => None,
    }
}

fn table1_file(tasks_per_app: usize) -> ScenarioFile {
    let apps = ["A1", "A2", "A3"];
    ScenarioFile {
        applications: apps.iter().map(|&name| AppEntry { name: name.into() }).collect(),
        instance_types: vec![
            TypeEntry { name: "it1".into(), cost_per_hour: 5, perf: vec![20, 24, 22] },
            TypeEntry { name: "it2".into(), cost_per_hour: 10, perf: vec![11, 13, 12] },
            TypeEntry { name: "it3".into(), cost_per_hour: 10, perf: vec![10, 15, 9] },
            TypeEntry { name: "it4".into(), cost_per_hour: 10, perf: vec![10, 9, 12] },
        ],
        workload: apps
            .iter()
            .map(|&name| WorkloadEntry {
                app: name.into(),
                count: tasks_per_app,
                sizes: SizeSpec::Pattern("uniform-levels(1,5)".into()),
            })
            .collect(),
        budget: 0,
        startup_overhead_s: 0,
        billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
    }
}

// ---------------------------------------------------------------------------
// Running schedulers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Heuristic,
    Mi,
    Mp,
    Oracle,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::Heuristic,
        SchedulerKind::Mi,
        SchedulerKind::Mp,
        SchedulerKind::Oracle,
    ];
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SchedulerKind::Heuristic => "heuristic",
            SchedulerKind::Mi => "mi",
            SchedulerKind::Mp => "mp",
            SchedulerKind::Oracle => "oracle",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heuristic" => Ok(SchedulerKind::Heuristic),
            "mi" => Ok(SchedulerKind::Mi),
            "mp" => Ok(SchedulerKind::Mp),
            "oracle" => Ok(SchedulerKind::Oracle),
            other => Err(format!(
                "unknown scheduler {other:?}; expected heuristic, mi, mp or oracle"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("{0}")]
    Spec(String),
}

/// Runs one scheduler on a scenario.
pub fn run_scheduler(
    kind: SchedulerKind,
    s: &Scenario,
    limits: &OracleLimits,
    traced: bool,
) -> Result<SchedulerResult, HarnessError> {
    Ok(match kind {
        SchedulerKind::Heuristic => {
            if traced {
                find_plan_traced(s)
            } else {
                find_plan(s)
            }
        }
        SchedulerKind::Mi => mi_plan(s),
        SchedulerKind::Mp => mp_plan(s),
        SchedulerKind::Oracle => brute_force_optimal(s, limits)?,
    })
}

/// Serializable outcome of a single `plan`/`oracle` run.
#[derive(Debug, Serialize)]
pub struct PlanRun {
    pub scenario: String,
    pub scheduler: String,
    pub budget: Money,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PlanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<SlotSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

#[derive(Debug, Serialize)]
pub struct SlotSummary {
    pub id: usize,
    pub type_id: usize,
    pub type_name: String,
    pub task_ids: Vec<usize>,
}

/// Runs one scheduler and packages the outcome for JSON emission.
pub fn plan_run(
    scenario_ref: &str,
    kind: SchedulerKind,
    budget_override: Option<Money>,
    limits: &OracleLimits,
    traced: bool,
) -> Result<PlanRun, HarnessError> {
    let mut scenario = load_scenario(scenario_ref)?;
    if let Some(budget) = budget_override {
        scenario.budget = budget;
    }
    let result = run_scheduler(kind, &scenario, limits, traced)?;
    Ok(package_run(scenario_ref, kind, &scenario, result))
}

fn package_run(
    scenario_ref: &str,
    kind: SchedulerKind,
    s: &Scenario,
    result: SchedulerResult,
) -> PlanRun {
    let (feasible, reason, report, slots) = match result.plan() {
        Some(plan) => {
            let report = evaluate(plan, s).expect("scheduler plans are executable");
            let slots = plan
                .slots
                .iter()
                .map(|slot| SlotSummary {
                    id: slot.id,
                    type_id: slot.type_id,
                    type_name: s.instance_types[slot.type_id].name.clone(),
                    task_ids: slot.task_ids.clone(),
                })
                .collect();
            (true, None, Some(report), Some(slots))
        }
        None => {
            let reason = match &result.outcome {
                crate::heuristic::SchedulerOutcome::Infeasible { reason } => Some(reason.clone()),
                crate::heuristic::SchedulerOutcome::Feasible(_) => None,
            };
            (false, reason, None, None)
        }
    };
    PlanRun {
        scenario: scenario_ref.to_string(),
        scheduler: kind.to_string(),
        budget: s.budget,
        feasible,
        reason,
        iterations: result.iterations,
        report,
        slots,
        trace: result.trace,
    }
}

// ---------------------------------------------------------------------------
// Budget sweeps
// ---------------------------------------------------------------------------

/// One budget sweep: every scheduler at every budget over one scenario.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario: String,
    pub budgets: Vec<Money>,
    pub schedulers: Vec<SchedulerKind>,
    /// Write measured scheduling wall time into the CSV instead of 0.
    pub timings: bool,
    pub oracle_limits: OracleLimits,
}

/// One CSV row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub budget: Money,
    pub scheduler: SchedulerKind,
    pub feasible: bool,
    pub cost: Option<Money>,
    pub makespan_s: Option<Seconds>,
    pub vm_counts: Vec<usize>,
    pub wall_ms: u128,
}

#[derive(Debug)]
pub struct SweepOutput {
    /// Instance type names, in catalog order, naming the count columns.
    pub type_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepOutput {
    /// Renders the fixed-header CSV. Infeasible rows leave the metric cells
    /// empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,scheduler,feasible,cost,makespan_s");
        for name in &self.type_names {
            out.push_str(",vm_count_");
            out.push_str(name);
        }
        out.push_str(",schedule_wall_ms\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}", row.budget, row.scheduler, row.feasible));
            match (row.cost, row.makespan_s) {
                (Some(cost), Some(makespan)) => out.push_str(&format!(",{cost},{makespan}")),
                _ => out.push_str(",,"),
            }
            if row.feasible {
                for count in &row.vm_counts {
                    out.push_str(&format!(",{count}"));
                }
            } else {
                for _ in &self.type_names {
                    out.push(',');
                }
            }
            out.push_str(&format!(",{}\n", row.wall_ms));
        }
        out
    }

    /// Comparison summary: mean percentage makespan reduction of the
    /// heuristic against each baseline, over budgets where both were
    /// feasible.
    pub fn summary(&self) -> String {
        let mut lines = Vec::new();
        for baseline in [SchedulerKind::Mi, SchedulerKind::Mp] {
            let mut reductions: Vec<f64> = Vec::new();
            for row in &self.rows {
                if row.scheduler != SchedulerKind::Heuristic || !row.feasible {
                    continue;
                }
                let partner = self.rows.iter().find(|r| {
                    r.budget == row.budget && r.scheduler == baseline && r.feasible
                });
                if let (Some(h), Some(b)) =
                    (row.makespan_s, partner.and_then(|p| p.makespan_s))
                {
                    if b > 0 {
                        reductions.push((b as f64 - h as f64) / b as f64 * 100.0);
                    }
                }
            }
            if !reductions.is_empty() {
                let mean = reductions.iter().sum::<f64>() / reductions.len() as f64;
                lines.push(format!(
                    "heuristic vs {}: mean makespan reduction {:.2}% over {} budgets where both feasible",
                    baseline,
                    mean,
                    reductions.len()
                ));
            }
        }
        if lines.is_empty() {
            lines.push("no comparable (heuristic, baseline) pairs were feasible".to_string());
        }
        lines.join("\n")
    }
}

/// Runs the sweep: one row per (budget, scheduler), in that order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput, HarnessError> {
    if spec.budgets.is_empty() {
        return Err(HarnessError::Spec("budget list is empty".into()));
    }
    if spec.schedulers.is_empty() {
        return Err(HarnessError::Spec("scheduler list is empty".into()));
    }
    let base = load_scenario(&spec.scenario)?;
    let type_names: Vec<String> = base.instance_types.iter().map(|it| it.name.clone()).collect();

    let mut rows = Vec::with_capacity(spec.budgets.len() * spec.schedulers.len());
    for &budget in &spec.budgets {
        let mut scenario = base.clone();
        scenario.budget = budget;
        for &kind in &spec.schedulers {
            let started = Instant::now();
            let result = run_scheduler(kind, &scenario, &spec.oracle_limits, false)?;
            let wall_ms = if spec.timings { started.elapsed().as_millis() } else { 0 };

            let row = match result.plan() {
                Some(plan) => {
                    let report = evaluate(plan, &scenario).expect("scheduler plans are executable");
                    assert!(
                        report.total_cost <= budget,
                        "{kind} produced a feasible plan over budget {budget}"
                    );
                    let vm_counts = type_counts(plan, type_names.len());
                    SweepRow {
                        budget,
                        scheduler: kind,
                        feasible: true,
                        cost: Some(report.total_cost),
                        makespan_s: Some(report.makespan_s),
                        vm_counts,
                        wall_ms,
                    }
                }
                None => SweepRow {
                    budget,
                    scheduler: kind,
                    feasible: false,
                    cost: None,
                    makespan_s: None,
                    vm_counts: vec![0; type_names.len()],
                    wall_ms,
                },
            };
            rows.push(row);
        }
    }
    Ok(SweepOutput { type_names, rows })
}

fn type_counts(plan: &ExecutionPlan, type_count: usize) -> Vec<usize> {
    let mut counts = vec![0; type_count];
    for slot in &plan.slots {
        counts[slot.type_id] += 1;
    }
    counts
}

/// Parses a budget list: either `a..b:step` (inclusive) or comma-separated
/// values.
pub fn parse_budgets(text: &str) -> Result<Vec<Money>, String> {
    let text = text.trim();
    if let Some((range, step)) = text.split_once(':') {
        let (start, stop) = range
            .split_once("..")
            .ok_or_else(|| format!("expected a..b:step, got {text:?}"))?;
        let start: Money = start.trim().parse().map_err(|_| format!("bad budget {start:?}"))?;
        let stop: Money = stop.trim().parse().map_err(|_| format!("bad budget {stop:?}"))?;
        let step: Money = step.trim().parse().map_err(|_| format!("bad step {step:?}"))?;
        if step == 0 {
            return Err("budget step must be positive".into());
        }
        if stop < start {
            return Err(format!("empty budget range {text:?}"));
        }
        Ok((start..=stop).step_by(step as usize).collect())
    } else {
        text.split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| format!("bad budget {:?}", part.trim()))
            })
            .collect()
    }
}

/// Parses `key=value` oracle limits, e.g. `tasks=8,types=3,per_type=8,total=8`.
pub fn parse_limits(text: &str) -> Result<OracleLimits, String> {
    let mut limits = OracleLimits::default();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| format!("bad limit value in {part:?}"))?;
        match key.trim() {
            "tasks" => limits.max_tasks = value,
            "types" => limits.max_types = value,
            "per_type" => limits.max_vms_per_type = value,
            "total" => limits.max_total_vms = value,
            other => {
                return Err(format!(
                    "unknown limit {other:?}; expected tasks, types, per_type or total"
                ))
            }
        }
    }
    Ok(limits)
}
