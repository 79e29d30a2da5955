//! The budget-constrained scheduling heuristic: provisioning VMs of the best
//! instance type per application, assigning and balancing tasks, consolidating
//! VMs to cut cost, spending leftover budget on extra VMs, splitting VMs that
//! run past one billing quantum, and swapping expensive VMs for more of a
//! cheaper type. [`find_plan`] drives these phases to a fixpoint.
//!
//! Cost accounting inside the phases treats every provisioned VM as hired for
//! at least one billing quantum ([`provisioned_cost`]): a VM that exists is
//! paid for even while idle, so moving a task onto an idle VM is free as long
//! as it stays within the quantum already paid. Reported plans are pruned of
//! idle VMs, where this accounting coincides with [`plan_cost`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    plan_cost, plan_makespan, validate_plan, validate_scenario, Application, ExecutionPlan,
    InstanceType, Money, Scenario, Seconds, SlotId, TaskId, TypeId, VmSlot,
};

/// Safety cap on driver-loop passes; the improvement test alone admits
/// oscillation between two incomparable snapshots.
pub const MAX_FIND_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("no instance type with hourly cost within budget {budget} for application {app}")]
    NoAffordableType { app: AppLabel, budget: Money },
    #[error("cannot assign {tasks} tasks to a plan with no VMs")]
    EmptyPlan { tasks: usize },
}

/// Application id plus name, for readable infeasibility reasons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppLabel {
    pub id: usize,
    pub name: String,
}

impl std::fmt::Display for AppLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (id {})", self.name, self.id)
    }
}

/// Result of one scheduler run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerResult {
    pub outcome: SchedulerOutcome,
    /// Driver-loop passes (for the heuristic), retry rounds (baselines), or
    /// candidate VM sets examined (oracle).
    pub iterations: usize,
    pub trace: Option<Vec<TraceEntry>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerOutcome {
    Feasible(ExecutionPlan),
    Infeasible { reason: String },
}

impl SchedulerResult {
    pub fn plan(&self) -> Option<&ExecutionPlan> {
        match &self.outcome {
            SchedulerOutcome::Feasible(plan) => Some(plan),
            SchedulerOutcome::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.plan().is_some()
    }

    fn infeasible(reason: impl Into<String>, iterations: usize) -> Self {
        SchedulerResult {
            outcome: SchedulerOutcome::Infeasible { reason: reason.into() },
            iterations,
            trace: None,
        }
    }
}

/// One per-phase snapshot recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phase: String,
    pub cost: Money,
    pub makespan: Seconds,
}

/// Plan cost with every provisioned VM charged at least one billing quantum.
/// Differs from [`plan_cost`] only on slots that are idle with zero startup
/// overhead; equal on plans without empty slots.
pub fn provisioned_cost(p: &ExecutionPlan, s: &Scenario) -> Money {
    let ctx = Ctx::new(s);
    WorkPlan::from_plan(p, &ctx).provisioned_cost(&ctx)
}

// ---------------------------------------------------------------------------
// Internal working state
// ---------------------------------------------------------------------------

/// Precomputed scenario context: per-(type, task) execution times.
struct Ctx<'a> {
    s: &'a Scenario,
    /// exec[type_id][task_id]
    exec: Vec<Vec<Seconds>>,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a Scenario) -> Self {
        let exec = s
            .instance_types
            .iter()
            .map(|it| s.tasks.iter().map(|t| it.perf[t.app_id] * t.size).collect())
            .collect();
        Ctx { s, exec }
    }

    fn task_exec(&self, type_id: TypeId, task: TaskId) -> Seconds {
        self.exec[type_id][task]
    }

    fn type_cost(&self, type_id: TypeId) -> Money {
        self.s.instance_types[type_id].cost_per_hour
    }

    fn quantum(&self) -> Seconds {
        self.s.billing_quantum_s
    }

    fn overhead(&self) -> Seconds {
        self.s.startup_overhead_s
    }

    /// Cost of a provisioned VM running for `exec` seconds: at least one
    /// quantum is always charged.
    fn slot_cost(&self, type_id: TypeId, exec: Seconds) -> Money {
        exec.div_ceil(self.quantum()).max(1) * self.type_cost(type_id)
    }
}

#[derive(Debug, Clone)]
struct WorkSlot {
    id: SlotId,
    type_id: TypeId,
    task_ids: Vec<TaskId>,
    exec: Seconds,
}

/// Mutable plan with cached per-slot execution times.
#[derive(Debug, Clone)]
struct WorkPlan {
    slots: Vec<WorkSlot>,
    next_id: SlotId,
}

impl WorkPlan {
    fn new() -> Self {
        WorkPlan { slots: Vec::new(), next_id: 0 }
    }

    fn from_plan(p: &ExecutionPlan, ctx: &Ctx) -> Self {
        let slots: Vec<WorkSlot> = p
            .slots
            .iter()
            .map(|slot| WorkSlot {
                id: slot.id,
                type_id: slot.type_id,
                task_ids: slot.task_ids.clone(),
                exec: ctx.overhead()
                    + slot
                        .task_ids
                        .iter()
                        .map(|&t| ctx.task_exec(slot.type_id, t))
                        .sum::<Seconds>(),
            })
            .collect();
        let next_id = slots.iter().map(|s| s.id + 1).max().unwrap_or(0);
        WorkPlan { slots, next_id }
    }

    fn to_plan(&self) -> ExecutionPlan {
        ExecutionPlan {
            slots: self
                .slots
                .iter()
                .map(|slot| VmSlot {
                    id: slot.id,
                    type_id: slot.type_id,
                    task_ids: slot.task_ids.clone(),
                })
                .collect(),
        }
    }

    fn push_slot(&mut self, type_id: TypeId, ctx: &Ctx) -> usize {
        self.slots.push(WorkSlot {
            id: self.next_id,
            type_id,
            task_ids: Vec::new(),
            exec: ctx.overhead(),
        });
        self.next_id += 1;
        self.slots.len() - 1
    }

    fn add_task(&mut self, slot_idx: usize, task: TaskId, ctx: &Ctx) {
        let slot = &mut self.slots[slot_idx];
        slot.exec += ctx.task_exec(slot.type_id, task);
        slot.task_ids.push(task);
    }

    fn remove_task(&mut self, slot_idx: usize, task: TaskId, ctx: &Ctx) {
        let slot = &mut self.slots[slot_idx];
        let pos = slot
            .task_ids
            .iter()
            .position(|&t| t == task)
            .expect("task must be on the slot it is removed from");
        slot.task_ids.remove(pos);
        slot.exec -= ctx.task_exec(slot.type_id, task);
    }

    fn makespan(&self) -> Seconds {
        self.slots.iter().map(|s| s.exec).max().unwrap_or(0)
    }

    /// Makespan over a subset of slots (by index).
    fn makespan_of(&self, indices: &[usize]) -> Seconds {
        indices.iter().map(|&i| self.slots[i].exec).max().unwrap_or(0)
    }

    fn provisioned_cost(&self, ctx: &Ctx) -> Money {
        self.slots.iter().map(|s| ctx.slot_cost(s.type_id, s.exec)).sum()
    }

    fn prune_empty(&mut self) {
        self.slots.retain(|s| !s.task_ids.is_empty());
    }
}

// ---------------------------------------------------------------------------
// Instance-type selection and initial provisioning
// ---------------------------------------------------------------------------

/// The best instance type for an application: among types whose hourly cost
/// fits the budget, the one with the fastest per-unit time, ties broken by
/// lower cost, then lower id.
pub fn best_type<'a>(
    app: &Application,
    catalog: &'a [InstanceType],
    budget: Money,
) -> Result<&'a InstanceType, ScheduleError> {
    catalog
        .iter()
        .filter(|it| it.cost_per_hour <= budget)
        .min_by_key(|it| (it.perf[app.id], it.cost_per_hour, it.id))
        .ok_or_else(|| ScheduleError::NoAffordableType {
            app: AppLabel { id: app.id, name: app.name.clone() },
            budget,
        })
}

/// Initial provisioning: for every application, hire as many VMs of its best
/// instance type as the whole budget affords. No tasks are assigned yet, and
/// with several applications the combined cost usually exceeds the budget;
/// later phases consolidate.
pub fn initial_plan(s: &Scenario) -> Result<ExecutionPlan, ScheduleError> {
    let ctx = Ctx::new(s);
    let mut plan = WorkPlan::new();
    for app in &s.applications {
        let best = best_type(app, &s.instance_types, s.budget)?;
        let count = s.budget / best.cost_per_hour;
        for _ in 0..count {
            plan.push_slot(best.id, &ctx);
        }
    }
    Ok(plan.to_plan())
}

// ---------------------------------------------------------------------------
// Task assignment
// ---------------------------------------------------------------------------

/// Places every listed task on one VM. Preferred VMs are those whose cost
/// would not grow by taking the task; among them the one executing the task
/// fastest wins, then the least-loaded, then the lowest slot id. When every
/// VM would grow more expensive, the same preferences apply to all VMs.
pub fn assign(
    task_ids: &[TaskId],
    plan: &ExecutionPlan,
    s: &Scenario,
) -> Result<ExecutionPlan, ScheduleError> {
    if plan.slots.is_empty() && !task_ids.is_empty() {
        return Err(ScheduleError::EmptyPlan { tasks: task_ids.len() });
    }
    let ctx = Ctx::new(s);
    let mut work = WorkPlan::from_plan(plan, &ctx);
    let all: Vec<usize> = (0..work.slots.len()).collect();
    assign_into(&mut work, &all, task_ids, &ctx);
    Ok(work.to_plan())
}

fn assign_into(plan: &mut WorkPlan, allowed: &[usize], task_ids: &[TaskId], ctx: &Ctx) {
    for &task in task_ids {
        let keeps_cost = |idx: &&usize| {
            let slot = &plan.slots[**idx];
            let grown = slot.exec + ctx.task_exec(slot.type_id, task);
            ctx.slot_cost(slot.type_id, grown) == ctx.slot_cost(slot.type_id, slot.exec)
        };
        let choice_key = |idx: &usize| {
            let slot = &plan.slots[*idx];
            (ctx.task_exec(slot.type_id, task), slot.exec, slot.id)
        };
        let target = allowed
            .iter()
            .filter(keeps_cost)
            .min_by_key(|idx| choice_key(idx))
            .copied()
            .or_else(|| allowed.iter().min_by_key(|idx| choice_key(idx)).copied())
            .expect("assign requires at least one slot");
        plan.add_task(target, task, ctx);
    }
}

// ---------------------------------------------------------------------------
// Balancing
// ---------------------------------------------------------------------------

/// Evens out load: repeatedly moves one task off the slowest VM when that
/// strictly lowers the makespan without raising the provisioned cost.
pub fn balance(plan: &ExecutionPlan, s: &Scenario) -> ExecutionPlan {
    let ctx = Ctx::new(s);
    let mut work = WorkPlan::from_plan(plan, &ctx);
    let all: Vec<usize> = (0..work.slots.len()).collect();
    balance_within(&mut work, &all, &ctx);
    work.to_plan()
}

/// Balance restricted to a subset of slots: sources and targets both come
/// from `allowed`, and the makespan criterion is evaluated over that subset.
fn balance_within(plan: &mut WorkPlan, allowed: &[usize], ctx: &Ctx) {
    if allowed.len() < 2 {
        return;
    }
    loop {
        let current_makespan = plan.makespan_of(allowed);
        let source = *allowed
            .iter()
            .min_by_key(|&&i| (std::cmp::Reverse(plan.slots[i].exec), plan.slots[i].id))
            .expect("allowed is nonempty");

        // Try the source's tasks from longest to shortest.
        let mut candidates: Vec<TaskId> = plan.slots[source].task_ids.clone();
        let src_type = plan.slots[source].type_id;
        candidates.sort_by_key(|&t| (std::cmp::Reverse(ctx.task_exec(src_type, t)), t));

        let mut moved = false;
        for task in candidates {
            let target = allowed
                .iter()
                .filter(|&&i| i != source)
                .min_by_key(|&&i| {
                    let slot = &plan.slots[i];
                    (ctx.task_exec(slot.type_id, task), slot.exec, slot.id)
                })
                .copied()
                .expect("allowed has at least two slots");

            let src = &plan.slots[source];
            let tgt = &plan.slots[target];
            let src_exec = src.exec - ctx.task_exec(src.type_id, task);
            let tgt_exec = tgt.exec + ctx.task_exec(tgt.type_id, task);

            let cost_before =
                ctx.slot_cost(src.type_id, src.exec) + ctx.slot_cost(tgt.type_id, tgt.exec);
            let cost_after =
                ctx.slot_cost(src.type_id, src_exec) + ctx.slot_cost(tgt.type_id, tgt_exec);

            let new_makespan = allowed
                .iter()
                .map(|&i| {
                    if i == source {
                        src_exec
                    } else if i == target {
                        tgt_exec
                    } else {
                        plan.slots[i].exec
                    }
                })
                .max()
                .unwrap_or(0);

            if new_makespan < current_makespan && cost_after <= cost_before {
                plan.remove_task(source, task, ctx);
                plan.add_task(target, task, ctx);
                moved = true;
                break;
            }
        }
        if !moved {
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Cost reduction by VM removal
// ---------------------------------------------------------------------------

/// Consolidation: repeatedly tries to empty the fastest-finishing VM by
/// moving all of its tasks to other VMs (same-type VMs only in local mode)
/// and removing it. A removal sticks only if the provisioned cost does not
/// grow; otherwise it is rolled back and the VM is never retried.
pub fn reduce(
    plan: &ExecutionPlan,
    s: &Scenario,
    excluded: &BTreeSet<SlotId>,
    local_mode: bool,
) -> ExecutionPlan {
    let ctx = Ctx::new(s);
    let mut work = WorkPlan::from_plan(plan, &ctx);
    reduce_in_place(&mut work, excluded, local_mode, &ctx);
    work.to_plan()
}

fn reduce_in_place(plan: &mut WorkPlan, excluded: &BTreeSet<SlotId>, local_mode: bool, ctx: &Ctx) {
    let mut unremovable: BTreeSet<SlotId> = BTreeSet::new();
    loop {
        let candidate = plan
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| !excluded.contains(&s.id) && !unremovable.contains(&s.id))
            .min_by_key(|(_, s)| (s.exec, s.id))
            .map(|(i, _)| i);
        let Some(cand_idx) = candidate else { return };
        let cand_id = plan.slots[cand_idx].id;
        let cand_type = plan.slots[cand_idx].type_id;

        let receivers: Vec<usize> = (0..plan.slots.len())
            .filter(|&i| i != cand_idx)
            .filter(|&i| !local_mode || plan.slots[i].type_id == cand_type)
            .collect();
        if receivers.is_empty() && !plan.slots[cand_idx].task_ids.is_empty() {
            unremovable.insert(cand_id);
            continue;
        }

        let snapshot = plan.clone();
        let cost_before = plan.provisioned_cost(ctx);

        let mut tasks: Vec<TaskId> = plan.slots[cand_idx].task_ids.clone();
        tasks.sort_by_key(|&t| (std::cmp::Reverse(ctx.task_exec(cand_type, t)), t));
        for task in tasks {
            let target = receivers
                .iter()
                .min_by_key(|&&i| {
                    let slot = &plan.slots[i];
                    (ctx.task_exec(slot.type_id, task), slot.exec, slot.id)
                })
                .copied()
                .expect("nonempty receiver set");
            plan.remove_task(cand_idx, task, ctx);
            plan.add_task(target, task, ctx);
        }
        plan.slots.remove(cand_idx);

        if plan.provisioned_cost(ctx) > cost_before {
            *plan = snapshot;
            unremovable.insert(cand_id);
        }
    }
}

// ---------------------------------------------------------------------------
// Spending leftover budget
// ---------------------------------------------------------------------------

/// Spends remaining budget on extra idle VMs, one at a time. Each round
/// picks, among the still-affordable types, the one with the lowest total
/// execution time over the whole task set, ties broken by lower cost, then
/// lower id. New VMs are admitted at one quantum of their hourly cost.
pub fn add_vms(plan: &ExecutionPlan, s: &Scenario, remaining: Money) -> ExecutionPlan {
    let ctx = Ctx::new(s);
    let mut work = WorkPlan::from_plan(plan, &ctx);
    add_vms_in_place(&mut work, remaining, &ctx);
    work.to_plan()
}

fn add_vms_in_place(plan: &mut WorkPlan, mut remaining: Money, ctx: &Ctx) {
    let totals: Vec<Seconds> = ctx
        .exec
        .iter()
        .map(|per_task| per_task.iter().sum::<Seconds>())
        .collect();
    loop {
        let choice = ctx
            .s
            .instance_types
            .iter()
            .filter(|it| it.cost_per_hour <= remaining)
            .min_by_key(|it| (totals[it.id], it.cost_per_hour, it.id));
        let Some(it) = choice else { return };
        remaining -= it.cost_per_hour;
        plan.push_slot(it.id, ctx);
    }
}

// ---------------------------------------------------------------------------
// Splitting VMs that run past one quantum
// ---------------------------------------------------------------------------

/// Running one VM for two quanta costs the same as two VMs of that type for
/// one quantum each, but the pair finishes sooner. Splits the tasks of any
/// VM running past a quantum across two same-type VMs (longest tasks first,
/// dealt alternately) whenever the budget still holds and the makespan
/// strictly drops.
pub fn keep_under_hour(plan: &ExecutionPlan, s: &Scenario, budget: Money) -> ExecutionPlan {
    let ctx = Ctx::new(s);
    let mut work = WorkPlan::from_plan(plan, &ctx);
    keep_in_place(&mut work, budget, &ctx);
    work.to_plan()
}

fn keep_in_place(plan: &mut WorkPlan, budget: Money, ctx: &Ctx) {
    loop {
        let mut over: Vec<usize> = (0..plan.slots.len())
            .filter(|&i| plan.slots[i].exec > ctx.quantum())
            .collect();
        over.sort_by_key(|&i| (std::cmp::Reverse(plan.slots[i].exec), plan.slots[i].id));

        let makespan_before = plan.makespan();
        let mut accepted = false;
        for idx in over {
            let snapshot = plan.clone();
            let slot_type = plan.slots[idx].type_id;

            let mut tasks: Vec<TaskId> = plan.slots[idx].task_ids.clone();
            tasks.sort_by_key(|&t| (std::cmp::Reverse(ctx.task_exec(slot_type, t)), t));

            for task in &tasks {
                plan.remove_task(idx, *task, ctx);
            }
            let twin = plan.push_slot(slot_type, ctx);
            for (i, task) in tasks.iter().enumerate() {
                let half = if i % 2 == 0 { idx } else { twin };
                plan.add_task(half, *task, ctx);
            }

            if plan.provisioned_cost(ctx) <= budget && plan.makespan() < makespan_before {
                accepted = true;
                break;
            }
            *plan = snapshot;
        }
        if !accepted {
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Replacing expensive VMs with cheaper ones
// ---------------------------------------------------------------------------

/// Trades expensive VMs for a larger number of cheaper ones. For each
/// instance type in the plan, most expensive first, the `batch`
/// longest-running VMs of that type are tentatively cashed in; their cost
/// plus any unspent budget buys as many VMs of a strictly cheaper type as it
/// affords, and the victims' tasks are assigned and balanced across the new
/// VMs. The swap commits only if the budget holds and the makespan strictly
/// drops.
pub fn replace(plan: &ExecutionPlan, s: &Scenario, budget: Money, batch: usize) -> ExecutionPlan {
    assert!(batch >= 1, "replacement batch must be at least 1");
    let ctx = Ctx::new(s);
    let mut work = WorkPlan::from_plan(plan, &ctx);
    replace_in_place(&mut work, budget, batch, &ctx);
    work.to_plan()
}

fn replace_in_place(plan: &mut WorkPlan, budget: Money, batch: usize, ctx: &Ctx) {
    'retry: loop {
        let mut present: Vec<TypeId> = plan.slots.iter().map(|s| s.type_id).collect();
        present.sort_unstable();
        present.dedup();
        present.sort_by_key(|&t| (std::cmp::Reverse(ctx.type_cost(t)), t));

        let makespan_before = plan.makespan();
        let cost_now = plan.provisioned_cost(ctx);
        let unspent = budget.saturating_sub(cost_now);

        for victim_type in present {
            let mut victims: Vec<usize> = (0..plan.slots.len())
                .filter(|&i| plan.slots[i].type_id == victim_type)
                .collect();
            victims.sort_by_key(|&i| (std::cmp::Reverse(plan.slots[i].exec), plan.slots[i].id));
            victims.truncate(batch);

            let freed: Money = victims
                .iter()
                .map(|&i| ctx.slot_cost(plan.slots[i].type_id, plan.slots[i].exec))
                .sum::<Money>()
                + unspent;

            let mut cheaper: Vec<&InstanceType> = ctx
                .s
                .instance_types
                .iter()
                .filter(|it| it.cost_per_hour < ctx.type_cost(victim_type))
                .collect();
            cheaper.sort_by_key(|it| (it.cost_per_hour, it.id));

            for replacement in cheaper {
                let count = (freed / replacement.cost_per_hour) as usize;
                if count == 0 {
                    continue;
                }

                let mut trial = plan.clone();
                let mut orphans: Vec<TaskId> = Vec::new();
                // Highest indices first so removal does not shift the rest.
                let mut by_index = victims.clone();
                by_index.sort_unstable_by(|a, b| b.cmp(a));
                for idx in by_index {
                    orphans.extend(trial.slots[idx].task_ids.iter().copied());
                    trial.slots.remove(idx);
                }
                orphans.sort_unstable();

                let new_indices: Vec<usize> =
                    (0..count).map(|_| trial.push_slot(replacement.id, ctx)).collect();
                assign_into(&mut trial, &new_indices, &orphans, ctx);
                balance_within(&mut trial, &new_indices, ctx);
                trial.prune_empty();

                if trial.provisioned_cost(ctx) <= budget && trial.makespan() < makespan_before {
                    *plan = trial;
                    continue 'retry;
                }
            }
        }
        return;
    }
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Full pipeline: provision per-application best types, assign, locally
/// consolidate; then iterate global consolidation, budget top-up, balancing,
/// quantum splitting and replacement, keeping the best snapshot seen. Stops
/// when an iteration improves neither cost nor makespan.
pub fn find_plan(s: &Scenario) -> SchedulerResult {
    run_find(s, false)
}

/// Same as [`find_plan`] with per-phase trace snapshots attached.
pub fn find_plan_traced(s: &Scenario) -> SchedulerResult {
    run_find(s, true)
}

struct BestSnapshot {
    plan: ExecutionPlan,
    /// (amount over budget, makespan, cost) — lexicographic, lower is better.
    key: (Money, Seconds, Money),
}

impl BestSnapshot {
    fn rank(plan: &ExecutionPlan, s: &Scenario) -> (Money, Seconds, Money) {
        let cost = plan_cost(plan, s).expect("plan references validated scenario");
        let makespan = plan_makespan(plan, s).expect("plan references validated scenario");
        (cost.saturating_sub(s.budget), makespan, cost)
    }

    fn new(plan: ExecutionPlan, s: &Scenario) -> Self {
        let key = Self::rank(&plan, s);
        BestSnapshot { plan, key }
    }

    fn offer(&mut self, plan: &ExecutionPlan, s: &Scenario) {
        let key = Self::rank(plan, s);
        if key < self.key {
            self.plan = plan.clone();
            self.key = key;
        }
    }
}

fn run_find(s: &Scenario, traced: bool) -> SchedulerResult {
    let scenario_issues = validate_scenario(s);
    if !scenario_issues.is_empty() {
        return SchedulerResult::infeasible(
            format!("invalid scenario: {}", scenario_issues[0]),
            0,
        );
    }

    let ctx = Ctx::new(s);
    let mut trace: Vec<TraceEntry> = Vec::new();
    let record = |label: &str, plan: &WorkPlan, trace: &mut Vec<TraceEntry>| {
        if traced {
            trace.push(TraceEntry {
                phase: label.to_string(),
                cost: plan.provisioned_cost(&ctx),
                makespan: plan.makespan(),
            });
        }
    };

    let initial = match initial_plan(s) {
        Ok(plan) => plan,
        Err(err) => return SchedulerResult::infeasible(err.to_string(), 0),
    };
    let mut work = WorkPlan::from_plan(&initial, &ctx);
    record("initial", &work, &mut trace);

    let task_ids: Vec<TaskId> = (0..s.tasks.len()).collect();
    if !task_ids.is_empty() {
        let all: Vec<usize> = (0..work.slots.len()).collect();
        if all.is_empty() {
            // No applications means no tasks; validated above.
            unreachable!("nonempty task list implies at least one application slot");
        }
        assign_into(&mut work, &all, &task_ids, &ctx);
    }
    record("assign", &work, &mut trace);

    let no_exclusions = BTreeSet::new();
    reduce_in_place(&mut work, &no_exclusions, true, &ctx);
    work.prune_empty();
    record("reduce-local", &work, &mut trace);

    let mut stored = work.to_plan();
    let mut best = BestSnapshot::new(stored.clone(), s);
    let mut stored_cost = Money::MAX;
    let mut stored_makespan = Seconds::MAX;

    let mut iterations = 0;
    for _ in 0..MAX_FIND_ITERATIONS {
        iterations += 1;
        let mut work = WorkPlan::from_plan(&stored, &ctx);

        reduce_in_place(&mut work, &no_exclusions, false, &ctx);
        record("reduce-global", &work, &mut trace);

        let remaining = s.budget.saturating_sub(work.provisioned_cost(&ctx));
        add_vms_in_place(&mut work, remaining, &ctx);
        record("add", &work, &mut trace);

        let all: Vec<usize> = (0..work.slots.len()).collect();
        balance_within(&mut work, &all, &ctx);
        record("balance", &work, &mut trace);

        keep_in_place(&mut work, s.budget, &ctx);
        record("keep", &work, &mut trace);

        let cost_now = work.provisioned_cost(&ctx);
        replace_in_place(&mut work, s.budget.max(cost_now), 1, &ctx);
        work.prune_empty();
        record("replace", &work, &mut trace);

        let candidate = work.to_plan();
        let cost = plan_cost(&candidate, s).expect("valid references");
        let makespan = plan_makespan(&candidate, s).expect("valid references");
        best.offer(&candidate, s);

        if cost < stored_cost || makespan < stored_makespan {
            stored = candidate;
            stored_cost = cost;
            stored_makespan = makespan;
        } else {
            break;
        }
    }

    let mut final_plan = best.plan;
    final_plan.prune_empty_slots();
    let cost = plan_cost(&final_plan, s).expect("valid references");
    if cost > s.budget {
        return SchedulerResult {
            outcome: SchedulerOutcome::Infeasible {
                reason: format!("best plan found costs {cost}, budget is {}", s.budget),
            },
            iterations,
            trace: traced.then_some(trace),
        };
    }
    debug_assert!(validate_plan(&final_plan, s).is_empty());
    SchedulerResult {
        outcome: SchedulerOutcome::Feasible(final_plan),
        iterations,
        trace: traced.then_some(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Task, DEFAULT_BILLING_QUANTUM_S};

    fn app(id: usize) -> Application {
        Application { id, name: format!("A{}", id + 1) }
    }

    fn itype(id: TypeId, cost: Money, perf: Vec<Seconds>) -> InstanceType {
        InstanceType { id, name: format!("it{}", id + 1), cost_per_hour: cost, perf }
    }

    fn table_catalog() -> Vec<InstanceType> {
        vec![
            itype(0, 5, vec![20, 24, 22]),
            itype(1, 10, vec![11, 13, 12]),
            itype(2, 10, vec![10, 15, 9]),
            itype(3, 10, vec![10, 9, 12]),
        ]
    }

    fn table_scenario(tasks: Vec<Task>, budget: Money) -> Scenario {
        Scenario {
            applications: vec![app(0), app(1), app(2)],
            tasks,
            instance_types: table_catalog(),
            budget,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        }
    }

    /// One application, ten unit tasks, a $2 type at 8 s/task and a $1 type
    /// at 10 s/task.
    fn two_type_scenario() -> Scenario {
        Scenario {
            applications: vec![app(0)],
            tasks: (0..10).map(|id| Task { id, app_id: 0, size: 1 }).collect(),
            instance_types: vec![itype(0, 2, vec![8]), itype(1, 1, vec![10])],
            budget: 2,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        }
    }

    fn slot(id: SlotId, type_id: TypeId, task_ids: Vec<TaskId>) -> VmSlot {
        VmSlot { id, type_id, task_ids }
    }

    #[test]
    fn best_type_prefers_fast_then_cheap_then_low_id() {
        let cat = table_catalog();
        // A2 runs fastest on it4.
        assert_eq!(best_type(&app(1), &cat, 10).unwrap().id, 3);
        // A1 ties between it3 and it4 on perf and cost; it3 wins by id.
        assert_eq!(best_type(&app(0), &cat, 40).unwrap().id, 2);
        // With budget 7 only it1 is affordable.
        assert_eq!(best_type(&app(2), &cat, 7).unwrap().id, 0);
    }

    #[test]
    fn best_type_requires_an_affordable_type() {
        let cat = table_catalog();
        assert!(matches!(
            best_type(&app(0), &cat, 4),
            Err(ScheduleError::NoAffordableType { .. })
        ));
    }

    #[test]
    fn initial_plan_hires_whole_budget_per_application() {
        let one_app = Scenario {
            applications: vec![app(0)],
            tasks: vec![],
            instance_types: vec![itype(0, 10, vec![7])],
            budget: 25,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        assert_eq!(initial_plan(&one_app).unwrap().slots.len(), 2);

        let worked = two_type_scenario();
        let plan = initial_plan(&worked).unwrap();
        assert_eq!(plan.slots.len(), 1);
        assert_eq!(plan.slots[0].type_id, 0);

        let three = table_scenario(vec![], 40);
        let plan = initial_plan(&three).unwrap();
        assert_eq!(plan.slots.len(), 12);
        let counts = plan.vm_count_by_type();
        assert_eq!(counts.get(&2), Some(&8)); // A1 and A3 best on it3
        assert_eq!(counts.get(&3), Some(&4)); // A2 best on it4
    }

    #[test]
    fn assign_places_every_task_and_prefers_fast_types() {
        let s = table_scenario(
            vec![Task { id: 0, app_id: 1, size: 1 }, Task { id: 1, app_id: 2, size: 1 }],
            40,
        );
        let plan = ExecutionPlan {
            slots: vec![slot(0, 2, vec![]), slot(1, 3, vec![])],
        };
        let assigned = assign(&[0, 1], &plan, &s).unwrap();
        // A2 runs 9 s on it4 vs 15 s on it3; A3 runs 9 s on it3 vs 12 s on it4.
        assert_eq!(assigned.slots[0].task_ids, vec![1]);
        assert_eq!(assigned.slots[1].task_ids, vec![0]);
    }

    #[test]
    fn assign_alternates_between_identical_slots() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: (0..4).map(|id| Task { id, app_id: 0, size: 1 }).collect(),
            instance_types: vec![itype(0, 1, vec![10])],
            budget: 10,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![]), slot(1, 0, vec![])] };
        let assigned = assign(&[0, 1, 2, 3], &plan, &s).unwrap();
        assert_eq!(assigned.slots[0].task_ids.len(), 2);
        assert_eq!(assigned.slots[1].task_ids.len(), 2);
    }

    #[test]
    fn assign_rejects_empty_plan_with_tasks() {
        let s = table_scenario(vec![Task { id: 0, app_id: 0, size: 1 }], 40);
        assert_eq!(
            assign(&[0], &ExecutionPlan::empty(), &s),
            Err(ScheduleError::EmptyPlan { tasks: 1 })
        );
    }

    #[test]
    fn balance_splits_load_between_identical_vms() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: vec![Task { id: 0, app_id: 0, size: 5 }, Task { id: 1, app_id: 0, size: 5 }],
            instance_types: vec![itype(0, 1, vec![10])],
            budget: 10,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        let lopsided = ExecutionPlan {
            slots: vec![slot(0, 0, vec![0, 1]), slot(1, 0, vec![])],
        };
        let balanced = balance(&lopsided, &s);
        assert_eq!(balanced.slots[0].task_ids.len(), 1);
        assert_eq!(balanced.slots[1].task_ids.len(), 1);
        assert_eq!(plan_makespan(&balanced, &s).unwrap(), 50);
    }

    #[test]
    fn balance_is_a_fixpoint_on_balanced_plans() {
        let s = table_scenario(
            vec![Task { id: 0, app_id: 0, size: 1 }, Task { id: 1, app_id: 0, size: 1 }],
            40,
        );
        let even = ExecutionPlan { slots: vec![slot(0, 2, vec![0]), slot(1, 2, vec![1])] };
        assert_eq!(balance(&even, &s), even);
    }

    #[test]
    fn balance_moves_task_to_idle_faster_vm() {
        // A provisioned idle VM is already paid for one quantum, so the move
        // costs nothing and the makespan drops from 100 s to 55 s.
        let s = table_scenario(vec![Task { id: 0, app_id: 0, size: 5 }], 40);
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0]), slot(1, 1, vec![])] };
        let balanced = balance(&plan, &s);
        assert!(balanced.slots[0].task_ids.is_empty());
        assert_eq!(balanced.slots[1].task_ids, vec![0]);
        assert_eq!(plan_makespan(&balanced, &s).unwrap(), 55);
    }

    #[test]
    fn reduce_merges_vms_when_cost_allows() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: vec![Task { id: 0, app_id: 0, size: 1000 }, Task { id: 1, app_id: 0, size: 1000 }],
            instance_types: vec![itype(0, 10, vec![1])],
            budget: 100,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        // Two VMs at 1000 s each merge into one at 2000 s: still one billed
        // hour, 10 < 20.
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0]), slot(1, 0, vec![1])] };
        let reduced = reduce(&plan, &s, &BTreeSet::new(), false);
        assert_eq!(reduced.slots.len(), 1);
        assert_eq!(plan_cost(&reduced, &s).unwrap(), 10);
    }

    #[test]
    fn reduce_accepts_equal_cost_merges() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: vec![Task { id: 0, app_id: 0, size: 3000 }, Task { id: 1, app_id: 0, size: 3000 }],
            instance_types: vec![itype(0, 10, vec![1])],
            budget: 100,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        // 3000 s + 3000 s merge to 6000 s: two billed hours either way.
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0]), slot(1, 0, vec![1])] };
        let reduced = reduce(&plan, &s, &BTreeSet::new(), false);
        assert_eq!(reduced.slots.len(), 1);
        assert_eq!(plan_cost(&reduced, &s).unwrap(), 20);
    }

    #[test]
    fn reduce_leaves_single_slot_untouched() {
        let s = table_scenario(vec![Task { id: 0, app_id: 0, size: 1 }], 40);
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0])] };
        assert_eq!(reduce(&plan, &s, &BTreeSet::new(), false), plan);
    }

    #[test]
    fn reduce_local_mode_only_merges_same_type() {
        let s = table_scenario(
            vec![Task { id: 0, app_id: 0, size: 1 }, Task { id: 1, app_id: 0, size: 1 }],
            40,
        );
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0]), slot(1, 1, vec![1])] };
        // Different types: local reduce cannot move anything.
        assert_eq!(reduce(&plan, &s, &BTreeSet::new(), true), plan);
        // Global reduce merges onto the cheaper-to-keep slot.
        let merged = reduce(&plan, &s, &BTreeSet::new(), false);
        assert_eq!(merged.slots.len(), 1);
    }

    #[test]
    fn reduce_respects_exclusions() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: vec![Task { id: 0, app_id: 0, size: 1 }, Task { id: 1, app_id: 0, size: 1 }],
            instance_types: vec![itype(0, 10, vec![1])],
            budget: 100,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0]), slot(1, 0, vec![1])] };
        let excluded: BTreeSet<SlotId> = [0, 1].into_iter().collect();
        assert_eq!(reduce(&plan, &s, &excluded, false), plan);
    }

    #[test]
    fn add_vms_follows_greedy_type_selection() {
        let s = table_scenario(
            vec![
                Task { id: 0, app_id: 0, size: 1 },
                Task { id: 1, app_id: 1, size: 1 },
                Task { id: 2, app_id: 2, size: 1 },
            ],
            40,
        );
        // Per-unit totals: it1 66, it2 36, it3 34, it4 31. With 25 left the
        // greedy picks it4, it4, then only it1 is affordable.
        let grown = add_vms(&ExecutionPlan::empty(), &s, 25);
        let types: Vec<TypeId> = grown.slots.iter().map(|s| s.type_id).collect();
        assert_eq!(types, vec![3, 3, 0]);

        assert_eq!(add_vms(&ExecutionPlan::empty(), &s, 4).slots.len(), 0);
        assert_eq!(add_vms(&ExecutionPlan::empty(), &s, 0).slots.len(), 0);
    }

    #[test]
    fn keep_under_hour_splits_long_vm_when_it_pays_off() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: (0..4).map(|id| Task { id, app_id: 0, size: 1800 }).collect(),
            instance_types: vec![itype(0, 5, vec![1])],
            budget: 10,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        // One VM at 7200 s costs 10; two VMs at 3600 s each also cost 10 but
        // halve the makespan.
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0, 1, 2, 3])] };
        let split = keep_under_hour(&plan, &s, 10);
        assert_eq!(split.slots.len(), 2);
        assert_eq!(plan_makespan(&split, &s).unwrap(), 3600);
        assert_eq!(plan_cost(&split, &s).unwrap(), 10);

        // With a budget that cannot absorb a second VM the split is rejected.
        let kept = keep_under_hour(&plan, &s, 9);
        assert_eq!(kept, plan);
    }

    #[test]
    fn keep_under_hour_ignores_vms_within_one_quantum() {
        let s = Scenario {
            applications: vec![app(0)],
            tasks: vec![Task { id: 0, app_id: 0, size: 3600 }],
            instance_types: vec![itype(0, 5, vec![1])],
            budget: 100,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        let plan = ExecutionPlan { slots: vec![slot(0, 0, vec![0])] };
        assert_eq!(keep_under_hour(&plan, &s, 100), plan);
    }

    #[test]
    fn replace_swaps_expensive_vm_for_two_cheaper_ones() {
        let s = two_type_scenario();
        let plan = ExecutionPlan {
            slots: vec![slot(0, 0, (0..10).collect())], // 80 s on the $2 type
        };
        let swapped = replace(&plan, &s, 2, 1);
        assert_eq!(swapped.slots.len(), 2);
        assert!(swapped.slots.iter().all(|slot| slot.type_id == 1));
        assert_eq!(plan_makespan(&swapped, &s).unwrap(), 50);
        assert_eq!(plan_cost(&swapped, &s).unwrap(), 2);
    }

    #[test]
    fn replace_without_cheaper_type_is_identity() {
        let s = two_type_scenario();
        let plan = ExecutionPlan {
            slots: vec![slot(0, 1, (0..10).collect())],
        };
        assert_eq!(replace(&plan, &s, 2, 1), plan);
    }

    #[test]
    fn replace_rolls_back_when_makespan_would_grow() {
        // The cheaper type is far too slow: 100x the per-unit time.
        let s = Scenario {
            applications: vec![app(0)],
            tasks: (0..4).map(|id| Task { id, app_id: 0, size: 1 }).collect(),
            instance_types: vec![itype(0, 1, vec![800]), itype(1, 4, vec![8])],
            budget: 4,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        };
        let plan = ExecutionPlan { slots: vec![slot(0, 1, vec![0, 1, 2, 3])] };
        assert_eq!(replace(&plan, &s, 4, 1), plan);
    }

    #[test]
    fn find_plan_solves_the_worked_two_type_example() {
        let s = two_type_scenario();
        let result = find_plan(&s);
        let plan = result.plan().expect("feasible");
        assert_eq!(plan.slots.len(), 2);
        assert!(plan.slots.iter().all(|slot| slot.type_id == 1));
        assert_eq!(plan_makespan(plan, &s).unwrap(), 50);
        assert_eq!(plan_cost(plan, &s).unwrap(), 2);
    }

    #[test]
    fn find_plan_handles_empty_task_list() {
        let s = table_scenario(vec![], 40);
        let result = find_plan(&s);
        let plan = result.plan().expect("feasible");
        assert!(plan.slots.is_empty());
    }

    #[test]
    fn find_plan_reports_infeasible_when_nothing_is_affordable() {
        let mut s = two_type_scenario();
        s.budget = 0;
        let result = find_plan(&s);
        assert!(!result.is_feasible());
    }

    #[test]
    fn find_plan_is_deterministic() {
        let s = table_scenario(
            (0..9)
                .map(|id| Task { id, app_id: id % 3, size: (id as u64 % 5) + 1 })
                .collect(),
            30,
        );
        let a = find_plan(&s);
        let b = find_plan(&s);
        assert_eq!(a, b);
    }

    #[test]
    fn find_plan_traced_records_phases() {
        let s = two_type_scenario();
        let result = find_plan_traced(&s);
        let trace = result.trace.expect("trace requested");
        assert!(trace.iter().any(|e| e.phase == "initial"));
        assert!(trace.iter().any(|e| e.phase == "replace"));
    }
}
