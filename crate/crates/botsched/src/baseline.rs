//! Comparison strategies: MI hires the types with the best overall task
//! performance until the budget runs out, MP hires as many VMs of the
//! cheapest type as the budget affords. Both reuse the heuristic's assign and
//! balance phases, so measured differences come from provisioning policy
//! alone.
//!
//! Both baselines price a VM at one quantum when hiring. Assigned work can
//! push a VM past that quantum and the plan over budget; when it does, the
//! last-hired VM is dropped and the tasks are reassigned until the plan fits
//! or no VMs remain.

use crate::heuristic::{add_vms, assign, balance, SchedulerOutcome, SchedulerResult};
use crate::model::{plan_cost, validate_scenario, ExecutionPlan, Scenario, TaskId};

/// Minimize-individual-time baseline: spend the whole budget via the greedy
/// VM-adding phase, then assign and balance.
pub fn mi_plan(s: &Scenario) -> SchedulerResult {
    let issues = validate_scenario(s);
    if !issues.is_empty() {
        return infeasible(format!("invalid scenario: {}", issues[0]), 0);
    }

    let hired = add_vms(&ExecutionPlan::empty(), s, s.budget);
    shrink_to_budget(s, &hired, "no instance type is affordable within the budget")
}

/// Maximize-parallelism baseline: pick the cheapest instance type, hire as
/// many VMs of it as the budget affords, then assign and balance.
pub fn mp_plan(s: &Scenario) -> SchedulerResult {
    let issues = validate_scenario(s);
    if !issues.is_empty() {
        return infeasible(format!("invalid scenario: {}", issues[0]), 0);
    }

    let cheapest = s
        .instance_types
        .iter()
        .min_by_key(|it| (it.cost_per_hour, it.id));
    let Some(cheapest) = cheapest else {
        return infeasible("scenario has no instance types", 0);
    };

    let count = (s.budget / cheapest.cost_per_hour) as usize;
    let hired = ExecutionPlan {
        slots: (0..count)
            .map(|id| crate::model::VmSlot { id, type_id: cheapest.id, task_ids: vec![] })
            .collect(),
    };
    shrink_to_budget(s, &hired, "the cheapest instance type exceeds the budget")
}

/// Assigns all tasks to a prefix of the hired VMs, shrinking the prefix from
/// the full set downward until the billed cost fits the budget.
fn shrink_to_budget(s: &Scenario, hired: &ExecutionPlan, exhausted: &str) -> SchedulerResult {
    let tasks: Vec<TaskId> = (0..s.tasks.len()).collect();
    if tasks.is_empty() {
        return SchedulerResult {
            outcome: SchedulerOutcome::Feasible(ExecutionPlan::empty()),
            iterations: 0,
            trace: None,
        };
    }

    let mut rounds = 0;
    for keep in (1..=hired.slots.len()).rev() {
        rounds += 1;
        let prefix = ExecutionPlan { slots: hired.slots[..keep].to_vec() };
        let assigned = assign(&tasks, &prefix, s).expect("prefix has at least one slot");
        let mut balanced = balance(&assigned, s);
        balanced.prune_empty_slots();
        let cost = plan_cost(&balanced, s).expect("valid references");
        if cost <= s.budget {
            return SchedulerResult {
                outcome: SchedulerOutcome::Feasible(balanced),
                iterations: rounds,
                trace: None,
            };
        }
    }
    infeasible(
        if hired.slots.is_empty() {
            exhausted.to_string()
        } else {
            format!("no VM count from 1 to {} fits the budget {}", hired.slots.len(), s.budget)
        },
        rounds,
    )
}

fn infeasible(reason: impl Into<String>, iterations: usize) -> SchedulerResult {
    SchedulerResult {
        outcome: SchedulerOutcome::Infeasible { reason: reason.into() },
        iterations,
        trace: None,
    }
}
