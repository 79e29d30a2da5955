//! Deterministic replay of an execution plan: per-VM timelines (boot, then
//! tasks back to back in assignment order) and a [`PlanReport`] derived from
//! the timeline ends rather than the closed-form plan metrics. Replay and
//! formula must agree exactly; tests lean on that redundancy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_plan, ExecutionPlan, PerVmReport, PlanReport, PlanViolation, Scenario, Seconds,
    SlotId, TaskId,
};

/// The executed schedule of one VM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmTimeline {
    pub vm: SlotId,
    /// Boot occupies `[0, boot_end_s)`; no task runs during it.
    pub boot_end_s: Seconds,
    pub events: Vec<TimelineEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub task: TaskId,
    pub start_s: Seconds,
    pub end_s: Seconds,
}

impl VmTimeline {
    /// When this VM finishes: the end of its last task, or of boot when idle.
    pub fn finish_s(&self) -> Seconds {
        self.events.last().map_or(self.boot_end_s, |e| e.end_s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("plan is not executable: {}", format_violations(.violations))]
    InvalidPlan { violations: Vec<PlanViolation> },
}

fn format_violations(violations: &[PlanViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks that the plan covers every task exactly once with valid
/// references. Budget violations do not block replay; they show up as
/// `feasible: false` in the report.
fn executable_violations(p: &ExecutionPlan, s: &Scenario) -> Vec<PlanViolation> {
    validate_plan(p, s)
        .into_iter()
        .filter(|v| !matches!(v, PlanViolation::OverBudget { .. }))
        .collect()
}

/// Replays each VM: boot first, then its tasks in assignment order with no
/// gaps.
pub fn build_timelines(p: &ExecutionPlan, s: &Scenario) -> Result<Vec<VmTimeline>, EvalError> {
    let violations = executable_violations(p, s);
    if !violations.is_empty() {
        return Err(EvalError::InvalidPlan { violations });
    }

    let timelines = p
        .slots
        .iter()
        .map(|slot| {
            let it = &s.instance_types[slot.type_id];
            let mut clock = s.startup_overhead_s;
            let events = slot
                .task_ids
                .iter()
                .map(|&task| {
                    let start_s = clock;
                    clock += it.perf[s.tasks[task].app_id] * s.tasks[task].size;
                    TimelineEvent { task, start_s, end_s: clock }
                })
                .collect();
            VmTimeline { vm: slot.id, boot_end_s: s.startup_overhead_s, events }
        })
        .collect();
    Ok(timelines)
}

/// Replays the plan and reports makespan, billed cost per VM, total cost,
/// budget feasibility and VM counts per type.
pub fn evaluate(p: &ExecutionPlan, s: &Scenario) -> Result<PlanReport, EvalError> {
    let timelines = build_timelines(p, s)?;

    let mut per_vm = Vec::with_capacity(timelines.len());
    let mut makespan_s = 0;
    let mut total_cost = 0;
    for (slot, timeline) in p.slots.iter().zip(&timelines) {
        let exec_s = timeline.finish_s();
        let billed_quanta = exec_s.div_ceil(s.billing_quantum_s);
        let cost = billed_quanta * s.instance_types[slot.type_id].cost_per_hour;
        makespan_s = makespan_s.max(exec_s);
        total_cost += cost;
        per_vm.push(PerVmReport { vm: slot.id, exec_s, billed_quanta, cost });
    }

    Ok(PlanReport {
        makespan_s,
        total_cost,
        feasible: total_cost <= s.budget,
        vm_count_by_type: p.vm_count_by_type(),
        per_vm,
    })
}
