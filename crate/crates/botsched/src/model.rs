//! Domain types and the exact arithmetic of the scheduling model: task and
//! VM execution times, per-quantum billing, plan makespan and cost, plus
//! scenario and plan validation.
//!
//! All quantities are exact integers: time in seconds, money in abstract
//! currency units. The only rounding anywhere is the ceiling in
//! [`billed_cost`], which models pay-per-hour (more generally, pay-per-quantum)
//! billing: a VM that runs for any fraction of a quantum is charged the full
//! quantum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AppId = usize;
pub type TaskId = usize;
pub type TypeId = usize;
pub type SlotId = usize;

/// Time in whole seconds.
pub type Seconds = u64;
/// Money in whole currency units.
pub type Money = u64;

/// Default billing quantum: one hour.
pub const DEFAULT_BILLING_QUANTUM_S: Seconds = 3600;

/// One bag-of-tasks application. Ids are dense (`0..M-1`) within a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Application {
    pub id: AppId,
    pub name: String,
}

/// A unit of work: belongs to exactly one application and carries a positive
/// integer size. Size is an abstract measure (input bytes, iterations, ...)
/// comparable only between tasks of the same application.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub app_id: AppId,
    pub size: u64,
}

/// A purchasable VM flavor. `perf[j]` is the number of seconds this type
/// needs to process one size unit of a task of application `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceType {
    pub id: TypeId,
    pub name: String,
    pub cost_per_hour: Money,
    pub perf: Vec<Seconds>,
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub applications: Vec<Application>,
    pub tasks: Vec<Task>,
    pub instance_types: Vec<InstanceType>,
    pub budget: Money,
    pub startup_overhead_s: Seconds,
    pub billing_quantum_s: Seconds,
}

impl Scenario {
    pub fn instance_type(&self, id: TypeId) -> Result<&InstanceType, ModelError> {
        self.instance_types
            .get(id)
            .ok_or(ModelError::UnknownInstanceType { type_id: id })
    }

    pub fn task(&self, id: TaskId) -> Result<&Task, ModelError> {
        self.tasks.get(id).ok_or(ModelError::UnknownTask { task_id: id })
    }
}

/// One planned VM: an instance type plus the ordered list of tasks assigned
/// to it. Execution time and cost are derived, never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmSlot {
    pub id: SlotId,
    pub type_id: TypeId,
    pub task_ids: Vec<TaskId>,
}

/// A set of planned VMs together with their task assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub slots: Vec<VmSlot>,
}

impl ExecutionPlan {
    pub fn empty() -> Self {
        Self { slots: Vec::new() }
    }

    /// Drops slots with no assigned tasks. Idle VMs are never part of a
    /// finalized plan.
    pub fn prune_empty_slots(&mut self) {
        self.slots.retain(|slot| !slot.task_ids.is_empty());
    }

    /// Number of VMs per instance type, for reporting.
    pub fn vm_count_by_type(&self) -> BTreeMap<TypeId, usize> {
        let mut counts = BTreeMap::new();
        for slot in &self.slots {
            *counts.entry(slot.type_id).or_insert(0) += 1;
        }
        counts
    }
}

/// Derived metrics of an evaluated plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub makespan_s: Seconds,
    pub total_cost: Money,
    pub feasible: bool,
    pub vm_count_by_type: BTreeMap<TypeId, usize>,
    pub per_vm: Vec<PerVmReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerVmReport {
    pub vm: SlotId,
    pub exec_s: Seconds,
    pub billed_quanta: u64,
    pub cost: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("task {task_id} references unknown application {app_id}")]
    UnknownApplication { task_id: TaskId, app_id: AppId },
    #[error("unknown task id {task_id}")]
    UnknownTask { task_id: TaskId },
    #[error("unknown instance type id {type_id}")]
    UnknownInstanceType { type_id: TypeId },
}

/// Seconds to execute task `t` on a VM of type `it`:
/// `perf[app] * size`.
pub fn task_exec_time(it: &InstanceType, t: &Task) -> Result<Seconds, ModelError> {
    let per_unit = it.perf.get(t.app_id).ok_or(ModelError::UnknownApplication {
        task_id: t.id,
        app_id: t.app_id,
    })?;
    Ok(per_unit * t.size)
}

/// Execution time of one VM: startup overhead plus the serial execution of
/// every assigned task. An empty slot with zero overhead takes 0 seconds.
pub fn vm_exec_time(vm: &VmSlot, s: &Scenario) -> Result<Seconds, ModelError> {
    let it = s.instance_type(vm.type_id)?;
    let mut total = s.startup_overhead_s;
    for &task_id in &vm.task_ids {
        total += task_exec_time(it, s.task(task_id)?)?;
    }
    Ok(total)
}

/// Cost of running a VM for `exec` seconds: full quanta are charged, and an
/// idle VM (exec 0) costs nothing.
pub fn billed_cost(exec: Seconds, quantum: Seconds, cost_per_quantum: Money) -> Money {
    exec.div_ceil(quantum) * cost_per_quantum
}

/// Cost of one VM under quantized billing.
pub fn vm_cost(vm: &VmSlot, s: &Scenario) -> Result<Money, ModelError> {
    let it = s.instance_type(vm.type_id)?;
    Ok(billed_cost(vm_exec_time(vm, s)?, s.billing_quantum_s, it.cost_per_hour))
}

/// Plan makespan: the execution time of the slowest VM. All VMs run in
/// parallel, so the plan completes when the last one does.
pub fn plan_makespan(p: &ExecutionPlan, s: &Scenario) -> Result<Seconds, ModelError> {
    let mut max = 0;
    for slot in &p.slots {
        max = max.max(vm_exec_time(slot, s)?);
    }
    Ok(max)
}

/// Total plan cost: the sum of all VM costs.
pub fn plan_cost(p: &ExecutionPlan, s: &Scenario) -> Result<Money, ModelError> {
    let mut total = 0;
    for slot in &p.slots {
        total += vm_cost(slot, s)?;
    }
    Ok(total)
}

/// A constraint broken by an execution plan. Violations are data, not
/// failures: an over-budget plan is still a plan.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PlanViolation {
    #[error("task {task} is not assigned to any VM")]
    MissingTask { task: TaskId },
    #[error("task {task} is assigned to more than one VM")]
    DuplicateTask { task: TaskId },
    #[error("slot {slot} references unknown task {task}")]
    UnknownTask { slot: SlotId, task: TaskId },
    #[error("slot {slot} references unknown instance type {type_id}")]
    UnknownInstanceType { slot: SlotId, type_id: TypeId },
    #[error("plan cost {cost} exceeds budget {budget}")]
    OverBudget { cost: Money, budget: Money },
}

/// Checks an execution plan against a scenario: every task assigned exactly
/// once, no task on two VMs, and total cost within budget. Returns the empty
/// list when the plan is valid.
pub fn validate_plan(p: &ExecutionPlan, s: &Scenario) -> Vec<PlanViolation> {
    let mut violations = Vec::new();
    let mut refs_ok = true;

    let mut seen = vec![0usize; s.tasks.len()];
    for slot in &p.slots {
        if s.instance_types.get(slot.type_id).is_none() {
            violations.push(PlanViolation::UnknownInstanceType {
                slot: slot.id,
                type_id: slot.type_id,
            });
            refs_ok = false;
        }
        for &task in &slot.task_ids {
            match seen.get_mut(task) {
                Some(count) => *count += 1,
                None => {
                    violations.push(PlanViolation::UnknownTask { slot: slot.id, task });
                    refs_ok = false;
                }
            }
        }
    }

    for (task, &count) in seen.iter().enumerate() {
        if count == 0 {
            violations.push(PlanViolation::MissingTask { task });
        } else if count > 1 {
            violations.push(PlanViolation::DuplicateTask { task });
        }
    }

    if refs_ok {
        let cost = plan_cost(p, s).expect("references checked above");
        if cost > s.budget {
            violations.push(PlanViolation::OverBudget { cost, budget: s.budget });
        }
    }

    violations
}

/// A defect in a scenario definition.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ScenarioViolation {
    #[error("instance types {first} and {second} have identical performance and cost")]
    DuplicateInstanceType { first: TypeId, second: TypeId },
    #[error("application at position {index} has id {found}, expected {index}")]
    NonDenseAppId { index: usize, found: AppId },
    #[error("task at position {index} has id {found}, expected {index}")]
    NonDenseTaskId { index: usize, found: TaskId },
    #[error("instance type at position {index} has id {found}, expected {index}")]
    NonDenseTypeId { index: usize, found: TypeId },
    #[error("task {task} has size 0, sizes must be at least 1")]
    ZeroTaskSize { task: TaskId },
    #[error("task {task} references unknown application {app}")]
    UnknownApplication { task: TaskId, app: AppId },
    #[error("instance type {type_id} has hourly cost 0, costs must be at least 1")]
    ZeroCost { type_id: TypeId },
    #[error("instance type {type_id} has performance 0 for application {app}")]
    ZeroPerf { type_id: TypeId, app: AppId },
    #[error("instance type {type_id} has {found} performance entries, expected {expected}")]
    PerfLengthMismatch { type_id: TypeId, expected: usize, found: usize },
    #[error("billing quantum must be at least 1 second")]
    ZeroBillingQuantum,
}

/// Checks scenario well-formedness: dense ids, positive sizes, costs and
/// performance entries, per-type performance vectors covering every
/// application, and no two instance types with both identical performance
/// and identical cost.
pub fn validate_scenario(s: &Scenario) -> Vec<ScenarioViolation> {
    let mut violations = Vec::new();
    let app_count = s.applications.len();

    for (index, app) in s.applications.iter().enumerate() {
        if app.id != index {
            violations.push(ScenarioViolation::NonDenseAppId { index, found: app.id });
        }
    }
    for (index, it) in s.instance_types.iter().enumerate() {
        if it.id != index {
            violations.push(ScenarioViolation::NonDenseTypeId { index, found: it.id });
        }
        if it.cost_per_hour == 0 {
            violations.push(ScenarioViolation::ZeroCost { type_id: it.id });
        }
        if it.perf.len() != app_count {
            violations.push(ScenarioViolation::PerfLengthMismatch {
                type_id: it.id,
                expected: app_count,
                found: it.perf.len(),
            });
        }
        for (app, &perf) in it.perf.iter().enumerate() {
            if perf == 0 {
                violations.push(ScenarioViolation::ZeroPerf { type_id: it.id, app });
            }
        }
    }
    for (first_idx, first) in s.instance_types.iter().enumerate() {
        for second in &s.instance_types[first_idx + 1..] {
            if first.perf == second.perf && first.cost_per_hour == second.cost_per_hour {
                violations.push(ScenarioViolation::DuplicateInstanceType {
                    first: first.id,
                    second: second.id,
                });
            }
        }
    }
    for (index, task) in s.tasks.iter().enumerate() {
        if task.id != index {
            violations.push(ScenarioViolation::NonDenseTaskId { index, found: task.id });
        }
        if task.size == 0 {
            violations.push(ScenarioViolation::ZeroTaskSize { task: task.id });
        }
        if task.app_id >= app_count {
            violations.push(ScenarioViolation::UnknownApplication {
                task: task.id,
                app: task.app_id,
            });
        }
    }
    if s.billing_quantum_s == 0 {
        violations.push(ScenarioViolation::ZeroBillingQuantum);
    }

    violations
}
