//! Exhaustive solver for small instances: enumerates every VM multiset and
//! task assignment within explicit limits and returns a plan of minimum
//! makespan among budget-feasible ones, ties to the cheaper plan. Ground
//! truth for testing the heuristic, never intended for experiment scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristic::{SchedulerOutcome, SchedulerResult};
use crate::model::{
    validate_scenario, ExecutionPlan, Money, Scenario, ScenarioViolation, Seconds, TaskId, TypeId,
    VmSlot,
};

/// Hard bounds on the search space. The solver refuses anything larger
/// rather than silently truncating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_tasks: usize,
    pub max_types: usize,
    pub max_vms_per_type: usize,
    pub max_total_vms: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_tasks: 8, max_types: 3, max_vms_per_type: 8, max_total_vms: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle limits must all be at least 1")]
    InvalidLimits,
    #[error("scenario has {found} {what}, the oracle limit is {limit}")]
    LimitExceeded { what: &'static str, found: usize, limit: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(ScenarioViolation),
}

/// Minimum-makespan plan within the budget, or an explicit infeasible
/// outcome if no plan within the limits fits it.
pub fn brute_force_optimal(
    s: &Scenario,
    limits: &OracleLimits,
) -> Result<SchedulerResult, OracleError> {
    if limits.max_tasks < 1
        || limits.max_types < 1
        || limits.max_vms_per_type < 1
        || limits.max_total_vms < 1
    {
        return Err(OracleError::InvalidLimits);
    }
    if let Some(violation) = validate_scenario(s).into_iter().next() {
        return Err(OracleError::InvalidScenario(violation));
    }
    if s.tasks.len() > limits.max_tasks {
        return Err(OracleError::LimitExceeded {
            what: "tasks",
            found: s.tasks.len(),
            limit: limits.max_tasks,
        });
    }
    if s.instance_types.len() > limits.max_types {
        return Err(OracleError::LimitExceeded {
            what: "instance types",
            found: s.instance_types.len(),
            limit: limits.max_types,
        });
    }

    if s.tasks.is_empty() {
        return Ok(SchedulerResult {
            outcome: SchedulerOutcome::Feasible(ExecutionPlan::empty()),
            iterations: 0,
            trace: None,
        });
    }

    // An optimal plan never needs an idle VM, so every enumerated slot must
    // end up with at least one task and the total slot count is bounded by
    // the task count as well as by the limits.
    let task_count = s.tasks.len();
    let per_type_cap = limits.max_vms_per_type.min(task_count);
    let total_cap = limits.max_total_vms.min(task_count);

    let mut multisets: Vec<(Money, Vec<usize>)> = Vec::new();
    enumerate_multisets(
        s,
        per_type_cap,
        total_cap,
        0,
        &mut vec![0; s.instance_types.len()],
        &mut multisets,
    );
    multisets.sort();

    // exec[type][task]
    let exec: Vec<Vec<Seconds>> = s
        .instance_types
        .iter()
        .map(|it| s.tasks.iter().map(|t| it.perf[t.app_id] * t.size).collect())
        .collect();
    let mut task_order: Vec<TaskId> = (0..task_count).collect();
    task_order.sort_by_key(|&t| (std::cmp::Reverse(s.tasks[t].size), t));

    let mut best: Option<Best> = None;
    let mut explored = 0;
    for (min_cost, counts) in &multisets {
        if *min_cost > s.budget {
            break;
        }
        explored += 1;
        let slot_types: Vec<TypeId> = counts
            .iter()
            .enumerate()
            .flat_map(|(type_id, &n)| std::iter::repeat(type_id).take(n))
            .collect();
        let mut search = Search {
            s,
            exec: &exec,
            task_order: &task_order,
            slot_types: &slot_types,
            slot_exec: vec![s.startup_overhead_s; slot_types.len()],
            slot_tasks: vec![0; slot_types.len()],
            assignment: vec![0; task_count],
            best: &mut best,
        };
        search.descend(0);
    }

    match best {
        Some(found) => {
            let plan = found.into_plan();
            Ok(SchedulerResult {
                outcome: SchedulerOutcome::Feasible(plan),
                iterations: explored,
                trace: None,
            })
        }
        None => Ok(SchedulerResult {
            outcome: SchedulerOutcome::Infeasible {
                reason: format!(
                    "no plan within {} VMs fits budget {}",
                    total_cap, s.budget
                ),
            },
            iterations: explored,
            trace: None,
        }),
    }
}

/// VM count vectors per type, keyed by the minimum cost the multiset can
/// incur (every VM billed one quantum).
fn enumerate_multisets(
    s: &Scenario,
    per_type_cap: usize,
    total_cap: usize,
    type_id: usize,
    counts: &mut Vec<usize>,
    out: &mut Vec<(Money, Vec<usize>)>,
) {
    if type_id == s.instance_types.len() {
        let total: usize = counts.iter().sum();
        if total == 0 || total > total_cap {
            return;
        }
        let min_cost: Money = counts
            .iter()
            .enumerate()
            .map(|(t, &n)| s.instance_types[t].cost_per_hour * n as Money)
            .sum();
        if min_cost <= s.budget {
            out.push((min_cost, counts.clone()));
        }
        return;
    }
    for n in 0..=per_type_cap {
        counts[type_id] = n;
        enumerate_multisets(s, per_type_cap, total_cap, type_id + 1, counts, out);
    }
    counts[type_id] = 0;
}

struct Best {
    makespan: Seconds,
    cost: Money,
    slot_types: Vec<TypeId>,
    assignment: Vec<usize>,
}

impl Best {
    fn into_plan(self) -> ExecutionPlan {
        let mut slots: Vec<VmSlot> = self
            .slot_types
            .iter()
            .enumerate()
            .map(|(id, &type_id)| VmSlot { id, type_id, task_ids: vec![] })
            .collect();
        for (task, &slot) in self.assignment.iter().enumerate() {
            slots[slot].task_ids.push(task);
        }
        ExecutionPlan { slots }
    }
}

struct Search<'a> {
    s: &'a Scenario,
    exec: &'a [Vec<Seconds>],
    task_order: &'a [TaskId],
    slot_types: &'a [TypeId],
    slot_exec: Vec<Seconds>,
    slot_tasks: Vec<usize>,
    assignment: Vec<usize>,
    best: &'a mut Option<Best>,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize) {
        let quantum = self.s.billing_quantum_s;
        let current_makespan = self.slot_exec.iter().copied().max().unwrap_or(0);
        if let Some(best) = self.best {
            if current_makespan > best.makespan {
                return;
            }
        }
        // Every slot still has to become nonempty; each is billed at least
        // one quantum whatever else happens.
        let committed: Money = self
            .slot_exec
            .iter()
            .zip(self.slot_types)
            .map(|(&exec, &t)| {
                exec.div_ceil(quantum).max(1) * self.s.instance_types[t].cost_per_hour
            })
            .sum();
        if committed > self.s.budget {
            return;
        }
        let remaining = self.task_order.len() - depth;
        let empty_slots = self.slot_tasks.iter().filter(|&&n| n == 0).count();
        if empty_slots > remaining {
            return;
        }

        if depth == self.task_order.len() {
            let cost: Money = self
                .slot_exec
                .iter()
                .zip(self.slot_types)
                .map(|(&exec, &t)| {
                    exec.div_ceil(quantum) * self.s.instance_types[t].cost_per_hour
                })
                .sum();
            if cost > self.s.budget {
                return;
            }
            let better = match self.best {
                Some(best) => (current_makespan, cost) < (best.makespan, best.cost),
                None => true,
            };
            if better {
                *self.best = Some(Best {
                    makespan: current_makespan,
                    cost,
                    slot_types: self.slot_types.to_vec(),
                    assignment: self.assignment.clone(),
                });
            }
            return;
        }

        let task = self.task_order[depth];
        for slot in 0..self.slot_types.len() {
            // Same-type slots with equal load are interchangeable; trying
            // only the first avoids symmetric subtrees.
            let symmetric = (0..slot).any(|earlier| {
                self.slot_types[earlier] == self.slot_types[slot]
                    && self.slot_exec[earlier] == self.slot_exec[slot]
            });
            if symmetric {
                continue;
            }
            let delta = self.exec[self.slot_types[slot]][task];
            self.slot_exec[slot] += delta;
            self.slot_tasks[slot] += 1;
            self.assignment[task] = slot;
            self.descend(depth + 1);
            self.slot_exec[slot] -= delta;
            self.slot_tasks[slot] -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        plan_cost, plan_makespan, validate_plan, Application, InstanceType, Task,
        DEFAULT_BILLING_QUANTUM_S,
    };

    fn scenario(tasks: Vec<Task>, types: Vec<InstanceType>, budget: Money) -> Scenario {
        let apps = types[0].perf.len();
        Scenario {
            applications: (0..apps)
                .map(|id| Application { id, name: format!("A{}", id + 1) })
                .collect(),
            tasks,
            instance_types: types,
            budget,
            startup_overhead_s: 0,
            billing_quantum_s: DEFAULT_BILLING_QUANTUM_S,
        }
    }

    fn itype(id: usize, cost: Money, perf: Vec<u64>) -> InstanceType {
        InstanceType { id, name: format!("it{}", id + 1), cost_per_hour: cost, perf }
    }

    #[test]
    fn single_task_goes_on_a_single_vm() {
        let s = scenario(
            vec![Task { id: 0, app_id: 0, size: 1 }],
            vec![itype(0, 3, vec![10])],
            5,
        );
        let result = brute_force_optimal(&s, &OracleLimits::default()).unwrap();
        let plan = result.plan().expect("feasible");
        assert_eq!(plan.slots.len(), 1);
        assert_eq!(plan.slots[0].task_ids, vec![0]);
        assert!(validate_plan(plan, &s).is_empty());
    }

    #[test]
    fn worked_two_type_example_has_makespan_50_at_cost_2() {
        let s = scenario(
            (0..10).map(|id| Task { id, app_id: 0, size: 1 }).collect(),
            vec![itype(0, 2, vec![8]), itype(1, 1, vec![10])],
            2,
        );
        let limits = OracleLimits { max_tasks: 10, ..OracleLimits::default() };
        let result = brute_force_optimal(&s, &limits).unwrap();
        let plan = result.plan().expect("feasible");
        assert_eq!(plan_makespan(plan, &s).unwrap(), 50);
        assert_eq!(plan_cost(plan, &s).unwrap(), 2);
        assert_eq!(plan.slots.len(), 2);
        assert!(plan.slots.iter().all(|slot| slot.type_id == 1));
    }

    #[test]
    fn zero_budget_with_tasks_is_infeasible() {
        let s = scenario(
            vec![Task { id: 0, app_id: 0, size: 1 }],
            vec![itype(0, 1, vec![1])],
            0,
        );
        let result = brute_force_optimal(&s, &OracleLimits::default()).unwrap();
        assert!(!result.is_feasible());
    }

    #[test]
    fn no_tasks_is_trivially_feasible() {
        let s = scenario(vec![], vec![itype(0, 1, vec![1])], 0);
        let result = brute_force_optimal(&s, &OracleLimits::default()).unwrap();
        assert!(result.plan().expect("feasible").slots.is_empty());
    }

    #[test]
    fn limits_are_enforced() {
        let s = scenario(
            (0..9).map(|id| Task { id, app_id: 0, size: 1 }).collect(),
            vec![itype(0, 1, vec![1])],
            10,
        );
        let err = brute_force_optimal(&s, &OracleLimits::default()).unwrap_err();
        assert!(matches!(err, OracleError::LimitExceeded { what: "tasks", .. }));

        let bad = OracleLimits { max_tasks: 0, ..OracleLimits::default() };
        assert_eq!(
            brute_force_optimal(&s, &bad).unwrap_err(),
            OracleError::InvalidLimits
        );
    }

    #[test]
    fn picks_cheaper_plan_among_equal_makespans() {
        // Both types execute the task in 10 s; the cheaper VM must win.
        let s = scenario(
            vec![Task { id: 0, app_id: 0, size: 1 }],
            vec![itype(0, 7, vec![10]), itype(1, 2, vec![10])],
            10,
        );
        let result = brute_force_optimal(&s, &OracleLimits::default()).unwrap();
        let plan = result.plan().expect("feasible");
        assert_eq!(plan.slots[0].type_id, 1);
    }

    #[test]
    fn startup_overhead_counts_toward_makespan_and_cost() {
        let s = Scenario {
            startup_overhead_s: 100,
            ..scenario(
                vec![Task { id: 0, app_id: 0, size: 1 }, Task { id: 1, app_id: 0, size: 1 }],
                vec![itype(0, 1, vec![30])],
                10,
            )
        };
        let result = brute_force_optimal(&s, &OracleLimits::default()).unwrap();
        let plan = result.plan().expect("feasible");
        // Two VMs: 130 s each beats one VM at 160 s, and both fit the budget.
        assert_eq!(plan.slots.len(), 2);
        assert_eq!(plan_makespan(plan, &s).unwrap(), 130);
    }
}
