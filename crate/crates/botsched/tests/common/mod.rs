//! Seeded random scenario and plan generators shared by the integration
//! suites.

use botsched::model::{
    Application, ExecutionPlan, InstanceType, Scenario, Task, TaskId, VmSlot,
    DEFAULT_BILLING_QUANTUM_S,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct ScenarioShape {
    pub max_apps: usize,
    pub max_types: usize,
    pub max_tasks: usize,
    pub min_tasks: usize,
}

pub fn random_scenario(rng: &mut ChaCha8Rng, shape: &ScenarioShape) -> Scenario {
    let apps = rng.gen_range(1..=shape.max_apps);
    let types = rng.gen_range(1..=shape.max_types);
    let task_count = rng.gen_range(shape.min_tasks..=shape.max_tasks);

    let applications = (0..apps)
        .map(|id| Application { id, name: format!("A{}", id + 1) })
        .collect();
    let mut instance_types: Vec<InstanceType> = (0..types)
        .map(|id| InstanceType {
            id,
            name: format!("it{}", id + 1),
            cost_per_hour: rng.gen_range(1..=20),
            perf: (0..apps).map(|_| rng.gen_range(1..=50)).collect(),
        })
        .collect();
    // Identical (performance, cost) pairs are not allowed; bump costs until
    // every pair differs.
    loop {
        let mut changed = false;
        for i in 0..instance_types.len() {
            for j in i + 1..instance_types.len() {
                if instance_types[i].perf == instance_types[j].perf
                    && instance_types[i].cost_per_hour == instance_types[j].cost_per_hour
                {
                    instance_types[j].cost_per_hour += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let tasks: Vec<Task> = (0..task_count)
        .map(|id| Task { id, app_id: rng.gen_range(0..apps), size: rng.gen_range(1..=5) })
        .collect();

    let billing_quantum_s = if rng.gen_bool(0.5) {
        DEFAULT_BILLING_QUANTUM_S
    } else {
        rng.gen_range(50..=600)
    };
    let startup_overhead_s = if rng.gen_bool(0.7) { 0 } else { rng.gen_range(1..=60) };

    let min_cost = instance_types.iter().map(|t| t.cost_per_hour).min().unwrap();
    let budget = rng.gen_range(0..=min_cost * 6);

    Scenario {
        applications,
        tasks,
        instance_types,
        budget,
        startup_overhead_s,
        billing_quantum_s,
    }
}

/// Replaces the budget with one drawn around the cost of the cheapest
/// single-VM plan, spanning clearly infeasible through ample.
pub fn rebudget_near_single_vm_cost(rng: &mut ChaCha8Rng, s: &mut Scenario) {
    let reference = s
        .instance_types
        .iter()
        .map(|it| {
            let work: u64 = s
                .tasks
                .iter()
                .map(|t| it.perf[t.app_id] * t.size)
                .sum::<u64>()
                + s.startup_overhead_s;
            work.div_ceil(s.billing_quantum_s).max(1) * it.cost_per_hour
        })
        .min()
        .unwrap_or(1);
    s.budget = rng.gen_range(0..=reference * 2 + 1);
}

/// A plan covering every task exactly once on randomly typed slots. May
/// contain idle slots when `extra_slots` is nonzero.
pub fn random_valid_plan(rng: &mut ChaCha8Rng, s: &Scenario, extra_slots: usize) -> ExecutionPlan {
    let slot_count = if s.tasks.is_empty() {
        extra_slots.max(1)
    } else {
        rng.gen_range(1..=s.tasks.len()) + extra_slots
    };
    let mut slots: Vec<VmSlot> = (0..slot_count)
        .map(|id| VmSlot {
            id,
            type_id: rng.gen_range(0..s.instance_types.len()),
            task_ids: Vec::new(),
        })
        .collect();
    for task in 0..s.tasks.len() {
        let slot = rng.gen_range(0..slot_count);
        slots[slot].task_ids.push(task);
    }
    ExecutionPlan { slots }
}

/// Sorted multiset of assigned tasks, for move-preservation checks.
pub fn task_multiset(plan: &ExecutionPlan) -> Vec<TaskId> {
    let mut tasks: Vec<TaskId> = plan
        .slots
        .iter()
        .flat_map(|slot| slot.task_ids.iter().copied())
        .collect();
    tasks.sort_unstable();
    tasks
}
