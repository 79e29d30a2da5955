//! Budget-constrained execution planning for multiple bag-of-tasks
//! applications on heterogeneous, hourly-billed cloud instance types.
//!
//! Given a catalog of instance types (hourly cost plus per-application
//! per-size-unit execution rates), a set of sized tasks and a budget, the
//! crate builds execution plans — which VMs to hire and which tasks to run
//! on each — minimizing the makespan while keeping the billed cost within
//! the budget.
//!
//! - [`model`]: domain types and the exact integer arithmetic of execution
//!   time, quantized billing, makespan and validation.
//! - [`heuristic`]: the main scheduler, [`heuristic::find_plan`].
//! - [`baseline`]: the MI (fastest types first) and MP (cheapest type only)
//!   comparison strategies.
//! - [`oracle`]: exhaustive small-instance optimum for testing.
//! - [`evaluator`]: deterministic plan replay with per-VM timelines.
//! - [`cli`]: scenario files, bundled fixtures and budget-sweep experiments;
//!   the `botsched` binary is a thin wrapper over it.

pub mod baseline;
pub mod cli;
pub mod evaluator;
pub mod heuristic;
pub mod model;
pub mod oracle;

pub use baseline::{mi_plan, mp_plan};
pub use evaluator::{build_timelines, evaluate, VmTimeline};
pub use heuristic::{find_plan, find_plan_traced, SchedulerOutcome, SchedulerResult};
pub use model::{
    plan_cost, plan_makespan, validate_plan, validate_scenario, Application, ExecutionPlan,
    InstanceType, PlanReport, Scenario, Task, VmSlot,
};
pub use oracle::{brute_force_optimal, OracleLimits};
