//! C ABI over the scheduler: opaque handles for scenarios and results,
//! integer status codes, JSON strings in and out. The header is generated
//! into `include/botsched.h` at build time.
//!
//! Ownership rules: every `*_new`/`*_from_*`/`*_solve` out-pointer is owned
//! by the caller and released with the matching `*_free`; strings returned
//! through out-pointers are released with [`botsched_string_free`]. All
//! functions tolerate NULL inputs and report `BOTSCHED_NULL_ARGUMENT`
//! instead of crashing.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use botsched::cli::{builtin_scenario_file, expand_scenario, parse_scenario_str, SchedulerKind};
use botsched::evaluator::evaluate;
use botsched::heuristic::{find_plan, SchedulerOutcome, SchedulerResult};
use botsched::model::{PlanReport, Scenario};
use botsched::oracle::{brute_force_optimal, OracleError, OracleLimits};
use botsched::{mi_plan, mp_plan};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BotschedStatus {
    BotschedOk = 0,
    BotschedNullArgument = 1,
    BotschedInvalidUtf8 = 2,
    BotschedParseError = 3,
    BotschedUnknownScenario = 4,
    BotschedUnknownScheduler = 5,
    BotschedOracleLimit = 6,
    BotschedInfeasible = 7,
}

use BotschedStatus::*;

/// Scheduler selector for [`botsched_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BotschedScheduler {
    BotschedSchedulerHeuristic = 0,
    BotschedSchedulerMi = 1,
    BotschedSchedulerMp = 2,
    BotschedSchedulerOracle = 3,
}

/// Opaque scenario handle.
pub struct BotschedScenario {
    inner: Scenario,
}

/// Opaque result handle: the scheduling outcome plus, when feasible, the
/// evaluated report.
pub struct BotschedResult {
    result: SchedulerResult,
    report: Option<PlanReport>,
    scheduler: SchedulerKind,
}

fn write_out<T>(out: *mut *mut T, value: T) -> BotschedStatus {
    if out.is_null() {
        return BotschedNullArgument;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    BotschedOk
}

/// # Safety
/// `text` must be a valid NUL-terminated C string or NULL.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, BotschedStatus> {
    if text.is_null() {
        return Err(BotschedNullArgument);
    }
    CStr::from_ptr(text).to_str().map_err(|_| BotschedInvalidUtf8)
}

fn to_c_string(text: String) -> *mut c_char {
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// Parses a scenario from a JSON document. On success writes a handle the
/// caller must free with [`botsched_scenario_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated C string; `out` must be a valid
/// pointer to a pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_scenario_from_json(
    json: *const c_char,
    out: *mut *mut BotschedScenario,
) -> BotschedStatus {
    let json = match read_str(json) {
        Ok(text) => text,
        Err(status) => return status,
    };
    match parse_scenario_str(json, "<ffi>") {
        Ok(inner) => write_out(out, BotschedScenario { inner }),
        Err(_) => BotschedParseError,
    }
}

/// Loads a bundled scenario by name (`table1`, `table1-small`, `paper-4g`).
///
/// # Safety
/// `name` must be a valid NUL-terminated C string; `out` must be a valid
/// pointer to a pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_scenario_builtin(
    name: *const c_char,
    out: *mut *mut BotschedScenario,
) -> BotschedStatus {
    let name = match read_str(name) {
        Ok(text) => text,
        Err(status) => return status,
    };
    let Some(file) = builtin_scenario_file(name) else {
        return BotschedUnknownScenario;
    };
    match expand_scenario(&file, name) {
        Ok(inner) => write_out(out, BotschedScenario { inner }),
        Err(_) => BotschedParseError,
    }
}

/// # Safety
/// `scenario` must be a handle from this library, not yet freed, or NULL.
#[no_mangle]
pub unsafe extern "C" fn botsched_scenario_free(scenario: *mut BotschedScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn botsched_scenario_set_budget(
    scenario: *mut BotschedScenario,
    budget: u64,
) -> BotschedStatus {
    let Some(scenario) = scenario.as_mut() else {
        return BotschedNullArgument;
    };
    scenario.inner.budget = budget;
    BotschedOk
}

/// # Safety
/// `scenario` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_scenario_task_count(
    scenario: *const BotschedScenario,
    out: *mut u64,
) -> BotschedStatus {
    let (Some(scenario), Some(out)) = (scenario.as_ref(), out.as_mut()) else {
        return BotschedNullArgument;
    };
    *out = scenario.inner.tasks.len() as u64;
    BotschedOk
}

/// Runs a scheduler on the scenario. The oracle uses its default search
/// limits and fails with `BOTSCHED_ORACLE_LIMIT` beyond them. On success
/// writes a handle the caller must free with [`botsched_result_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be a valid pointer to a
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_solve(
    scenario: *const BotschedScenario,
    scheduler: BotschedScheduler,
    out: *mut *mut BotschedResult,
) -> BotschedStatus {
    let Some(scenario) = scenario.as_ref() else {
        return BotschedNullArgument;
    };
    let s = &scenario.inner;
    let (result, kind) = match scheduler {
        BotschedScheduler::BotschedSchedulerHeuristic => (find_plan(s), SchedulerKind::Heuristic),
        BotschedScheduler::BotschedSchedulerMi => (mi_plan(s), SchedulerKind::Mi),
        BotschedScheduler::BotschedSchedulerMp => (mp_plan(s), SchedulerKind::Mp),
        BotschedScheduler::BotschedSchedulerOracle => {
            match brute_force_optimal(s, &OracleLimits::default()) {
                Ok(result) => (result, SchedulerKind::Oracle),
                Err(OracleError::LimitExceeded { .. } | OracleError::InvalidLimits) => {
                    return BotschedOracleLimit
                }
                Err(OracleError::InvalidScenario(_)) => return BotschedParseError,
            }
        }
    };
    let report = result.plan().map(|plan| {
        evaluate(plan, s).expect("scheduler plans replay cleanly")
    });
    write_out(out, BotschedResult { result, report, scheduler: kind })
}

/// # Safety
/// `result` must be a handle from this library, not yet freed, or NULL.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_free(result: *mut BotschedResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_is_feasible(result: *const BotschedResult) -> bool {
    result.as_ref().is_some_and(|r| r.result.is_feasible())
}

/// Makespan of a feasible result, in seconds.
///
/// # Safety
/// `result` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_makespan_s(
    result: *const BotschedResult,
    out: *mut u64,
) -> BotschedStatus {
    let (Some(result), Some(out)) = (result.as_ref(), out.as_mut()) else {
        return BotschedNullArgument;
    };
    match &result.report {
        Some(report) => {
            *out = report.makespan_s;
            BotschedOk
        }
        None => BotschedInfeasible,
    }
}

/// Billed cost of a feasible result.
///
/// # Safety
/// `result` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_cost(
    result: *const BotschedResult,
    out: *mut u64,
) -> BotschedStatus {
    let (Some(result), Some(out)) = (result.as_ref(), out.as_mut()) else {
        return BotschedNullArgument;
    };
    match &result.report {
        Some(report) => {
            *out = report.total_cost;
            BotschedOk
        }
        None => BotschedInfeasible,
    }
}

/// Number of VMs in a feasible result's plan.
///
/// # Safety
/// `result` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_vm_count(
    result: *const BotschedResult,
    out: *mut u64,
) -> BotschedStatus {
    let (Some(result), Some(out)) = (result.as_ref(), out.as_mut()) else {
        return BotschedNullArgument;
    };
    match result.result.plan() {
        Some(plan) => {
            *out = plan.slots.len() as u64;
            BotschedOk
        }
        None => BotschedInfeasible,
    }
}

/// Why the result is infeasible, as a newly allocated string, or NULL for
/// feasible results. Free with [`botsched_string_free`].
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_infeasible_reason(
    result: *const BotschedResult,
) -> *mut c_char {
    let Some(result) = result.as_ref() else {
        return ptr::null_mut();
    };
    match &result.result.outcome {
        SchedulerOutcome::Infeasible { reason } => to_c_string(reason.clone()),
        SchedulerOutcome::Feasible(_) => ptr::null_mut(),
    }
}

/// Full result as a JSON document (outcome, plan slots, evaluated report),
/// as a newly allocated string. Free with [`botsched_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn botsched_result_to_json(
    result: *const BotschedResult,
    out: *mut *mut c_char,
) -> BotschedStatus {
    let (Some(result), Some(out)) = (result.as_ref(), out.as_mut()) else {
        return BotschedNullArgument;
    };
    let doc = serde_json::json!({
        "scheduler": result.scheduler.to_string(),
        "feasible": result.result.is_feasible(),
        "iterations": result.result.iterations,
        "outcome": result.result.outcome,
        "report": result.report,
    });
    *out = to_c_string(doc.to_string());
    if out.is_null() {
        BotschedInvalidUtf8
    } else {
        BotschedOk
    }
}

/// Releases a string allocated by this library.
///
/// # Safety
/// `text` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn botsched_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn botsched_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
