#ifndef BOTSCHED_H
#define BOTSCHED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible entry point.
typedef enum BotschedStatus {
  BOTSCHED_OK = 0,
  BOTSCHED_NULL_ARGUMENT = 1,
  BOTSCHED_INVALID_UTF8 = 2,
  BOTSCHED_PARSE_ERROR = 3,
  BOTSCHED_UNKNOWN_SCENARIO = 4,
  BOTSCHED_UNKNOWN_SCHEDULER = 5,
  BOTSCHED_ORACLE_LIMIT = 6,
  BOTSCHED_INFEASIBLE = 7,
} BotschedStatus;

// Scheduler selector for [`botsched_solve`].
typedef enum BotschedScheduler {
  BOTSCHED_SCHEDULER_HEURISTIC = 0,
  BOTSCHED_SCHEDULER_MI = 1,
  BOTSCHED_SCHEDULER_MP = 2,
  BOTSCHED_SCHEDULER_ORACLE = 3,
} BotschedScheduler;

// Opaque result handle: the scheduling outcome plus, when feasible, the
// evaluated report.
typedef struct BotschedResult BotschedResult;

// Opaque scenario handle.
typedef struct BotschedScenario BotschedScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a scenario from a JSON document. On success writes a handle the
// caller must free with [`botsched_scenario_free`].
//
// # Safety
// `json` must be a valid NUL-terminated C string; `out` must be a valid
// pointer to a pointer.
enum BotschedStatus botsched_scenario_from_json(const char *json, struct BotschedScenario **out);

// Loads a bundled scenario by name (`table1`, `table1-small`, `paper-4g`).
//
// # Safety
// `name` must be a valid NUL-terminated C string; `out` must be a valid
// pointer to a pointer.
enum BotschedStatus botsched_scenario_builtin(const char *name, struct BotschedScenario **out);

// # Safety
// `scenario` must be a handle from this library, not yet freed, or NULL.
void botsched_scenario_free(struct BotschedScenario *scenario);

// # Safety
// `scenario` must be a live handle from this library.
enum BotschedStatus botsched_scenario_set_budget(struct BotschedScenario *scenario,
                                                 uint64_t budget);

// # Safety
// `scenario` must be a live handle; `out` must be a valid pointer.
enum BotschedStatus botsched_scenario_task_count(const struct BotschedScenario *scenario,
                                                 uint64_t *out);

// Runs a scheduler on the scenario. The oracle uses its default search
// limits and fails with `BOTSCHED_ORACLE_LIMIT` beyond them. On success
// writes a handle the caller must free with [`botsched_result_free`].
//
// # Safety
// `scenario` must be a live handle; `out` must be a valid pointer to a
// pointer.
enum BotschedStatus botsched_solve(const struct BotschedScenario *scenario,
                                   enum BotschedScheduler scheduler,
                                   struct BotschedResult **out);

// # Safety
// `result` must be a handle from this library, not yet freed, or NULL.
void botsched_result_free(struct BotschedResult *result);

// # Safety
// `result` must be a live handle.
bool botsched_result_is_feasible(const struct BotschedResult *result);

// Makespan of a feasible result, in seconds.
//
// # Safety
// `result` must be a live handle; `out` must be a valid pointer.
enum BotschedStatus botsched_result_makespan_s(const struct BotschedResult *result, uint64_t *out);

// Billed cost of a feasible result.
//
// # Safety
// `result` must be a live handle; `out` must be a valid pointer.
enum BotschedStatus botsched_result_cost(const struct BotschedResult *result, uint64_t *out);

// Number of VMs in a feasible result's plan.
//
// # Safety
// `result` must be a live handle; `out` must be a valid pointer.
enum BotschedStatus botsched_result_vm_count(const struct BotschedResult *result, uint64_t *out);

// Why the result is infeasible, as a newly allocated string, or NULL for
// feasible results. Free with [`botsched_string_free`].
//
// # Safety
// `result` must be a live handle.
char *botsched_result_infeasible_reason(const struct BotschedResult *result);

// Full result as a JSON document (outcome, plan slots, evaluated report),
// as a newly allocated string. Free with [`botsched_string_free`].
//
// # Safety
// `result` must be a live handle; `out` must be a valid pointer.
enum BotschedStatus botsched_result_to_json(const struct BotschedResult *result, char **out);

// Releases a string allocated by this library.
//
// # Safety
// `text` must come from this library and not have been freed already.
void botsched_string_free(char *text);

// Library version as a static string; do not free.
const char *botsched_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOTSCHED_H */
