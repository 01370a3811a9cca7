/* C interface to the federated-simulation core. All entry points return an
 * error code; COSIFL_OK means success and out-parameters are valid. On any
 * failure cosifl_last_error() returns a thread-local human-readable message
 * describing what went wrong (field names for validation errors, etc.).
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free call. Handles are not thread-safe; use one per thread.
 */
#ifndef COSIFL_H
#define COSIFL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  COSIFL_OK = 0,
  COSIFL_ERR_IO = 1,          /* file unreadable / unwritable */
  COSIFL_ERR_PARSE = 2,       /* input is not well-formed JSON */
  COSIFL_ERR_VALIDATION = 3,  /* schema violation; message names the field */
  COSIFL_ERR_INFEASIBLE = 4,  /* no feasible plan for this scenario */
  COSIFL_ERR_INVALID_ARG = 5, /* null handle / bad argument value */
  COSIFL_ERR_INTERNAL = 6     /* violated runtime precondition */
};

typedef struct cosifl_scenario cosifl_scenario;
typedef struct cosifl_run cosifl_run;

const char* cosifl_version(void);

/* Message for the most recent failing call on this thread ("" after success). */
const char* cosifl_last_error(void);

/* ---- scenario lifecycle ------------------------------------------------ */

int cosifl_scenario_load(const char* path, cosifl_scenario** out);
int cosifl_scenario_parse(const char* json_text, cosifl_scenario** out);
void cosifl_scenario_free(cosifl_scenario* s);

/* Common overrides, applied after load. rule is "cosifl", "nd" or "ndt". */
int cosifl_scenario_set_seed(cosifl_scenario* s, uint64_t seed);
int cosifl_scenario_set_rule(cosifl_scenario* s, const char* rule);
int cosifl_scenario_set_defense_start(cosifl_scenario* s, int round);
int cosifl_scenario_set_noise_multiplier(cosifl_scenario* s, double value);

/* ---- simulation -------------------------------------------------------- */

int cosifl_run_scenario(const cosifl_scenario* s, cosifl_run** out);

/* Two-phase variant: runs once, replaces each alarming client's gamma with
 * its realized alarm precision, then plans and runs again. */
int cosifl_run_scenario_adaptive(const cosifl_scenario* s, cosifl_run** out);

void cosifl_run_free(cosifl_run* r);

/* Writes summary.json, rounds.jsonl, metrics.csv, model.json (and shards.csv
 * when dump_shards is nonzero) into out_dir, creating it if needed. */
int cosifl_run_write_outputs(const cosifl_run* r, const char* out_dir,
                             int dump_shards);

int cosifl_run_final_accuracy(const cosifl_run* r, double* out);
int cosifl_run_total_cost(const cosifl_run* r, double* out);

/* ---- string-returning queries ------------------------------------------ */
/* *out receives a NUL-terminated buffer owned by the caller; release it with
 * cosifl_string_free. */

int cosifl_run_summary_json(const cosifl_run* r, char** out);

/* Planning only (no round loop): candidate filter, selection frontier and the
 * chosen (T, R) as a JSON document. */
int cosifl_plan_json(const cosifl_scenario* s, char** out);

/* Contest equilibrium across the accepted candidates at the given reward, or
 * at the planner's optimal reward when reward <= 0. CSV with one row per
 * candidate plus a leading comment line with the reward and totals. */
int cosifl_equilibrium_csv(const cosifl_scenario* s, double reward,
                           char** out);

void cosifl_string_free(char* p);

/* ---- post-hoc tools ---------------------------------------------------- */

/* Recomputes the membership-inference audit of a finished run directory and
 * writes roc_threshold.csv, roc_logistic.csv, auc_summary.json to audit_dir. */
int cosifl_audit_run_dir(const char* run_dir, const char* audit_dir);

/* Runs the scenario once per (multiplier, seed offset) pair with the noise
 * multiplier overridden and writes a CSV of audit AUCs and accuracies. */
int cosifl_sweep_noise(const cosifl_scenario* s, const double* multipliers,
                       size_t n_multipliers, int seeds_per_value,
                       const char* out_csv_path);

#ifdef __cplusplus
}
#endif

#endif /* COSIFL_H */
