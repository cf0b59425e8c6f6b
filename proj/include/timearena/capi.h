/* C interface to the timearena simulation core.
 *
 * All handles are opaque; every function that can fail returns a ta_status
 * and writes results through out-parameters. Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * ta_string_free(). Detail for the most recent failure on the calling
 * thread is available via ta_last_error().
 *
 * Distinct handles may be used concurrently from different threads; a
 * single handle must not be shared between threads without external
 * synchronization.
 */
#ifndef TIMEARENA_CAPI_H
#define TIMEARENA_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ta_status {
  TA_OK = 0,
  TA_ERR_IO = 1,
  TA_ERR_PARSE = 2,
  TA_ERR_VALIDATION = 3,
  TA_ERR_INVALID_ARGUMENT = 4,
  TA_ERR_LIMIT = 5,   /* brute-force size guard */
  TA_ERR_STATE = 6,   /* call not valid in the current state */
  TA_ERR_HARNESS = 7, /* external agent failure */
} ta_status;

typedef struct ta_corpus ta_corpus;
typedef struct ta_taskset ta_taskset;
typedef struct ta_episode ta_episode;
typedef struct ta_schedule ta_schedule;

const char* ta_version(void);
const char* ta_status_name(ta_status status);
/* Never NULL; empty string when no error has been recorded. */
const char* ta_last_error(void);
void ta_string_free(char* text);

/* Corpus ------------------------------------------------------------- */

/* Loads <dir>/actions.json and every *.task document in <dir>. */
ta_status ta_corpus_load(const char* dir, ta_corpus** out);
void ta_corpus_free(ta_corpus* corpus);
int ta_corpus_task_count(const ta_corpus* corpus);
/* JSON: {"tasks":[{"id":...,"scenario":...,"violations":[...]}...]} */
ta_status ta_corpus_validate(const ta_corpus* corpus, char** report_json);
ta_status ta_corpus_task_ids(const ta_corpus* corpus, char** ids_json);

/* Task sets ---------------------------------------------------------- */

ta_status ta_taskset_build(const ta_corpus* corpus, const char* set_id,
                           const char* const* task_ids, size_t task_count,
                           const char* const* constraint_objects, size_t constraint_count,
                           ta_taskset** out);
void ta_taskset_free(ta_taskset* set);
int ta_taskset_time_limit(const ta_taskset* set);
int ta_taskset_action_count(const ta_taskset* set);
ta_status ta_taskset_instruction(const ta_taskset* set, char** text);
/* JSON: {"id":...,"scenario":...,"tasks":[...],"objects":[{"name","initial_state"}...]} */
ta_status ta_taskset_info(const ta_taskset* set, char** info_json);

/* Episodes ------------------------------------------------------------
 * Turn protocol: ta_episode_prompt() yields "In t=N, your action is:",
 * ta_episode_submit() resolves one agent turn and yields the environment
 * response block. Repeat until ta_episode_finished() is nonzero.
 * time_limit_override <= 0 keeps the set's own limit. */

ta_status ta_episode_start(const ta_taskset* set, int time_limit_override, ta_episode** out);
void ta_episode_free(ta_episode* episode);
int ta_episode_minute(const ta_episode* episode);
double ta_episode_progress_pct(const ta_episode* episode);
int ta_episode_error_streak(const ta_episode* episode);
int ta_episode_finished(const ta_episode* episode);
ta_status ta_episode_prompt(const ta_episode* episode, char** text);
ta_status ta_episode_submit(ta_episode* episode, const char* agent_text, char** response);
ta_status ta_episode_outcome(const ta_episode* episode, char** outcome_json);
ta_status ta_episode_trajectory(const ta_episode* episode, char** jsonl);

/* Oracles -------------------------------------------------------------- */

ta_status ta_schedule_greedy(const ta_taskset* set, ta_schedule** out);
/* Fails with TA_ERR_LIMIT above 20 actions. */
ta_status ta_schedule_brute_force(const ta_taskset* set, ta_schedule** out);
void ta_schedule_free(ta_schedule* schedule);
int ta_schedule_makespan(const ta_schedule* schedule);
ta_status ta_schedule_json(const ta_schedule* schedule, char** json);

/* Built-in agents -------------------------------------------------------
 * agent_config_json: {"kind":"greedy_planner|wait_only|random_valid|replay|external",
 *                     "seed":0,"endpoint":"...","schedule_method":"greedy|brute_force",
 *                     "timeout_seconds":60}
 * Returns TA_ERR_HARNESS when an external bridge fails. */
ta_status ta_run_episode(const ta_taskset* set, const char* agent_config_json,
                         int time_limit_override, char** trajectory_jsonl,
                         char** outcome_json);

/* Metrics ---------------------------------------------------------------
 * outcomes_json: [{"set_id":...,"outcome":{...}}, ...] using the outcome
 * documents produced above. */
ta_status ta_metrics_compute(const char* outcomes_json, char** report_json);
/* Wait decomposition for one episode: {"necessary":N,"unnecessary":M} */
ta_status ta_metrics_waits(const ta_taskset* set, const char* trajectory_jsonl,
                           int time_limit_override, char** waits_json);
/* Per-minute progress curve as CSV ("minute,progress_pct"). */
ta_status ta_metrics_curve_csv(const ta_taskset* set, const char* trajectory_jsonl,
                               int time_limit_override, char** csv);
/* Turn taxonomy counts for one trajectory. */
ta_status ta_metrics_taxonomy(const char* trajectory_jsonl, char** taxonomy_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TIMEARENA_CAPI_H */
