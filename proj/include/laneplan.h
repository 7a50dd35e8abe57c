#ifndef LANEPLAN_H
#define LANEPLAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Stable C surface over the planning toolkit: load or assemble a
 * configuration, then run one traced episode, one of the four sweep studies,
 * or the fast validation suite. All functions returning int use the status
 * codes below; on any non-zero status lp_last_error() describes the failure
 * for the calling thread. */

typedef struct lp_config lp_config;

enum {
  LP_OK = 0,
  LP_ERR_CONFIG = 2,    /* unknown key, bad value, unreadable file */
  LP_ERR_INVARIANT = 3, /* a validation check failed */
  LP_ERR_RUNTIME = 4,   /* I/O or internal failure while running */
};

const char* lp_version(void);
const char* lp_last_error(void);

lp_config* lp_config_create(void);
void lp_config_destroy(lp_config* cfg);
/* Merges a flat "key = value" file into cfg. */
int lp_config_load_file(lp_config* cfg, const char* path);
int lp_config_set(lp_config* cfg, const char* key, const char* value);
/* Copies the effective configuration (reparseable echo) into buf, always
 * NUL-terminated; returns the full length regardless of cap. */
size_t lp_config_echo(const lp_config* cfg, char* buf, size_t cap);

/* Runs one seeded episode with the configured planner, writes a per-step
 * trace CSV and a manifest under out_dir, and puts a one-line summary into
 * summary (NUL-terminated, truncated to summary_cap). */
int lp_run_episode(lp_config* cfg, const char* out_dir, char* summary,
                   size_t summary_cap);

/* sweep_kind is one of "pareto", "correlation", "robustness-correlation",
 * "robustness-domain". Writes <kind>.csv, per-series plot data, and a
 * manifest under out_dir. */
int lp_run_sweep(lp_config* cfg, const char* sweep_kind, const char* out_dir);

/* Equation spot checks plus a crash-freedom fuzz sized by sweep.episodes.
 * LP_OK when everything holds, LP_ERR_INVARIANT with details otherwise. */
int lp_validate(lp_config* cfg);

#ifdef __cplusplus
}
#endif

#endif /* LANEPLAN_H */
