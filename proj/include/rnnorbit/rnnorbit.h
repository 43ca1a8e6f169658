/* rnnorbit — C interface to the RNN orbit-analysis toolkit.
 *
 * All functions return RO_OK on success or an RO_ERR_* code; the
 * message for the last failing call on this thread is available from
 * ro_last_error(). Handles are opaque and must be released with their
 * matching close function.
 */
#ifndef RNNORBIT_H
#define RNNORBIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define RO_OK 0
#define RO_ERR_USAGE 2   /* bad arguments, missing/corrupt files */
#define RO_ERR_NUMERIC 3 /* training divergence or other numerical failure */

const char* ro_version(void);

/* Message for the last failing call on the calling thread. Never NULL. */
const char* ro_last_error(void);

/* Runs the full training pipeline described by a "key = value" config
 * file: tokenize, build vocabulary, split 4:1, train, write checkpoints
 * and a run manifest into out_dir. */
int ro_train(const char* config_path, const char* out_dir);

/* A loaded checkpoint bound to its vocabulary. */
typedef struct ro_model ro_model;

/* Fails (returns NULL, see ro_last_error) if the vocabulary file does
 * not hash to the value recorded in the checkpoint. */
ro_model* ro_model_open(const char* checkpoint_path, const char* vocab_path);
void ro_model_close(ro_model* model);

typedef struct ro_model_info {
    const char* arch; /* "vanilla" or "lstm"; owned by the model handle */
    uint64_t epoch;
    uint64_t hidden_size;
    uint64_t embed_size;
    uint64_t vocab_size;
    double val_perplexity;
} ro_model_info;

int ro_model_get_info(const ro_model* model, ro_model_info* out);

typedef struct ro_analyze_opts {
    const char* mode;      /* "with-input" or "without-input" */
    uint64_t detect_steps; /* 0 = default 20000 */
    uint64_t verify_steps; /* 0 = default 40000 */
    uint64_t count;        /* with-input: 0 = entire vocabulary;
                            * without-input: number of Gaussian draws */
    uint64_t seed;
    uint64_t workers;           /* 0 = 1 */
    uint64_t dump_trajectories; /* dump the first N trajectories */
    double init_mean;           /* without-input h0 distribution */
    double init_std;            /* <= 0 = default 1.0 */
} ro_analyze_opts;

/* Runs closed-loop trajectories for every initial condition and writes
 * one verdict row per condition to out_csv. Trajectory dumps, if
 * requested, go to dump_dir (may be NULL when dump_trajectories is 0). */
int ro_analyze(ro_model* model, const ro_analyze_opts* opts, const char* out_csv,
               const char* dump_dir);

/* Aggregates verdict CSVs into period-statistics tables and renders one
 * SVG per trajectory dump, all written into out_dir. */
int ro_report(const char* const* verdict_paths, size_t n_verdicts,
              const char* const* dump_paths, size_t n_dumps, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* RNNORBIT_H */
