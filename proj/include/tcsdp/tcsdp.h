/* C interface to the tcsdp library.
 *
 * All functions return TCSDP_OK (0) or a positive error code; the message for
 * the most recent failure on the calling thread is available from
 * tcsdp_last_error(). Handles are opaque and must be released with the
 * matching *_free function. Strings returned through char** are owned by the
 * caller and released with tcsdp_string_free. Matrices are row-major.
 */
#ifndef TCSDP_TCSDP_H
#define TCSDP_TCSDP_H

#include <stddef.h>
#include <stdint.h>

#if defined(TCSDP_BUILDING)
#define TCSDP_API __attribute__((visibility("default")))
#else
#define TCSDP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum tcsdp_status {
    TCSDP_OK = 0,
    TCSDP_INVALID_INPUT = 1,
    TCSDP_INVALID_OBJECTIVE = 2,
    TCSDP_INVALID_CERTIFICATE = 3,
    TCSDP_DEGENERATE_SPECTRUM = 4,
    TCSDP_CHANNEL_ENTRY_VIOLATION = 5,
    TCSDP_INVALID_BLOCK = 6,
    TCSDP_INVALID_BINDING = 7,
    TCSDP_DEGENERATE_SCENARIO = 8,
    TCSDP_NOT_RANK_ONE = 9,
    TCSDP_EXTRACTION_FAILED = 10,
    TCSDP_NUMERICAL_FAILURE = 11,
    TCSDP_INFEASIBLE = 12,
    TCSDP_IO = 13,
    TCSDP_INTERNAL = 99
};

enum tcsdp_kind { TCSDP_KIND_PNP = 0, TCSDP_KIND_HANDEYE = 1, TCSDP_KIND_DUALCAL = 2 };
enum tcsdp_noise { TCSDP_NOISE_NONE = 0, TCSDP_NOISE_LOW = 1, TCSDP_NOISE_MEDIUM = 2, TCSDP_NOISE_HIGH = 3 };

typedef struct tcsdp_problem tcsdp_problem;
typedef struct tcsdp_result tcsdp_result;
typedef struct tcsdp_batch tcsdp_batch;

typedef struct tcsdp_refine_options {
    double gamma_c;
    double gamma;
    double sigma_floor;
    int sched_limit;
    int chan_limit;
    int rankmin_limit;
    double rank_tol;
    double eps;
    int max_repeats;
    double certify_tol;
} tcsdp_refine_options;

typedef struct tcsdp_result_info {
    double cost;
    double eg;
    double dg;
    double relax_cost;
    int rank1;
    int certified;
    int iterations;
    int it_rankmin;
    int it_sched;
    int it_chan;
} tcsdp_result_info;

typedef struct tcsdp_bench_config {
    int kind;        /* tcsdp_kind */
    int m;
    int n;
    int noise;       /* tcsdp_noise */
    uint64_t first_seed;
    int seeds;
    int parallel;
    double gamma_w;
    tcsdp_refine_options opts;
} tcsdp_bench_config;

/* iteration, phase name, cost, sum of lambda1 over blocks, EG */
typedef void (*tcsdp_progress_fn)(void* user, int iteration, const char* phase, double cost,
                                  double sum_lambda1, double eg);

TCSDP_API const char* tcsdp_version(void);
TCSDP_API const char* tcsdp_last_error(void);
TCSDP_API const char* tcsdp_status_name(int code);
TCSDP_API void tcsdp_string_free(char* s);

/* ---- symmetric eigen utilities ---- */
/* lambda1 of the symmetric d x d matrix m (upper triangle read); grad may be NULL. */
TCSDP_API int tcsdp_lambda1(const double* m, int d, double* lambda1, double* grad);
TCSDP_API double tcsdp_sigma_schedule(int k, double floor);

/* ---- lifts ---- */
TCSDP_API int tcsdp_lift_rotation(const double R[9], double Y[49]);
TCSDP_API int tcsdp_recover_rotation(const double Y[49], double R[9]);
/* Three 4x4 blocks, stored consecutively. */
TCSDP_API int tcsdp_lift_translation(double tau, const double v[3], double Y[48]);
TCSDP_API int tcsdp_recover_translation(const double Y[48], double* tau, double v[3]);

/* ---- problems ---- */
TCSDP_API int tcsdp_problem_from_json(const char* json, tcsdp_problem** out);
TCSDP_API int tcsdp_problem_from_scenario(const char* scenario_json, double tau_u, tcsdp_problem** out);
TCSDP_API int tcsdp_problem_to_json(const tcsdp_problem* p, char** out);
TCSDP_API int tcsdp_problem_dims(const tcsdp_problem* p, int* n_blocks, int* n_vars, int* n_rows);
TCSDP_API void tcsdp_problem_free(tcsdp_problem* p);

/* ---- refinement ---- */
TCSDP_API void tcsdp_refine_options_default(tcsdp_refine_options* o);
TCSDP_API int tcsdp_refine(const tcsdp_problem* p, const tcsdp_refine_options* o, tcsdp_progress_fn cb,
                           void* user, tcsdp_result** out);
TCSDP_API int tcsdp_result_info_get(const tcsdp_result* r, tcsdp_result_info* info);
/* Copies block b (row-major) into out if cap >= dim*dim; *dim receives the size. */
TCSDP_API int tcsdp_result_block(const tcsdp_result* r, int b, double* out, int cap, int* dim);
TCSDP_API int tcsdp_result_to_json(const tcsdp_result* r, char** out);
TCSDP_API void tcsdp_result_free(tcsdp_result* r);

/* ---- benchmark ---- */
TCSDP_API void tcsdp_bench_config_default(tcsdp_bench_config* c);
/* progress_dir may be NULL; otherwise <progress_dir>/<seed>.ndjson is written per run. */
TCSDP_API int tcsdp_bench_run(const tcsdp_bench_config* c, const char* progress_dir, tcsdp_batch** out);
TCSDP_API int tcsdp_batch_counts(const tcsdp_batch* b, int* total, int* completed, int* successes);
TCSDP_API int tcsdp_batch_csv(const tcsdp_batch* b, char** out);
TCSDP_API int tcsdp_batch_json(const tcsdp_batch* b, char** out);
/* Writes results.csv and results.json into dir (created if missing). */
TCSDP_API int tcsdp_batch_write(const tcsdp_batch* b, const char* dir);
TCSDP_API void tcsdp_batch_free(tcsdp_batch* b);

#ifdef __cplusplus
}
#endif

#endif
