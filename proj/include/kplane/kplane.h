/* C interface to the piecewise-linear regression library.
 *
 * All functions return a kp_status; on failure kp_last_error() holds a
 * human-readable message for the calling thread. Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function.
 */
#ifndef KPLANE_H
#define KPLANE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct kp_dataset kp_dataset;
typedef struct kp_model kp_model;

typedef enum kp_status {
    KP_OK = 0,
    KP_ERR_INVALID = 1,    /* bad arguments or precondition violated */
    KP_ERR_IO = 2,         /* file could not be opened or written */
    KP_ERR_PARSE = 3,      /* malformed input file */
    KP_ERR_DEGENERATE = 4, /* unsolvable linear system */
    KP_ERR_VALIDATION = 5, /* loaded object violates an invariant */
    KP_ERR_INTERNAL = 6
} kp_status;

typedef enum kp_algo {
    KP_ALGO_KPLANE = 0,
    KP_ALGO_MKPLANE = 1,
    KP_ALGO_EM = 2
} kp_algo;

typedef enum kp_empty_cluster_policy {
    KP_EMPTY_RESEED_WORST_POINT = 0,
    KP_EMPTY_DROP_CLUSTER = 1
} kp_empty_cluster_policy;

typedef struct kp_fit_options {
    int k;
    double gamma;
    int max_iters;
    double objective_rel_tol;
    int restarts;
    uint64_t seed;
    int empty_cluster_policy; /* kp_empty_cluster_policy */
    int scale;                /* nonzero: fit [-1,1] feature scaling on input */
    double epsilon;           /* em only */
    double anneal_factor;     /* em only */
    double epsilon_min;       /* em only */
} kp_fit_options;

typedef struct kp_fit_info {
    double final_objective;
    int iterations;
    int termination; /* 0 partitions-stable, 1 objective-stagnant, 2 max-iters */
} kp_fit_info;

const char* kp_last_error(void);
const char* kp_termination_name(int termination);

void kp_fit_options_init(kp_fit_options* opts);

/* datasets */
kp_status kp_dataset_read_csv(const char* path, kp_dataset** out);
kp_status kp_dataset_write_csv(const kp_dataset* data, const char* path);
kp_status kp_dataset_synth(int problem, long n, double noise_std, uint64_t seed,
                           kp_dataset** out);
kp_status kp_dataset_load_uci(const char* name, const char* path, kp_dataset** out);
long kp_dataset_rows(const kp_dataset* data);
int kp_dataset_dim(const kp_dataset* data);
kp_status kp_dataset_get_row(const kp_dataset* data, long i, double* x_out,
                             double* y_out);
void kp_dataset_free(kp_dataset* data);

/* fitting */
kp_status kp_fit(const kp_dataset* data, kp_algo algo, const kp_fit_options* opts,
                 kp_model** model_out, kp_fit_info* info_out /* nullable */,
                 long* sizes_out /* nullable, length k */);

/* models */
int kp_model_k(const kp_model* model);
int kp_model_dim(const kp_model* model);
kp_status kp_model_centroid(const kp_model* model, int cluster, double* out);
kp_status kp_model_predict(const kp_model* model, const double* x, int d,
                           double* y_out);
kp_status kp_model_mse(const kp_model* model, const kp_dataset* data, double* out);
kp_status kp_model_save(const kp_model* model, const char* path);
kp_status kp_model_load(const char* path, kp_model** out);
void kp_model_free(kp_model* model);

/* file-to-file helpers used by the CLI; outputs are written atomically */
kp_status kp_predict_csv(const kp_model* model, const char* input_path,
                         const char* output_path);
kp_status kp_dump_function(const kp_model* model, double lo, double hi, long steps,
                           const char* output_path);

/* cross validation; writes the report CSV and optionally returns a
 * human-readable summary (free with kp_string_free) */
kp_status kp_run_cv(const kp_dataset* data, kp_algo algo, const kp_fit_options* base,
                    const int* k_values, int n_k, const double* gammas, int n_gamma,
                    int folds, int repeats, const char* report_csv_path,
                    char** summary_out /* nullable */);
void kp_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* KPLANE_H */
