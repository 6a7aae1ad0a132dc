/* C interface to the diffusion-history reconstruction library.
 *
 * Every function returns an hr_status. On failure the message of the most
 * recent error on the calling thread is available from hr_last_error().
 * Handles are opaque; release them with the matching *_free function.
 * Node states cross the boundary as characters 'S', 'I', 'R', one per node. */
#ifndef HISTRECON_H
#define HISTRECON_H

#include <stddef.h>
#include <stdint.h>

#if defined(HR_BUILDING_LIBRARY)
#define HR_API __attribute__((visibility("default")))
#else
#define HR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hr_status {
    HR_OK = 0,
    HR_ERR_INVALID_ARGUMENT = 1,
    HR_ERR_IO = 2,
    HR_ERR_PARSE = 3,
    HR_ERR_GUARD = 4,
    HR_ERR_ESTIMATION_IMPOSSIBLE = 5,
    HR_ERR_NUMERIC = 6,
    HR_ERR_SHAPE_MISMATCH = 7,
    HR_ERR_INTERNAL = 8
} hr_status;

typedef struct hr_graph hr_graph;
typedef struct hr_history hr_history;
typedef struct hr_model hr_model;
typedef struct hr_reconstruction hr_reconstruction;
typedef struct hr_oracle hr_oracle;

typedef struct hr_params {
    double beta_I;
    double beta_R;
} hr_params;

HR_API const char* hr_last_error(void);
/* Stable lowercase identifier, e.g. "parse". */
HR_API const char* hr_status_name(hr_status status);
/* Writes value with 17 significant digits; integral values keep ".0". */
HR_API hr_status hr_format_double(double value, char* buffer, size_t capacity);

/* ---- graphs ---- */
HR_API hr_status hr_graph_generate_ba(size_t n, size_t attachment, uint64_t seed, hr_graph** out);
HR_API hr_status hr_graph_generate_er(size_t n, double p, uint64_t seed, hr_graph** out);
HR_API hr_status hr_graph_load(const char* path, hr_graph** out);
HR_API hr_status hr_graph_save(const hr_graph* graph, const char* path);
/* Nonzero when load remapped external ids to dense ids. */
HR_API int hr_graph_has_id_map(const hr_graph* graph);
HR_API hr_status hr_graph_save_id_map(const hr_graph* graph, const char* path);
HR_API size_t hr_graph_num_nodes(const hr_graph* graph);
HR_API size_t hr_graph_num_edges(const hr_graph* graph);
HR_API void hr_graph_free(hr_graph* graph);

/* ---- snapshots: caller-owned buffers of n state characters ---- */
HR_API hr_status hr_snapshot_load(const char* path, size_t n, char* states);
HR_API hr_status hr_snapshot_save(const char* path, const char* states, size_t n);

/* ---- histories ---- */
/* beta_R = 0 gives the SI model. Sources: n0 nodes drawn uniformly. */
HR_API hr_status hr_simulate(const hr_graph* graph, hr_params params, size_t timespan, size_t n0, uint64_t seed,
                             hr_history** out);
HR_API hr_status hr_history_load(const char* path, hr_history** out);
HR_API hr_status hr_history_save(const hr_history* history, const char* path);
HR_API hr_status hr_history_save_hitting_times(const hr_history* history, const char* path);
HR_API size_t hr_history_timespan(const hr_history* history);
HR_API size_t hr_history_num_nodes(const hr_history* history);
/* Copies row t (0..T) into states[0..n). */
HR_API hr_status hr_history_row(const hr_history* history, size_t t, char* states);
HR_API void hr_history_free(hr_history* history);

/* ---- parameters ---- */
HR_API hr_status hr_params_load(const char* path, hr_params* out);
HR_API hr_status hr_params_save(const char* path, hr_params params);

typedef struct hr_estimate_options {
    size_t iterations;
    double learning_rate;
    int si_model;
} hr_estimate_options;

HR_API void hr_estimate_options_default(hr_estimate_options* options);
HR_API hr_status hr_estimate(const hr_graph* graph, const char* states, size_t timespan, double n0,
                             const hr_estimate_options* options, hr_params* out);

/* ---- proposal models ---- */
HR_API hr_status hr_model_init(size_t timespan, uint64_t seed, hr_model** out);
HR_API hr_status hr_model_load(const char* path, hr_model** out);
HR_API hr_status hr_model_save(const hr_model* model, const char* path);
HR_API size_t hr_model_timespan(const hr_model* model);
HR_API void hr_model_free(hr_model* model);

typedef struct hr_train_options {
    size_t steps;
    size_t batch_size;
    double learning_rate;
    double gamma;
    size_t threads;
} hr_train_options;

HR_API void hr_train_options_default(hr_train_options* options);
HR_API hr_status hr_train(hr_model* model, const hr_graph* graph, hr_params params, double n0,
                          const hr_train_options* options, uint64_t seed);

/* ---- reconstruction ---- */
typedef struct hr_reconstruct_options {
    hr_estimate_options estimate;
    hr_train_options train;
    size_t steps;
    size_t chains;
    double eta;
    int plain_average;
    size_t burn_in;
    size_t threads;
} hr_reconstruct_options;

HR_API void hr_reconstruct_options_default(hr_reconstruct_options* options);
/* params and model may be NULL: they are then estimated / trained. */
HR_API hr_status hr_reconstruct(const hr_graph* graph, const char* states, size_t timespan, double n0,
                                const hr_reconstruct_options* options, const hr_params* params,
                                const hr_model* model, uint64_t seed, hr_reconstruction** out);
HR_API hr_status hr_reconstruction_history(const hr_reconstruction* rec, hr_history** out);
HR_API hr_params hr_reconstruction_params(const hr_reconstruction* rec);
HR_API double hr_reconstruction_acceptance(const hr_reconstruction* rec);
/* Posterior mean hitting times, n values each. */
HR_API hr_status hr_reconstruction_hitting(const hr_reconstruction* rec, double* h_I, double* h_R);
/* Writes params.txt, model.txt, history.txt, hitting_estimate.txt, diagnostics.txt. */
HR_API hr_status hr_reconstruction_save(const hr_reconstruction* rec, const char* directory);
HR_API void hr_reconstruction_free(hr_reconstruction* rec);

/* ---- exact posterior for tiny instances ---- */
HR_API hr_status hr_oracle_run(const hr_graph* graph, hr_params params, const char* states, size_t timespan,
                               double n0, double gamma, size_t threads, hr_oracle** out);
HR_API size_t hr_oracle_num_histories(const hr_oracle* oracle);
HR_API double hr_oracle_log_snapshot_prob(const hr_oracle* oracle);
HR_API hr_status hr_oracle_expected(const hr_oracle* oracle, double* h_I, double* h_R);
HR_API hr_status hr_oracle_save_report(const hr_oracle* oracle, const char* path);
/* Only for n <= 4. */
HR_API hr_status hr_oracle_save_csv(const hr_oracle* oracle, const char* path);
HR_API void hr_oracle_free(hr_oracle* oracle);

/* ---- evaluation ---- */
typedef struct hr_metrics {
    double macro_f1;
    double nrmse;
    int has_gap;
    double gap_f1;
    double gap_nrmse;
} hr_metrics;

HR_API hr_status hr_evaluate(const hr_history* truth, const hr_history* reconstruction, hr_metrics* out);
/* Fills the gap fields against ideal scores (both must be nonzero). */
HR_API hr_status hr_metrics_set_gap(hr_metrics* metrics, double ideal_f1, double ideal_nrmse);
HR_API hr_status hr_metrics_save(const hr_metrics* metrics, const char* path);

/* ---- scalability ---- */
/* Wall-clock seconds of a full reconstruction on a seeded BA(n, 4) SIR
 * instance with beta = (0.1, 0.1) and 5% sources, using a short training run. */
HR_API hr_status hr_bench_point(size_t n, size_t timespan, size_t threads, uint64_t seed, double* seconds);

#ifdef __cplusplus
}
#endif

#endif
