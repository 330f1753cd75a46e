/* Streaming time-series classification engine: C interface.
 *
 * All objects are opaque handles created by *_create / producing calls and
 * released by the matching *_destroy. Every call that can fail returns an
 * adls_status; on failure adls_last_error() describes the problem for the
 * calling thread. String results use a caller buffer: *needed receives the
 * required size including the terminating NUL, and ADLS_ERR_BUFFER_TOO_SMALL
 * is returned when `capacity` is short (pass NULL/0 to query the size).
 */
#ifndef ADLS_H
#define ADLS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ADLS_API __declspec(dllexport)
#else
#define ADLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adls_status {
  ADLS_OK = 0,
  ADLS_ERR_CONFIG = 1,
  ADLS_ERR_INPUT = 2,
  ADLS_ERR_FORMAT = 3,
  ADLS_ERR_TRAINING = 4,
  ADLS_ERR_STATE = 5,
  ADLS_ERR_IO = 6,
  ADLS_ERR_INVALID_ARGUMENT = 7,
  ADLS_ERR_BUFFER_TOO_SMALL = 8,
  ADLS_ERR_INTERNAL = 9
} adls_status;

typedef struct adls_config adls_config;
typedef struct adls_run adls_run;
typedef struct adls_comparison adls_comparison;
typedef struct adls_bench adls_bench;
typedef struct adls_model adls_model;
typedef struct adls_prequential adls_prequential;

ADLS_API const char* adls_version(void);
ADLS_API const char* adls_status_name(adls_status status);

/* Message and subject (offending path, key or parameter; may be empty) of
 * the last failed call on this thread. */
ADLS_API const char* adls_last_error(void);
ADLS_API const char* adls_last_error_subject(void);

/* ---- experiment configuration ---- */
ADLS_API adls_status adls_config_create(adls_config** out);
ADLS_API void adls_config_destroy(adls_config* config);
ADLS_API adls_status adls_config_set(adls_config* config, const char* key, const char* value);
ADLS_API adls_status adls_config_get(const adls_config* config, const char* key, char* buffer, size_t capacity,
                                     size_t* needed);
ADLS_API adls_status adls_config_load_file(adls_config* config, const char* path);
/* Applies ADLS_OUTPUT_DIR and ADLS_THREADS when set. */
ADLS_API adls_status adls_config_apply_env(adls_config* config);
ADLS_API adls_status adls_config_serialize(const adls_config* config, char* buffer, size_t capacity, size_t* needed);
ADLS_API size_t adls_config_key_count(void);
ADLS_API const char* adls_config_key(size_t index);

/* ---- run ---- */
/* Runs the pipeline and writes its outputs into the configured directory.
 * A worker failure still yields a run handle with partial results; inspect
 * adls_run_status. Setup failures (bad config, missing dataset) return an
 * error and no handle. */
ADLS_API adls_status adls_run_create(const adls_config* config, adls_run** out);
ADLS_API void adls_run_destroy(adls_run* run);
ADLS_API adls_status adls_run_status(const adls_run* run);
ADLS_API const char* adls_run_error(const adls_run* run);
ADLS_API const char* adls_run_error_subject(const adls_run* run);
ADLS_API double adls_run_final_kappa(const adls_run* run);
ADLS_API double adls_run_mean_kappa(const adls_run* run);
ADLS_API double adls_run_mean_latency_ms(const adls_run* run);
ADLS_API uint64_t adls_run_prediction_count(const adls_run* run);
ADLS_API adls_status adls_run_summary_json(const adls_run* run, char* buffer, size_t capacity, size_t* needed);
ADLS_API size_t adls_run_file_count(const adls_run* run);
ADLS_API const char* adls_run_file(const adls_run* run, size_t index);

/* ---- statistical comparison ---- */
typedef struct adls_pair_result {
  size_t first;
  size_t second;
  double z;
  double p_value;
  double adjusted_p;
  int rejected;
} adls_pair_result;

/* One result-matrix CSV, or several run summary JSON files. */
ADLS_API adls_status adls_compare_files(const char* const* paths, size_t count, double alpha, adls_comparison** out);
ADLS_API void adls_comparison_destroy(adls_comparison* comparison);
ADLS_API size_t adls_comparison_model_count(const adls_comparison* comparison);
ADLS_API size_t adls_comparison_dataset_count(const adls_comparison* comparison);
ADLS_API const char* adls_comparison_model(const adls_comparison* comparison, size_t index);
ADLS_API double adls_comparison_rank(const adls_comparison* comparison, size_t index);
ADLS_API double adls_comparison_friedman_statistic(const adls_comparison* comparison);
ADLS_API double adls_comparison_friedman_p(const adls_comparison* comparison);
ADLS_API const char* adls_comparison_method(const adls_comparison* comparison);
ADLS_API size_t adls_comparison_pair_count(const adls_comparison* comparison);
ADLS_API adls_status adls_comparison_pair(const adls_comparison* comparison, size_t index, adls_pair_result* out);
ADLS_API adls_status adls_comparison_text(const adls_comparison* comparison, char* buffer, size_t capacity,
                                          size_t* needed);
ADLS_API adls_status adls_comparison_ranks_csv(const adls_comparison* comparison, char* buffer, size_t capacity,
                                               size_t* needed);
ADLS_API adls_status adls_comparison_posthoc_csv(const adls_comparison* comparison, char* buffer, size_t capacity,
                                                 size_t* needed);

/* ---- latency benchmark ---- */
typedef struct adls_bench_row {
  const char* architecture;
  uint64_t instances;
  double mean_ms;
  double median_ms;
  double p99_ms;
  double throughput_per_s;
  double final_kappa;
  uint64_t parameters;
} adls_bench_row;

/* Runs every named architecture on the configured stream. serialized != 0
 * interleaves training in the classifier thread so latencies are measured
 * without CPU contention from the trainer. */
ADLS_API adls_status adls_bench_create(const adls_config* config, const char* const* architectures, size_t count,
                                       int serialized, adls_bench** out);
ADLS_API void adls_bench_destroy(adls_bench* bench);
ADLS_API size_t adls_bench_row_count(const adls_bench* bench);
ADLS_API adls_status adls_bench_row_at(const adls_bench* bench, size_t index, adls_bench_row* out);
ADLS_API const char* adls_bench_ordering(const adls_bench* bench);
ADLS_API adls_status adls_bench_csv(const adls_bench* bench, char* buffer, size_t capacity, size_t* needed);
ADLS_API adls_status adls_bench_text(const adls_bench* bench, char* buffer, size_t capacity, size_t* needed);

/* ---- models ---- */
/* precision_bits is 32 or 64. */
ADLS_API adls_status adls_model_create(const char* architecture, size_t features, size_t classes, int precision_bits,
                                       uint64_t seed, adls_model** out);
ADLS_API void adls_model_destroy(adls_model* model);
ADLS_API adls_status adls_model_predict(adls_model* model, const double* series, size_t length, size_t* predicted);
ADLS_API adls_status adls_model_probabilities(adls_model* model, const double* series, size_t length,
                                              double* probabilities, size_t classes);
/* weights_only != 0 leaves out dense-layer biases. */
ADLS_API adls_status adls_model_parameter_count(const adls_model* model, int weights_only, uint64_t* out);
ADLS_API uint64_t adls_model_published_formula(const adls_model* model);
ADLS_API adls_status adls_model_fingerprint(const adls_model* model, char* buffer, size_t capacity, size_t* needed);
ADLS_API adls_status adls_model_save_snapshot(adls_model* model, const char* path, uint64_t version);
ADLS_API adls_status adls_model_load_snapshot(adls_model* model, const char* path, uint64_t* version);

/* ---- prequential evaluation ---- */
ADLS_API adls_status adls_prequential_create(size_t classes, double alpha, adls_prequential** out);
ADLS_API void adls_prequential_destroy(adls_prequential* state);
ADLS_API adls_status adls_prequential_update(adls_prequential* state, size_t true_label, size_t predicted_label);
ADLS_API adls_status adls_prequential_accuracy(const adls_prequential* state, double* out);
ADLS_API adls_status adls_prequential_kappa(const adls_prequential* state, double* out);

/* ---- data ---- */
/* Writes a class-dependent noisy sinusoid dataset in UCR format. */
ADLS_API adls_status adls_write_synthetic(const char* path, size_t instances, size_t length, size_t classes,
                                          double snr_db, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* ADLS_H */
