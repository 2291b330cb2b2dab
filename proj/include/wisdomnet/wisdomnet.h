/*
 * C interface to the wisdomnet library.
 *
 * Every fallible call returns a wn_status; on failure a one-line message is
 * available from wn_last_error() on the calling thread until the next call.
 * Objects are opaque handles released with their matching *_free function.
 * Output handles are written only on success.
 */
#ifndef WISDOMNET_H
#define WISDOMNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WN_API __declspec(dllexport)
#else
#define WN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wn_status {
  WN_OK = 0,
  WN_ERR_INVALID_ARGUMENT = 1,
  WN_ERR_DIMENSION = 2,
  WN_ERR_NON_FINITE = 3,
  WN_ERR_IO = 4,
  WN_ERR_FORMAT = 5,
  WN_ERR_VERSION = 6,
  WN_ERR_CHECKSUM = 7,
  WN_ERR_DIVERGENCE = 8,
  WN_ERR_INTERNAL = 99
} wn_status;

typedef struct wn_config wn_config;
typedef struct wn_dataset wn_dataset;
typedef struct wn_member wn_member;
typedef struct wn_layer wn_layer;
typedef struct wn_model wn_model;
typedef struct wn_report_list wn_report_list;

/* Index 0/1: COVID layer positive/negative, ARDS layer non-ARDS/ARDS. */
typedef struct wn_pair {
  double p_class0;
  double p_class1;
} wn_pair;

typedef struct wn_dispersion {
  size_t count;
  double mean[2];
  double stddev[2];
  double normal_mu[2];
  double normal_sigma[2];
  int high_variance;
} wn_dispersion;

typedef struct wn_evaluation {
  /* confusion[truth][decision], 0 = positive, 1 = negative */
  size_t confusion[2][2];
  size_t total;
  size_t false_negatives;
  size_t false_positives;
  double accuracy;
} wn_evaluation;

typedef struct wn_split_row {
  double train_fraction;
  double test_fraction;
  wn_evaluation result;
} wn_split_row;

typedef struct wn_synthetic_spec {
  size_t covid;
  size_t healthy;
  size_t bacterial;
  size_t viral;
  size_t ards;
  size_t input_side;
  double noise;
} wn_synthetic_spec;

typedef struct wn_report_summary {
  const char* subject_id; /* owned by the report list */
  wn_pair covid;
  int is_negative;
  int has_ards;
  double ards_probability;
  wn_pair ards;
  size_t covid_members;
  size_t ards_members;
  wn_dispersion covid_dispersion;
} wn_report_summary;

typedef enum wn_layer_role { WN_LAYER_COVID = 0, WN_LAYER_ARDS = 1 } wn_layer_role;

WN_API const char* wn_last_error(void);
WN_API const char* wn_version(void);

/* Configuration (plain-text key = value). */
WN_API wn_status wn_config_create(wn_config** out);
WN_API wn_status wn_config_load(const char* path, wn_config** out);
WN_API wn_status wn_config_set(wn_config* cfg, const char* key, const char* value);
WN_API wn_status wn_config_validate(const wn_config* cfg);
WN_API size_t wn_config_input_side(const wn_config* cfg);
WN_API double wn_config_high_variance_threshold(const wn_config* cfg);
WN_API void wn_config_free(wn_config* cfg);

/* Datasets and images. */
WN_API wn_status wn_dataset_generate(const wn_synthetic_spec* spec, uint64_t seed, wn_dataset** out);
WN_API wn_status wn_dataset_load_manifest(const char* manifest, size_t input_side,
                                          const char* split /* NULL = all */, wn_dataset** out);
WN_API wn_status wn_dataset_split(const wn_dataset* ds, double train_fraction, uint64_t seed,
                                  wn_dataset** train, wn_dataset** test);
WN_API wn_status wn_dataset_write(const wn_dataset* train, const wn_dataset* test /* nullable */,
                                  const char* dir);
WN_API size_t wn_dataset_size(const wn_dataset* ds);
WN_API void wn_dataset_free(wn_dataset* ds);
/* Decodes and resizes an image into side*side*3 floats (HWC, [0,1]). */
WN_API wn_status wn_load_image(const char* path, size_t side, float* out, size_t capacity);

/* Single member networks. */
WN_API wn_status wn_member_build(uint64_t seed, size_t input_side, wn_member** out);
WN_API wn_status wn_member_load(const char* path, wn_member** out);
WN_API wn_status wn_member_save(const wn_member* member, const char* path);
WN_API wn_status wn_member_forward(const wn_member* member, const float* image, size_t length,
                                   wn_pair* out);
WN_API size_t wn_member_input_side(const wn_member* member);
WN_API size_t wn_member_parameter_count(const wn_member* member);
WN_API void wn_member_free(wn_member* member);

/* Ensemble layers. */
WN_API wn_status wn_layer_load(const char* dir, wn_layer** out);
WN_API wn_status wn_layer_save(const wn_layer* layer, const char* dir);
/* `members` may be NULL; otherwise it receives min(capacity, lambda) pairs. */
WN_API wn_status wn_layer_predict(const wn_layer* layer, const float* image, size_t length,
                                  wn_pair* aggregated, wn_pair* members, size_t capacity);
WN_API size_t wn_layer_lambda(const wn_layer* layer);
WN_API uint64_t wn_layer_evaluations(const wn_layer* layer);
WN_API void wn_layer_free(wn_layer* layer);

/* Aggregation, decision and dispersion primitives. */
WN_API wn_status wn_aggregate_mean(const wn_pair* outputs, size_t count, wn_pair* out);
WN_API wn_status wn_decide(wn_pair aggregated, double negative_threshold, int strict,
                           int* is_negative);
WN_API wn_status wn_diagnose(const wn_pair* outputs, size_t count, double threshold,
                             wn_dispersion* out);

/* Two-layer model. */
WN_API wn_status wn_model_train(const wn_config* cfg, const wn_dataset* train, wn_model** out);
WN_API wn_status wn_model_save(const wn_model* model, const char* dir);
WN_API wn_status wn_model_load(const char* dir, wn_model** out);
WN_API size_t wn_model_input_side(const wn_model* model);
/* Borrowed pointer, valid while the model lives. */
WN_API const wn_layer* wn_model_layer(const wn_model* model, wn_layer_role role);
WN_API void wn_model_free(wn_model* model);

/* Cascade prediction and reports. */
WN_API wn_status wn_model_predict_dataset(const wn_model* model, const wn_config* cfg,
                                          const wn_dataset* ds, wn_report_list** out);
/* Every .pgm/.ppm/.pbm/.pnm/.png file in `dir`, in file-name order. */
WN_API wn_status wn_model_predict_directory(const wn_model* model, const wn_config* cfg,
                                            const char* dir, wn_report_list** out);
WN_API wn_status wn_reports_read(const char* path, wn_report_list** out);
WN_API size_t wn_report_count(const wn_report_list* list);
WN_API wn_status wn_report_get(const wn_report_list* list, size_t index, wn_report_summary* out);
WN_API wn_status wn_report_members(const wn_report_list* list, size_t index, wn_layer_role role,
                                   wn_pair* out, size_t capacity, size_t* count);
/* Writes reports.jsonl and plot_data.tsv into `dir`. */
WN_API wn_status wn_reports_emit(const wn_report_list* list, const char* dir);
WN_API void wn_report_list_free(wn_report_list* list);

/* Evaluation. `reports` may be NULL. */
WN_API wn_status wn_model_evaluate(const wn_model* model, const wn_config* cfg,
                                   const wn_dataset* test, wn_evaluation* out,
                                   wn_report_list** reports);
WN_API wn_status wn_evaluate_splits(const wn_config* cfg, const wn_dataset* ds,
                                    const double* fractions, size_t count, wn_split_row* rows);
WN_API wn_status wn_write_evaluation_csv(const wn_split_row* rows, size_t count, const char* path);
WN_API wn_status wn_write_confusion_csv(const wn_evaluation* result, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* WISDOMNET_H */
