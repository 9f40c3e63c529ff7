/* lstmf: multi-length trajectory features, Fisher vector encoding and
 * linear SVM evaluation behind a plain C interface.
 *
 * Every function returns an lstmf_status; on failure lstmf_last_error()
 * describes the problem for the calling thread. Status values double as the
 * command-line exit codes. Strings returned through char** are owned by the
 * caller and released with lstmf_free_string. */
#ifndef LSTMF_LSTMF_H
#define LSTMF_LSTMF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LSTMF_API __declspec(dllexport)
#else
#define LSTMF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lstmf_status {
  LSTMF_OK = 0,
  LSTMF_ERR_GENERIC = 1,
  LSTMF_ERR_INPUT = 2,              /* unreadable or malformed input */
  LSTMF_ERR_CONFIG = 3,             /* invalid configuration */
  LSTMF_ERR_INSUFFICIENT_DATA = 4,  /* too few descriptors to fit the encoder */
  LSTMF_ERR_LENGTH_MISMATCH = 5,    /* requested lengths not covered by the encoder */
  LSTMF_ERR_MANIFEST_MISMATCH = 6,  /* manifest and representations disagree */
  LSTMF_ERR_CONFIG_HASH_MISMATCH = 7,
  LSTMF_ERR_INVALID_ARGUMENT = 8
} lstmf_status;

typedef enum lstmf_pool_mode { LSTMF_POOL_JOINT = 0, LSTMF_POOL_CONCAT = 1 } lstmf_pool_mode;

typedef struct lstmf_config lstmf_config;
typedef struct lstmf_encoder lstmf_encoder;
typedef struct lstmf_model lstmf_model;

LSTMF_API const char* lstmf_version(void);
LSTMF_API const char* lstmf_last_error(void);
LSTMF_API void lstmf_free_string(char* s);

/* ---- configuration ---- */

LSTMF_API lstmf_status lstmf_config_create(lstmf_config** out);
LSTMF_API lstmf_status lstmf_config_load(const char* path, lstmf_config** out);
LSTMF_API lstmf_status lstmf_config_parse(const char* json, lstmf_config** out);
LSTMF_API void lstmf_config_destroy(lstmf_config* cfg);

/* Tracker lengths; the encoder lengths follow. */
LSTMF_API lstmf_status lstmf_config_set_lengths(lstmf_config* cfg, const int* lengths, size_t n);
LSTMF_API lstmf_status lstmf_config_set_encoder_lengths(lstmf_config* cfg, const int* lengths, size_t n);
LSTMF_API lstmf_status lstmf_config_set_mode(lstmf_config* cfg, lstmf_pool_mode mode);
LSTMF_API lstmf_status lstmf_config_set_seed(lstmf_config* cfg, uint64_t seed);
LSTMF_API lstmf_status lstmf_config_set_jobs(lstmf_config* cfg, int jobs);
LSTMF_API lstmf_status lstmf_config_set_stabilize(lstmf_config* cfg, int enabled);
LSTMF_API lstmf_status lstmf_config_set_svm_c(lstmf_config* cfg, double c);
LSTMF_API lstmf_status lstmf_config_set_gaussians(lstmf_config* cfg, int k);
LSTMF_API lstmf_status lstmf_config_set_sample_budget(lstmf_config* cfg, uint64_t budget);
/* Non-zero pools predictions over folds before averaging accuracy. */
LSTMF_API lstmf_status lstmf_config_set_pooled_accuracy(lstmf_config* cfg, int pooled);

LSTMF_API lstmf_status lstmf_config_validate(const lstmf_config* cfg);
LSTMF_API lstmf_status lstmf_config_to_json(const lstmf_config* cfg, char** out);
/* Hash of the feature-shaping settings and of the whole configuration. */
LSTMF_API lstmf_status lstmf_config_hash(const lstmf_config* cfg, uint64_t* extraction, uint64_t* full);

/* ---- pipeline stages ---- */

/* Extracts inputs[i] into outputs[i] (video id = file stem), up to
 * cfg jobs files at a time. summary_json, if non-null, receives a JSON array
 * with one {video_id, frames, scales, blocks, rejected_static,
 * rejected_drift, warnings} object per input. */
LSTMF_API lstmf_status lstmf_extract(const lstmf_config* cfg, const char* const* inputs, const char* const* outputs,
                                     size_t n, char** summary_json);

LSTMF_API lstmf_status lstmf_fit_encoder(const lstmf_config* cfg, const char* const* feature_files, size_t n,
                                         const char* output_path);

LSTMF_API lstmf_status lstmf_encoder_load(const char* path, lstmf_encoder** out);
LSTMF_API void lstmf_encoder_destroy(lstmf_encoder* enc);
LSTMF_API lstmf_status lstmf_encoder_info(const lstmf_encoder* enc, lstmf_pool_mode* mode, int* gaussians,
                                          uint64_t* feature_config_hash);
/* Encoder lengths; *n is the capacity on input and the count on output. */
LSTMF_API lstmf_status lstmf_encoder_lengths(const lstmf_encoder* enc, int* lengths, size_t* n);
LSTMF_API lstmf_status lstmf_encoder_dimension(const lstmf_encoder* enc, lstmf_pool_mode mode, size_t num_lengths,
                                               size_t* dim);

/* Encodes one feature file into `out` (capacity `cap`); *dim receives the size. */
LSTMF_API lstmf_status lstmf_encode_file(const lstmf_encoder* enc, const char* feature_file, lstmf_pool_mode mode,
                                         const int* lengths, size_t num_lengths, double* out, size_t cap,
                                         size_t* dim);
/* Writes <output_dir>/<video id>.lrep per feature file. */
LSTMF_API lstmf_status lstmf_encode(const lstmf_encoder* enc, const char* const* feature_files, size_t n,
                                    lstmf_pool_mode mode, const int* lengths, size_t num_lengths,
                                    const char* output_dir, int jobs);

/* rep_dir may be null to use each manifest entry's own path. */
LSTMF_API lstmf_status lstmf_train(const lstmf_config* cfg, const char* manifest_path, const char* rep_dir,
                                   const char* model_path);
/* protocol: "split" or "logo"; metric: "macc" or "map". report_path and
 * report_json may each be null. */
LSTMF_API lstmf_status lstmf_evaluate(const lstmf_config* cfg, const char* manifest_path, const char* rep_dir,
                                      const char* protocol, const char* metric, const char* report_path,
                                      char** report_json);

/* ---- trained models ---- */

LSTMF_API lstmf_status lstmf_model_load(const char* path, lstmf_model** out);
LSTMF_API void lstmf_model_destroy(lstmf_model* model);
LSTMF_API size_t lstmf_model_num_classes(const lstmf_model* model);
LSTMF_API size_t lstmf_model_dimension(const lstmf_model* model);
/* Null when i is out of range. */
LSTMF_API const char* lstmf_model_class_label(const lstmf_model* model, size_t i);
/* out receives one score per class. */
LSTMF_API lstmf_status lstmf_model_scores(const lstmf_model* model, const double* x, size_t dim, double* out);

#ifdef __cplusplus
}
#endif

#endif
