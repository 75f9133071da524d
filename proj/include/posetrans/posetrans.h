/* posetrans C API: opaque handles + status codes over the C++ core.
 *
 * Every function returns POSETRANS_OK (0) on success; on failure the return
 * value classifies the error and posetrans_last_error() gives a thread-local
 * human-readable message. Handles are created by *_load/*_create functions
 * and released with the matching *_free; passing NULL where a handle is
 * required yields POSETRANS_ERROR_INVALID_ARGUMENT.
 */
#ifndef POSETRANS_H
#define POSETRANS_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum posetrans_status {
  POSETRANS_OK = 0,
  POSETRANS_ERROR_INVALID_ARGUMENT = 1, /* bad arguments, missing inputs, bad config */
  POSETRANS_ERROR_FORMAT = 2,           /* unparseable or schema-violating file */
  POSETRANS_ERROR_IO = 3,               /* read/write failure mid-run */
  POSETRANS_ERROR_NUMERIC = 4,          /* divergence, degenerate math */
  POSETRANS_ERROR_INSUFFICIENT_DATA = 5,
  POSETRANS_ERROR_RUNTIME = 6,
} posetrans_status;

/* Thread-local message for the most recent failure in this thread. */
const char* posetrans_last_error(void);

const char* posetrans_version(void);

/* ---------------------------------------------------------------- config */

typedef struct posetrans_config posetrans_config;

posetrans_status posetrans_config_load(const char* path, posetrans_config** out);
void posetrans_config_free(posetrans_config* config);

posetrans_status posetrans_config_set_seed(posetrans_config* config, uint64_t seed);
posetrans_status posetrans_config_set_workers(posetrans_config* config, int workers);
posetrans_status posetrans_config_set_out_dir(posetrans_config* config, const char* dir);
/* mode: "pcm" or "random" */
posetrans_status posetrans_config_set_selection(posetrans_config* config, const char* mode);
posetrans_status posetrans_config_set_refit(posetrans_config* config, int enabled);

/* -------------------------------------------------------- pipeline stages */

posetrans_status posetrans_run_fit_pcm(const posetrans_config* config);
posetrans_status posetrans_run_train_discriminator(const posetrans_config* config);

typedef struct posetrans_augment_stats {
  int32_t eligible;
  int32_t augmented;
  int32_t skipped;
} posetrans_augment_stats;

posetrans_status posetrans_run_augment(const posetrans_config* config,
                                       posetrans_augment_stats* stats_or_null);
posetrans_status posetrans_run_evaluate(const posetrans_config* config,
                                        const char* predictions_path,
                                        char** report_text_or_null);
/* mode: "oversample" or "reweight" */
posetrans_status posetrans_run_baselines(const posetrans_config* config, const char* mode);
posetrans_status posetrans_run_cluster_report(const posetrans_config* config);

/* Frees strings returned through char** out-parameters. */
void posetrans_string_free(char* text);

/* ------------------------------------------------------------- PCM model */

typedef struct posetrans_gmm posetrans_gmm;

posetrans_status posetrans_gmm_load(const char* path, posetrans_gmm** out);
void posetrans_gmm_free(posetrans_gmm* model);

posetrans_status posetrans_gmm_components(const posetrans_gmm* model, int32_t* out);
posetrans_status posetrans_gmm_dim(const posetrans_gmm* model, int32_t* out);

/* coords: flattened pose vector of length dim (2 * 17 for COCO poses). */
posetrans_status posetrans_gmm_density(const posetrans_gmm* model, const double* coords,
                                       int32_t dim, double* out);
/* posteriors_out must hold `components` doubles; label_out/rarity_out may be NULL. */
posetrans_status posetrans_gmm_responsibilities(const posetrans_gmm* model,
                                                const double* coords, int32_t dim,
                                                double* posteriors_out,
                                                int32_t* label_out, double* rarity_out);

/* ---------------------------------------------------------- discriminator */

typedef struct posetrans_discriminator posetrans_discriminator;

posetrans_status posetrans_discriminator_load(const char* path,
                                              posetrans_discriminator** out);
void posetrans_discriminator_free(posetrans_discriminator* model);

/* keypoints_xyv: 17 * (x, y, vis) triplets in normalized crop space
 * (x, y in [0,1]; vis in {0,1,2}). Returns the plausibility in (0,1). */
posetrans_status posetrans_discriminator_score(const posetrans_discriminator* model,
                                               const double* keypoints_xyv,
                                               double* score_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* POSETRANS_H */
