#include "posetrans/posetrans.h"

#include <cstring>
#include <string>

#include "posetrans/discriminator.hpp"
#include "posetrans/gmm.hpp"
#include "posetrans/pipeline.hpp"

struct posetrans_config {
  posetrans::PipelineConfig cfg;
};

struct posetrans_gmm {
  posetrans::GmmModel model;
};

struct posetrans_discriminator {
  posetrans::DiscriminatorModel model;
};

namespace {

thread_local std::string g_last_error;

posetrans_status classify(const posetrans::Error& e) {
  using posetrans::ErrorCode;
  switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DegenerateBox:
    case ErrorCode::EmptyPool:
    case ErrorCode::NoLabeledKeypoints:
    case ErrorCode::NoGroundTruth:
      return POSETRANS_ERROR_INVALID_ARGUMENT;
    case ErrorCode::MalformedFile:
    case ErrorCode::SchemaError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LabelOutOfRange:
      return POSETRANS_ERROR_FORMAT;
    case ErrorCode::IoError:
      return POSETRANS_ERROR_IO;
    case ErrorCode::NonConvergent:
    case ErrorCode::InvalidScale:
    case ErrorCode::SingularMatrix:
    case ErrorCode::DegenerateComponent:
    case ErrorCode::AllZeroDensity:
    case ErrorCode::Diverged:
      return POSETRANS_ERROR_NUMERIC;
    case ErrorCode::InsufficientData:
      return POSETRANS_ERROR_INSUFFICIENT_DATA;
    case ErrorCode::EmptyImage:
    case ErrorCode::FullMask:
    case ErrorCode::NoTransformableLimb:
      return POSETRANS_ERROR_RUNTIME;
  }
  return POSETRANS_ERROR_RUNTIME;
}

template <typename Fn>
posetrans_status guarded(Fn&& fn) {
  try {
    fn();
    return POSETRANS_OK;
  } catch (const posetrans::Error& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return POSETRANS_ERROR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return POSETRANS_ERROR_RUNTIME;
  }
}

posetrans_status invalid(const char* message) {
  g_last_error = message;
  return POSETRANS_ERROR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* posetrans_last_error(void) { return g_last_error.c_str(); }

const char* posetrans_version(void) { return "posetrans 1.0.0"; }

posetrans_status posetrans_config_load(const char* path, posetrans_config** out) {
  if (!path || !out) return invalid("path and out must be non-NULL");
  return guarded([&] {
    auto* handle = new posetrans_config{posetrans::PipelineConfig::load(path)};
    *out = handle;
  });
}

void posetrans_config_free(posetrans_config* config) { delete config; }

posetrans_status posetrans_config_set_seed(posetrans_config* config, uint64_t seed) {
  if (!config) return invalid("config must be non-NULL");
  config->cfg.seed = seed;
  config->cfg.aug.rng_seed = seed;
  config->cfg.pcm.em.seed = seed;
  config->cfg.disc.seed = seed;
  return POSETRANS_OK;
}

posetrans_status posetrans_config_set_workers(posetrans_config* config, int workers) {
  if (!config) return invalid("config must be non-NULL");
  if (workers < 1) return invalid("workers must be >= 1");
  config->cfg.workers = workers;
  return POSETRANS_OK;
}

posetrans_status posetrans_config_set_out_dir(posetrans_config* config, const char* dir) {
  if (!config || !dir) return invalid("config and dir must be non-NULL");
  config->cfg.out_dir = dir;
  return POSETRANS_OK;
}

posetrans_status posetrans_config_set_selection(posetrans_config* config, const char* mode) {
  if (!config || !mode) return invalid("config and mode must be non-NULL");
  const std::string m = mode;
  if (m != "pcm" && m != "random") return invalid("selection must be pcm or random");
  config->cfg.selection = m;
  return POSETRANS_OK;
}

posetrans_status posetrans_config_set_refit(posetrans_config* config, int enabled) {
  if (!config) return invalid("config must be non-NULL");
  config->cfg.refit_after_augment = enabled != 0;
  return POSETRANS_OK;
}

posetrans_status posetrans_run_fit_pcm(const posetrans_config* config) {
  if (!config) return invalid("config must be non-NULL");
  return guarded([&] { posetrans::cmd_fit_pcm(config->cfg); });
}

posetrans_status posetrans_run_train_discriminator(const posetrans_config* config) {
  if (!config) return invalid("config must be non-NULL");
  return guarded([&] { posetrans::cmd_train_discriminator(config->cfg); });
}

posetrans_status posetrans_run_augment(const posetrans_config* config,
                                       posetrans_augment_stats* stats_or_null) {
  if (!config) return invalid("config must be non-NULL");
  return guarded([&] {
    const posetrans::AugmentSummary s = posetrans::cmd_augment(config->cfg);
    if (stats_or_null) {
      stats_or_null->eligible = s.eligible;
      stats_or_null->augmented = s.augmented;
      stats_or_null->skipped = s.skipped;
    }
  });
}

posetrans_status posetrans_run_evaluate(const posetrans_config* config,
                                        const char* predictions_path,
                                        char** report_text_or_null) {
  if (!config || !predictions_path) {
    return invalid("config and predictions_path must be non-NULL");
  }
  return guarded([&] {
    const posetrans::EvalReport report =
        posetrans::cmd_evaluate(config->cfg, predictions_path);
    if (report_text_or_null) {
      const std::string text = posetrans::format_eval_report(report);
      char* buffer = new char[text.size() + 1];
      std::memcpy(buffer, text.c_str(), text.size() + 1);
      *report_text_or_null = buffer;
    }
  });
}

posetrans_status posetrans_run_baselines(const posetrans_config* config, const char* mode) {
  if (!config || !mode) return invalid("config and mode must be non-NULL");
  return guarded([&] { posetrans::cmd_baselines(config->cfg, mode); });
}

posetrans_status posetrans_run_cluster_report(const posetrans_config* config) {
  if (!config) return invalid("config must be non-NULL");
  return guarded([&] { posetrans::cmd_cluster_report(config->cfg); });
}

void posetrans_string_free(char* text) { delete[] text; }

posetrans_status posetrans_gmm_load(const char* path, posetrans_gmm** out) {
  if (!path || !out) return invalid("path and out must be non-NULL");
  return guarded([&] { *out = new posetrans_gmm{posetrans::load_gmm(path)}; });
}

void posetrans_gmm_free(posetrans_gmm* model) { delete model; }

posetrans_status posetrans_gmm_components(const posetrans_gmm* model, int32_t* out) {
  if (!model || !out) return invalid("model and out must be non-NULL");
  *out = model->model.n_components;
  return POSETRANS_OK;
}

posetrans_status posetrans_gmm_dim(const posetrans_gmm* model, int32_t* out) {
  if (!model || !out) return invalid("model and out must be non-NULL");
  *out = model->model.dim;
  return POSETRANS_OK;
}

posetrans_status posetrans_gmm_density(const posetrans_gmm* model, const double* coords,
                                       int32_t dim, double* out) {
  if (!model || !coords || !out) return invalid("model, coords, out must be non-NULL");
  return guarded([&] {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(coords, dim);
    *out = posetrans::density(model->model, x);
  });
}

posetrans_status posetrans_gmm_responsibilities(const posetrans_gmm* model,
                                                const double* coords, int32_t dim,
                                                double* posteriors_out,
                                                int32_t* label_out, double* rarity_out) {
  if (!model || !coords || !posteriors_out) {
    return invalid("model, coords, posteriors_out must be non-NULL");
  }
  return guarded([&] {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(coords, dim);
    const posetrans::ClusterAssignment a = posetrans::responsibilities(model->model, x);
    for (int k = 0; k < model->model.n_components; ++k) posteriors_out[k] = a.posterior[k];
    if (label_out) *label_out = a.hard_label;
    if (rarity_out) *rarity_out = a.rarity;
  });
}

posetrans_status posetrans_discriminator_load(const char* path,
                                              posetrans_discriminator** out) {
  if (!path || !out) return invalid("path and out must be non-NULL");
  return guarded([&] {
    *out = new posetrans_discriminator{posetrans::load_discriminator(path)};
  });
}

void posetrans_discriminator_free(posetrans_discriminator* model) { delete model; }

posetrans_status posetrans_discriminator_score(const posetrans_discriminator* model,
                                               const double* keypoints_xyv,
                                               double* score_out) {
  if (!model || !keypoints_xyv || !score_out) {
    return invalid("model, keypoints_xyv, score_out must be non-NULL");
  }
  return guarded([&] {
    posetrans::NormalizedPose pose;
    for (int j = 0; j < posetrans::kNumJoints; ++j) {
      const int v = static_cast<int>(keypoints_xyv[3 * j + 2]);
      if (v < 0 || v > 2) {
        throw posetrans::Error(posetrans::ErrorCode::InvalidArgument,
                               "visibility flags must be in {0,1,2}");
      }
      pose[j].x = keypoints_xyv[3 * j];
      pose[j].y = keypoints_xyv[3 * j + 1];
      pose[j].vis = static_cast<posetrans::Visibility>(v);
    }
    *score_out = posetrans::forward(model->model, posetrans::extract_pose_features(pose));
  });
}

}  // extern "C"
