#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posetrans/dataset.hpp"
#include "posetrans/discriminator.hpp"
#include "posetrans/geometry.hpp"
#include "posetrans/gmm.hpp"
#include "posetrans/metrics.hpp"
#include "posetrans/types.hpp"

namespace posetrans {

struct PcmSettings {
  int n_components = 20;
  GmmConfig em;
  int min_labeled_keypoints = 6;  // poses below this are excluded from fitting
};

/// Ranges for the deliberately implausible fakes the discriminator trains
/// against (widened well beyond the augmentation ranges).
struct FakeRanges {
  double scale_min = 0.4;
  double scale_max = 1.8;
  double rotation_min = deg_to_rad(-120.0);
  double rotation_max = deg_to_rad(120.0);
};

struct PipelineConfig {
  std::string annotations_path;
  std::string images_dir;
  std::string masks_dir;
  std::string limb_labels_path;

  AugConfig aug;
  DiscTrainConfig disc;
  FakeRanges disc_fakes;
  PcmSettings pcm;
  InpaintParams inpaint;

  std::string out_dir = "out";
  std::string pcm_model_file = "pcm_model.json";
  std::string discriminator_file = "discriminator.json";

  std::uint64_t seed = 0;
  int workers = 1;
  bool refit_after_augment = true;
  std::string selection = "pcm";  // "pcm" (rarity) or "random" (w/o-PCM, T=1)

  static PipelineConfig load(const std::string& path);

  std::string pcm_model_path() const { return out_dir + "/" + pcm_model_file; }
  std::string discriminator_path() const { return out_dir + "/" + discriminator_file; }
};

/// Per-instance pool trace written to the JSON-lines ledger.
struct PoolRecord {
  std::int64_t annotation_id = 0;
  int attempts = 0;
  int accepted = 0;
  int rejected = 0;
  std::vector<double> scores;    // every attempt's plausibility, in order
  std::vector<double> rarities;  // accepted samples' rarity scores
  int chosen = -1;               // index into the accepted pool
  bool skipped = true;
  std::string reason;
};

struct FitPcmSummary {
  int poses_used = 0;
  int poses_excluded = 0;
  std::string model_path;
};

struct TrainDiscSummary {
  int real_poses = 0;
  double best_holdout_loss = 0.0;
  std::string checkpoint_path;
};

struct AugmentSummary {
  int eligible = 0;
  int augmented = 0;
  int skipped = 0;
  std::string annotations_path;
  std::string ledger_path;
  std::string refit_model_path;  // empty when refit disabled
};

struct BaselineSummary {
  std::string mode;
  std::string output_path;
  int duplicates = 0;  // oversample mode
};

FitPcmSummary cmd_fit_pcm(const PipelineConfig& config);
TrainDiscSummary cmd_train_discriminator(const PipelineConfig& config);
AugmentSummary cmd_augment(const PipelineConfig& config);
EvalReport cmd_evaluate(const PipelineConfig& config, const std::string& predictions_path);
BaselineSummary cmd_baselines(const PipelineConfig& config, const std::string& mode);
void cmd_cluster_report(const PipelineConfig& config);

/// Formats an EvalReport as the human-readable table the CLI prints.
std::string format_eval_report(const EvalReport& report);

/// Widened-range PTM fake for discriminator training: transforms the pixel
/// pose (endpoint-visibility gating only) and normalizes against the bbox.
NormalizedPose make_fake_pose(const PersonInstance& instance, const AugConfig& widened,
                              Rng& rng);

/// The augmentation config with fake ranges substituted in.
AugConfig widened_config(const AugConfig& base, const FakeRanges& ranges);

}  // namespace posetrans
