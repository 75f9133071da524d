#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posetrans/dataset.hpp"
#include "posetrans/gmm.hpp"
#include "posetrans/types.hpp"

namespace posetrans {

struct PosePrediction {
  std::int64_t image_id = 0;
  Pose pose;
  std::array<double, kNumJoints> keypoint_scores{};
  double score = 0.0;
  double extent_area = 0.0;  // keypoint-extent bbox area, set at load time
};

struct GroundTruthInstance {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  Pose pose;
  Box bbox;
  double area = 0.0;
  int category = -1;  // PCM hard label; -1 = not categorized
};

struct EvalParams {
  std::vector<double> thresholds;  // OKS thresholds, default 0.50:0.05:0.95
  std::vector<double> sigmas;      // per-keypoint constants, default COCO
  int max_detections = 20;         // per-image cap, by score

  static EvalParams defaults();
};

/// Object keypoint similarity: mean over labeled GT keypoints of
/// exp(-d^2 / (2 * area * k^2)) with k = 2 * sigma.
/// Throws NoLabeledKeypoints / InvalidArgument (area <= 0).
double oks(const Pose& pred, const Pose& gt, double area,
           const std::vector<double>& sigmas);

/// Greedy per-image matching: predictions in descending score order, each
/// matched to the unmatched GT with the highest OKS >= threshold. Ties break
/// to the earlier prediction / lower GT index.
struct Matching {
  std::vector<int> pred_to_gt;  // index into gts, -1 = unmatched (false positive)
  std::vector<int> gt_to_pred;  // index into preds, -1 = unmatched (false negative)
};
Matching match_detections(const std::vector<PosePrediction>& preds,
                          const std::vector<GroundTruthInstance>& gts,
                          double oks_threshold, const EvalParams& params);

struct ApSummary {
  std::optional<double> ap, ap50, ap75, ap_medium, ap_large, ar;
};

/// COCO-style AP/AR: 101-point interpolated precision averaged over the OKS
/// thresholds; AR is the mean over thresholds of the final recall. Area
/// splits (medium/large) restrict GTs by annotation area and predictions by
/// keypoint-extent area. Throws NoGroundTruth when gts is empty.
ApSummary average_precision(const std::vector<PosePrediction>& preds,
                            const std::vector<GroundTruthInstance>& gts,
                            const EvalParams& params);

struct CategoryAp {
  int category = 0;
  int gt_count = 0;
  std::optional<double> ap, ar;
};

struct EvalReport {
  ApSummary overall;
  std::vector<CategoryAp> per_category;
  std::optional<double> ap_bal, ar_bal;
  std::size_t num_predictions = 0;
  std::size_t num_ground_truths = 0;
  std::size_t ignored_predictions = 0;  // unknown image ids, counted by the caller
};

/// Per-category AP/AR averaged over categories (equal weight per category).
/// Matching is label-blind; a prediction matched to another category's GT is
/// ignored for that category (neither TP nor FP). Categories without GTs are
/// excluded from the mean and reported absent.
EvalReport balanced_ap(const std::vector<PosePrediction>& preds,
                       std::vector<GroundTruthInstance> gts,  // categories filled in
                       const EvalParams& params);

/// Labels each GT by its PCM hard cluster (normalized against its bbox).
void categorize_ground_truths(std::vector<GroundTruthInstance>& gts,
                              const GmmModel& pcm);

/// Builds the GT list for evaluation from a dataset.
std::vector<GroundTruthInstance> ground_truths_from_dataset(const Dataset& dataset);

/// COCO results JSON: [{image_id, category_id, keypoints:[x,y,score]*J,
/// score}]. Throws MalformedFile / SchemaError.
std::vector<PosePrediction> load_coco_results(const std::string& path);

}  // namespace posetrans
