#include "posetrans/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

namespace posetrans {

using nlohmann::json;

EvalParams EvalParams::defaults() {
  EvalParams p;
  for (int i = 0; i < 10; ++i) p.thresholds.push_back(0.50 + 0.05 * i);
  p.sigmas = default_oks_sigmas();
  p.max_detections = 20;
  return p;
}

double oks(const Pose& pred, const Pose& gt, double area,
           const std::vector<double>& sigmas) {
  if (!(area > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "oks requires a positive area");
  }
  if (sigmas.size() != kNumJoints) {
    throw Error(ErrorCode::InvalidArgument, "sigma list must have 17 entries");
  }
  double sum = 0.0;
  int labeled = 0;
  for (int j = 0; j < kNumJoints; ++j) {
    if (!gt[j].labeled()) continue;
    const double dx = pred[j].x - gt[j].x;
    const double dy = pred[j].y - gt[j].y;
    const double k = 2.0 * sigmas[static_cast<std::size_t>(j)];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * k * k));
    ++labeled;
  }
  if (labeled == 0) {
    throw Error(ErrorCode::NoLabeledKeypoints, "ground truth has no labeled keypoints");
  }
  return sum / labeled;
}

namespace {

/// Stable prediction order: score desc, then insertion order.
std::vector<std::size_t> sorted_pred_order(const std::vector<PosePrediction>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&preds](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });
  return order;
}

}  // namespace

Matching match_detections(const std::vector<PosePrediction>& preds,
                          const std::vector<GroundTruthInstance>& gts,
                          double oks_threshold, const EvalParams& params) {
  Matching m;
  m.pred_to_gt.assign(preds.size(), -1);
  m.gt_to_pred.assign(gts.size(), -1);
  const auto order = sorted_pred_order(preds);
  for (std::size_t p : order) {
    int best_gt = -1;
    double best_oks = oks_threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.gt_to_pred[g] >= 0) continue;
      const double v = oks(preds[p].pose, gts[g].pose, gts[g].area, params.sigmas);
      if (v > best_oks || (v == best_oks && v >= oks_threshold && best_gt == -1)) {
        best_oks = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      m.pred_to_gt[p] = best_gt;
      m.gt_to_pred[static_cast<std::size_t>(best_gt)] = static_cast<int>(p);
    }
  }
  return m;
}

namespace {

struct RankedDetection {
  double score = 0.0;
  std::int64_t image_id = 0;
  std::size_t pred_index = 0;  // original index, for deterministic tie-breaks
  int gt_global = -1;          // index into the gts vector, -1 = false positive
  int gt_category = -1;
};

/// Runs the greedy matching at one threshold over every image and returns
/// the globally ranked detection list.
std::vector<RankedDetection> rank_detections(
    const std::vector<PosePrediction>& preds,
    const std::vector<GroundTruthInstance>& gts, double threshold,
    const EvalParams& params) {
  // Group by image, preserving insertion order inside each image.
  std::map<std::int64_t, std::vector<std::size_t>> preds_by_image, gts_by_image;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds_by_image[preds[i].image_id].push_back(i);
  }
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gts_by_image[gts[i].image_id].push_back(i);
  }

  std::vector<RankedDetection> ranked;
  for (auto& [image_id, pred_ids] : preds_by_image) {
    // Cap detections per image by score (stable).
    std::stable_sort(pred_ids.begin(), pred_ids.end(),
                     [&preds](std::size_t a, std::size_t b) {
                       return preds[a].score > preds[b].score;
                     });
    if (pred_ids.size() > static_cast<std::size_t>(params.max_detections)) {
      pred_ids.resize(static_cast<std::size_t>(params.max_detections));
    }
    const auto git = gts_by_image.find(image_id);
    std::vector<bool> gt_used(git == gts_by_image.end() ? 0 : git->second.size(), false);

    for (std::size_t p : pred_ids) {
      RankedDetection det;
      det.score = preds[p].score;
      det.image_id = image_id;
      det.pred_index = p;
      if (git != gts_by_image.end()) {
        int best_local = -1;
        double best_oks = threshold;
        for (std::size_t gl = 0; gl < git->second.size(); ++gl) {
          if (gt_used[gl]) continue;
          const std::size_t g = git->second[gl];
          const double v = oks(preds[p].pose, gts[g].pose, gts[g].area, params.sigmas);
          if (v > best_oks || (v == best_oks && v >= threshold && best_local == -1)) {
            best_oks = v;
            best_local = static_cast<int>(gl);
          }
        }
        if (best_local >= 0) {
          gt_used[static_cast<std::size_t>(best_local)] = true;
          const std::size_t g = git->second[static_cast<std::size_t>(best_local)];
          det.gt_global = static_cast<int>(g);
          det.gt_category = gts[g].category;
        }
      }
      ranked.push_back(det);
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedDetection& a, const RankedDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.pred_index < b.pred_index;
  });
  return ranked;
}

/// 101-point interpolated AP and final recall from a ranked TP/FP sequence.
struct PrPoint {
  double ap = 0.0;
  double recall = 0.0;
};

PrPoint pr_from_ranked(const std::vector<char>& is_tp, std::size_t n_gt) {
  PrPoint out;
  if (n_gt == 0) return out;
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  precision.reserve(is_tp.size());
  recall.reserve(is_tp.size());
  for (char t : is_tp) {
    if (t) {
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  // Monotone (non-increasing) interpolation from the right.
  for (std::size_t i = precision.size(); i > 1; --i) {
    precision[i - 2] = std::max(precision[i - 2], precision[i - 1]);
  }
  double ap_sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double target = r / 100.0;
    double q = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= target) {
        q = precision[i];
        break;
      }
    }
    ap_sum += q;
  }
  out.ap = ap_sum / 101.0;
  out.recall = recall.empty() ? 0.0 : recall.back();
  return out;
}

constexpr double kMediumLow = 32.0 * 32.0;
constexpr double kMediumHigh = 96.0 * 96.0;

bool area_in_range(double area, int range) {
  // 0 = all, 1 = medium (32^2, 96^2], 2 = large (96^2, inf)
  if (range == 1) return area > kMediumLow && area <= kMediumHigh;
  if (range == 2) return area > kMediumHigh;
  return true;
}

struct ApAccumulator {
  double ap_sum = 0.0, ar_sum = 0.0;
  double ap50 = 0.0, ap75 = 0.0;
  int count = 0;
};

/// AP/AR over thresholds for one (pred set, gt set) restriction.
std::optional<ApAccumulator> evaluate_subset(const std::vector<PosePrediction>& preds,
                                             const std::vector<GroundTruthInstance>& gts,
                                             const EvalParams& params) {
  if (gts.empty()) return std::nullopt;
  ApAccumulator acc;
  for (double t : params.thresholds) {
    const auto ranked = rank_detections(preds, gts, t, params);
    std::vector<char> is_tp;
    is_tp.reserve(ranked.size());
    for (const RankedDetection& d : ranked) is_tp.push_back(d.gt_global >= 0 ? 1 : 0);
    const PrPoint pr = pr_from_ranked(is_tp, gts.size());
    acc.ap_sum += pr.ap;
    acc.ar_sum += pr.recall;
    if (std::abs(t - 0.50) < 1e-12) acc.ap50 = pr.ap;
    if (std::abs(t - 0.75) < 1e-12) acc.ap75 = pr.ap;
    ++acc.count;
  }
  return acc;
}

}  // namespace

ApSummary average_precision(const std::vector<PosePrediction>& preds,
                            const std::vector<GroundTruthInstance>& gts,
                            const EvalParams& params) {
  if (gts.empty()) {
    throw Error(ErrorCode::NoGroundTruth, "no ground-truth instances");
  }
  ApSummary out;
  const auto all = evaluate_subset(preds, gts, params);
  out.ap = all->ap_sum / all->count;
  out.ar = all->ar_sum / all->count;
  out.ap50 = all->ap50;
  out.ap75 = all->ap75;

  for (int range = 1; range <= 2; ++range) {
    std::vector<PosePrediction> sub_preds;
    std::vector<GroundTruthInstance> sub_gts;
    for (const auto& p : preds) {
      if (area_in_range(p.extent_area, range)) sub_preds.push_back(p);
    }
    for (const auto& g : gts) {
      if (area_in_range(g.area, range)) sub_gts.push_back(g);
    }
    const auto acc = evaluate_subset(sub_preds, sub_gts, params);
    std::optional<double> ap, ar;
    if (acc) ap = acc->ap_sum / acc->count;
    if (range == 1) out.ap_medium = ap;
    if (range == 2) out.ap_large = ap;
  }
  return out;
}

EvalReport balanced_ap(const std::vector<PosePrediction>& preds,
                       std::vector<GroundTruthInstance> gts, const EvalParams& params) {
  if (gts.empty()) {
    throw Error(ErrorCode::NoGroundTruth, "no ground-truth instances");
  }
  EvalReport report;
  report.num_predictions = preds.size();
  report.num_ground_truths = gts.size();
  report.overall = average_precision(preds, gts, params);

  std::map<int, int> gt_counts;
  for (const auto& g : gts) {
    if (g.category >= 0) ++gt_counts[g.category];
  }

  // Label-blind matching per threshold; per-category PR lists are carved out
  // of the shared ranked list (matches to other categories are dropped).
  std::map<int, ApAccumulator> per_cat;
  for (double t : params.thresholds) {
    const auto ranked = rank_detections(preds, gts, t, params);
    for (const auto& [cat, n_gt] : gt_counts) {
      std::vector<char> is_tp;
      for (const RankedDetection& d : ranked) {
        if (d.gt_global >= 0 && d.gt_category != cat) continue;  // ignored
        is_tp.push_back(d.gt_global >= 0 ? 1 : 0);
      }
      const PrPoint pr = pr_from_ranked(is_tp, static_cast<std::size_t>(n_gt));
      ApAccumulator& acc = per_cat[cat];
      acc.ap_sum += pr.ap;
      acc.ar_sum += pr.recall;
      ++acc.count;
    }
  }

  double ap_bal_sum = 0.0, ar_bal_sum = 0.0;
  int present = 0;
  for (const auto& [cat, acc] : per_cat) {
    CategoryAp entry;
    entry.category = cat;
    entry.gt_count = gt_counts[cat];
    entry.ap = acc.ap_sum / acc.count;
    entry.ar = acc.ar_sum / acc.count;
    report.per_category.push_back(entry);
    ap_bal_sum += *entry.ap;
    ar_bal_sum += *entry.ar;
    ++present;
  }
  if (present > 0) {
    report.ap_bal = ap_bal_sum / present;
    report.ar_bal = ar_bal_sum / present;
  }
  return report;
}

void categorize_ground_truths(std::vector<GroundTruthInstance>& gts, const GmmModel& pcm) {
  for (GroundTruthInstance& gt : gts) {
    gt.category = assign_cluster(pcm, normalize_pose(gt.pose, gt.bbox));
  }
}

std::vector<GroundTruthInstance> ground_truths_from_dataset(const Dataset& dataset) {
  std::vector<GroundTruthInstance> gts;
  gts.reserve(dataset.instances.size());
  for (const PersonInstance& inst : dataset.instances) {
    GroundTruthInstance gt;
    gt.image_id = inst.image_id;
    gt.annotation_id = inst.instance_id;
    gt.pose = inst.pose;
    gt.bbox = inst.bbox;
    gt.area = inst.area > 0.0 ? inst.area : inst.bbox.w * inst.bbox.h;
    gts.push_back(std::move(gt));
  }
  return gts;
}

std::vector<PosePrediction> load_coco_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open predictions file: " + path);
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedFile, "not valid JSON: " + path);
  }
  if (!doc.is_array()) {
    throw Error(ErrorCode::SchemaError, "results file must be a JSON array");
  }
  std::vector<PosePrediction> preds;
  preds.reserve(doc.size());
  for (const json& item : doc) {
    if (!item.contains("image_id") || !item.contains("keypoints") ||
        !item.contains("score")) {
      throw Error(ErrorCode::SchemaError, "result entry missing image_id/keypoints/score");
    }
    const json& kps = item.at("keypoints");
    if (!kps.is_array() || kps.size() != 3 * kNumJoints) {
      throw Error(ErrorCode::SchemaError, "result keypoints must be [x,y,score] * 17");
    }
    PosePrediction p;
    p.image_id = item.at("image_id").get<std::int64_t>();
    p.score = item.at("score").get<double>();
    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_x;
    for (int j = 0; j < kNumJoints; ++j) {
      Keypoint& kp = p.pose[j];
      kp.x = kps.at(static_cast<std::size_t>(3 * j)).get<double>();
      kp.y = kps.at(static_cast<std::size_t>(3 * j + 1)).get<double>();
      kp.vis = Visibility::LabeledVisible;
      p.keypoint_scores[static_cast<std::size_t>(j)] =
          kps.at(static_cast<std::size_t>(3 * j + 2)).get<double>();
      min_x = std::min(min_x, kp.x);
      min_y = std::min(min_y, kp.y);
      max_x = std::max(max_x, kp.x);
      max_y = std::max(max_y, kp.y);
    }
    p.extent_area = std::max(0.0, max_x - min_x) * std::max(0.0, max_y - min_y);
    preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace posetrans
