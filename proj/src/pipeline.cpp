#include "posetrans/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "posetrans/report.hpp"

namespace posetrans {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path)) {
    throw Error(ErrorCode::InvalidArgument, what + " not found: " + path);
  }
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) {
    throw Error(ErrorCode::IoError, "cannot create directory " + path + ": " + ec.message());
  }
}

double get_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
  require_file(path, "config file");
  std::ifstream in(path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedFile, "config is not valid JSON: " + path);
  }

  PipelineConfig cfg;
  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    cfg.annotations_path = d.value("annotations", std::string{});
    cfg.images_dir = d.value("images_dir", std::string{});
    cfg.masks_dir = d.value("masks_dir", std::string{});
    cfg.limb_labels_path = d.value("limb_labels", std::string{});
  }
  if (doc.contains("augment")) {
    const json& a = doc.at("augment");
    cfg.aug.per_limb_prob = get_or(a, "per_limb_prob", cfg.aug.per_limb_prob);
    if (a.contains("scale_range")) {
      cfg.aug.scale_min = a.at("scale_range").at(0).get<double>();
      cfg.aug.scale_max = a.at("scale_range").at(1).get<double>();
    }
    if (a.contains("rotation_range_deg")) {
      cfg.aug.rotation_min = deg_to_rad(a.at("rotation_range_deg").at(0).get<double>());
      cfg.aug.rotation_max = deg_to_rad(a.at("rotation_range_deg").at(1).get<double>());
    }
    cfg.aug.scale_std = get_or(a, "scale_std", (cfg.aug.scale_max - cfg.aug.scale_min) / 4.0);
    cfg.aug.rotation_std = a.contains("rotation_std_deg")
                               ? deg_to_rad(a.at("rotation_std_deg").get<double>())
                               : (cfg.aug.rotation_max - cfg.aug.rotation_min) / 4.0;
    cfg.aug.pool_size = static_cast<int>(get_or(a, "pool_size", cfg.aug.pool_size));
    cfg.aug.plausibility_threshold =
        get_or(a, "plausibility_threshold", cfg.aug.plausibility_threshold);
    cfg.aug.max_pool_attempts =
        static_cast<int>(get_or(a, "max_pool_attempts", cfg.aug.max_pool_attempts));
    if (a.contains("selection")) cfg.selection = a.at("selection").get<std::string>();
    if (a.contains("refit")) cfg.refit_after_augment = a.at("refit").get<bool>();
  }
  if (doc.contains("pcm")) {
    const json& p = doc.at("pcm");
    cfg.pcm.n_components = static_cast<int>(get_or(p, "n_components", cfg.pcm.n_components));
    cfg.pcm.em.reg_epsilon = get_or(p, "reg_epsilon", cfg.pcm.em.reg_epsilon);
    cfg.pcm.em.max_iters = static_cast<int>(get_or(p, "max_iters", cfg.pcm.em.max_iters));
    cfg.pcm.em.tol = get_or(p, "tol", cfg.pcm.em.tol);
    cfg.pcm.min_labeled_keypoints =
        static_cast<int>(get_or(p, "min_labeled_keypoints", cfg.pcm.min_labeled_keypoints));
  }
  if (doc.contains("discriminator")) {
    const json& d = doc.at("discriminator");
    cfg.disc.epochs = static_cast<int>(get_or(d, "epochs", cfg.disc.epochs));
    cfg.disc.batch_size = static_cast<int>(get_or(d, "batch_size", cfg.disc.batch_size));
    cfg.disc.learning_rate = get_or(d, "learning_rate", cfg.disc.learning_rate);
    cfg.disc.momentum = get_or(d, "momentum", cfg.disc.momentum);
    cfg.disc.holdout_fraction = get_or(d, "holdout_fraction", cfg.disc.holdout_fraction);
    if (d.contains("fake_scale_range")) {
      cfg.disc_fakes.scale_min = d.at("fake_scale_range").at(0).get<double>();
      cfg.disc_fakes.scale_max = d.at("fake_scale_range").at(1).get<double>();
    }
    if (d.contains("fake_rotation_range_deg")) {
      cfg.disc_fakes.rotation_min =
          deg_to_rad(d.at("fake_rotation_range_deg").at(0).get<double>());
      cfg.disc_fakes.rotation_max =
          deg_to_rad(d.at("fake_rotation_range_deg").at(1).get<double>());
    }
  }
  if (doc.contains("inpaint")) {
    const json& i = doc.at("inpaint");
    cfg.inpaint.max_iters = static_cast<int>(get_or(i, "max_iters", cfg.inpaint.max_iters));
    cfg.inpaint.tol = get_or(i, "tol", cfg.inpaint.tol);
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    cfg.out_dir = o.value("dir", cfg.out_dir);
    cfg.pcm_model_file = o.value("pcm_model", cfg.pcm_model_file);
    cfg.discriminator_file = o.value("discriminator", cfg.discriminator_file);
  }
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.workers = doc.value("workers", cfg.workers);

  cfg.aug.n_components = cfg.pcm.n_components;
  cfg.aug.rng_seed = cfg.seed;
  cfg.pcm.em.seed = cfg.seed;
  cfg.disc.seed = cfg.seed;
  cfg.disc.threshold = cfg.aug.plausibility_threshold;
  cfg.aug.validate();
  if (cfg.selection != "pcm" && cfg.selection != "random") {
    throw Error(ErrorCode::InvalidArgument, "selection must be \"pcm\" or \"random\"");
  }
  if (cfg.workers < 1) {
    throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  }
  return cfg;
}

namespace {

/// Poses used for PCM fitting: normalized instances with enough labeled
/// keypoints to carry cluster structure.
std::vector<NormalizedPose> fitting_poses(const Dataset& ds, const PcmSettings& pcm,
                                          int* excluded = nullptr) {
  std::vector<NormalizedPose> poses;
  int skipped = 0;
  for (const PersonInstance& inst : ds.instances) {
    if (inst.pose.labeled_count() < pcm.min_labeled_keypoints) {
      ++skipped;
      continue;
    }
    poses.push_back(crop_and_normalize(inst));
  }
  if (excluded) *excluded = skipped;
  return poses;
}

}  // namespace

AugConfig widened_config(const AugConfig& base, const FakeRanges& ranges) {
  AugConfig cfg = base;
  cfg.scale_min = ranges.scale_min;
  cfg.scale_max = ranges.scale_max;
  cfg.rotation_min = ranges.rotation_min;
  cfg.rotation_max = ranges.rotation_max;
  cfg.scale_std = (ranges.scale_max - ranges.scale_min) / 4.0;
  cfg.rotation_std = (ranges.rotation_max - ranges.rotation_min) / 4.0;
  return cfg;
}

NormalizedPose make_fake_pose(const PersonInstance& instance, const AugConfig& widened,
                              Rng& rng) {
  // Pose-only gating: endpoint visibility, no parsing mask involved.
  std::array<bool, kNumLimbs> transformable{};
  bool any = false;
  for (const Limb& limb : limb_table()) {
    const bool ok = instance.pose[limb.src_joint].visible() &&
                    instance.pose[limb.dst_joint].visible();
    transformable[static_cast<std::size_t>(limb.id)] = ok;
    any = any || ok;
  }
  if (!any) return crop_and_normalize(instance);
  // Resample until at least one limb moves; an untouched pose is a real pose,
  // not a fake.
  LimbPlan plan;
  for (int tries = 0; tries < 20; ++tries) {
    plan = sample_limb_plan(instance.pose, transformable, widened, rng);
    if (!plan.empty()) break;
  }
  return normalize_pose(transform_pose(instance.pose, plan), instance.bbox);
}

FitPcmSummary cmd_fit_pcm(const PipelineConfig& config) {
  require_file(config.annotations_path, "annotations file");
  ensure_dir(config.out_dir);

  const Dataset ds = load_coco_annotations(config.annotations_path);
  FitPcmSummary summary;
  std::vector<NormalizedPose> poses = fitting_poses(ds, config.pcm, &summary.poses_excluded);
  summary.poses_used = static_cast<int>(poses.size());

  GmmConfig em = config.pcm.em;
  em.seed = config.seed;
  GmmModel model = fit_gmm_poses(poses, config.pcm.n_components, em);
  save_gmm(model, config.pcm_model_path());
  summary.model_path = config.pcm_model_path();
  write_cluster_report(model, poses, config.out_dir);
  return summary;
}

TrainDiscSummary cmd_train_discriminator(const PipelineConfig& config) {
  require_file(config.annotations_path, "annotations file");
  ensure_dir(config.out_dir);

  const Dataset ds = load_coco_annotations(config.annotations_path);
  std::vector<NormalizedPose> real;
  std::vector<const PersonInstance*> sources;
  for (const PersonInstance& inst : ds.instances) {
    if (inst.pose.labeled_count() < config.pcm.min_labeled_keypoints) continue;
    real.push_back(crop_and_normalize(inst));
    sources.push_back(&inst);
  }
  if (real.size() < 100) {
    throw Error(ErrorCode::InsufficientData,
                "need at least 100 usable poses, got " + std::to_string(real.size()));
  }

  const AugConfig widened = widened_config(config.aug, config.disc_fakes);
  Rng fake_rng(Rng::derive(config.seed, 0x66616B65ULL));
  std::size_t cursor = 0;
  auto fake_gen = [&]() {
    const PersonInstance* inst = sources[cursor % sources.size()];
    ++cursor;
    return make_fake_pose(*inst, widened, fake_rng);
  };

  DiscTrainConfig train_cfg = config.disc;
  train_cfg.seed = config.seed;
  train_cfg.threshold = config.aug.plausibility_threshold;
  DiscTrainResult result = train_discriminator(real, fake_gen, train_cfg);
  save_discriminator(result.model, config.discriminator_path());

  {
    std::ofstream csv(config.out_dir + "/discriminator_history.csv");
    if (!csv) {
      throw Error(ErrorCode::IoError, "cannot write discriminator_history.csv");
    }
    csv << "epoch,train_loss,holdout_loss\n" << std::setprecision(10);
    for (const TrainEpochStats& e : result.history) {
      csv << e.epoch << "," << e.train_loss << "," << e.holdout_loss << "\n";
    }
  }

  TrainDiscSummary summary;
  summary.real_poses = static_cast<int>(real.size());
  summary.best_holdout_loss = result.model.best_holdout_loss;
  summary.checkpoint_path = config.discriminator_path();
  return summary;
}

namespace {

struct InstanceResult {
  PoolRecord record;
  // Present only when the instance was augmented.
  bool has_sample = false;
  Pose pose;
  LimbPlan plan;
  NormalizedPose normalized;
  double plausibility = 0.0;
  double rarity = 0.0;
  Image image;
  Box bbox;
};

/// Tight box around the transformed labeled keypoints and the warped extents
/// of every moved limb region.
Box recompute_bbox(const Pose& pose, const LimbPlan& plan, const ParsingMask& mask,
                   const LimbLabelMap& mapping, const Box& fallback) {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  bool have = false;
  for (int j = 0; j < kNumJoints; ++j) {
    if (!pose[j].labeled()) continue;
    min_x = std::min(min_x, pose[j].x);
    max_x = std::max(max_x, pose[j].x);
    min_y = std::min(min_y, pose[j].y);
    max_y = std::max(max_y, pose[j].y);
    have = true;
  }
  for (const Limb& limb : limb_table()) {
    const auto idx = static_cast<std::size_t>(limb.id);
    if (!plan.affected[idx]) continue;
    const Image region = limb_region(mask, limb.id, mapping);
    int rmin_x = region.width, rmin_y = region.height, rmax_x = -1, rmax_y = -1;
    for (int y = 0; y < region.height; ++y) {
      for (int x = 0; x < region.width; ++x) {
        if (region.at(x, y) == 0) continue;
        rmin_x = std::min(rmin_x, x);
        rmin_y = std::min(rmin_y, y);
        rmax_x = std::max(rmax_x, x);
        rmax_y = std::max(rmax_y, y);
      }
    }
    if (rmax_x < 0) continue;
    for (int cy = 0; cy <= 1; ++cy) {
      for (int cx = 0; cx <= 1; ++cx) {
        const Vec2 p = plan.effective[idx].apply(
            {static_cast<double>(cx ? rmax_x + 1 : rmin_x),
             static_cast<double>(cy ? rmax_y + 1 : rmin_y)});
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
        have = true;
      }
    }
  }
  if (!have || !(max_x > min_x) || !(max_y > min_y)) return fallback;
  return Box{min_x, min_y, max_x - min_x, max_y - min_y};
}

InstanceResult augment_instance(const PersonInstance& inst, const PipelineConfig& config,
                                const Dataset& ds, const LimbLabelMap& mapping,
                                const GmmModel& pcm, const DiscriminatorModel& disc) {
  InstanceResult result;
  result.record.annotation_id = inst.instance_id;

  const DatasetImage* img_entry = ds.find_image(inst.image_id);
  if (!img_entry || img_entry->file_name.empty()) {
    result.record.reason = "image entry missing";
    return result;
  }
  const std::string image_path = config.images_dir + "/" + img_entry->file_name;
  const std::string mask_name =
      inst.mask_ref.empty() ? mask_file_name(inst) : inst.mask_ref;
  const std::string mask_path = config.masks_dir + "/" + mask_name;
  if (!fs::exists(image_path)) {
    result.record.reason = "image file missing: " + img_entry->file_name;
    return result;
  }
  if (!fs::exists(mask_path)) {
    result.record.reason = "parsing mask missing: " + mask_name;
    return result;
  }

  Image image;
  ParsingMask mask;
  try {
    image = load_image(image_path);
    mask = load_parsing_mask(mask_path, image.width, image.height);
  } catch (const Error& e) {
    result.record.reason = e.what();
    return result;
  }

  const auto transformable = transformable_limbs(inst.pose, mask, mapping);
  if (std::none_of(transformable.begin(), transformable.end(), [](bool b) { return b; })) {
    result.record.reason = "no transformable limb";
    return result;
  }

  AugConfig aug = config.aug;
  aug.rng_seed = Rng::derive(config.seed, static_cast<std::uint64_t>(inst.instance_id));
  Rng rng(aug.rng_seed);

  const int target = config.selection == "random" ? 1 : aug.pool_size;
  struct Candidate {
    LimbPlan plan;
    Pose pose;
    NormalizedPose normalized;
    double score = 0.0;
  };
  std::vector<Candidate> pool;
  while (result.record.attempts < aug.max_pool_attempts &&
         static_cast<int>(pool.size()) < target) {
    ++result.record.attempts;
    Candidate cand;
    cand.plan = sample_limb_plan(inst.pose, transformable, aug, rng);
    cand.pose = transform_pose(inst.pose, cand.plan);
    cand.normalized = normalize_pose(cand.pose, inst.bbox);
    cand.score = forward(disc, extract_pose_features(cand.normalized));
    result.record.scores.push_back(cand.score);
    if (cand.score >= aug.plausibility_threshold) {
      pool.push_back(std::move(cand));
    }
  }
  result.record.accepted = static_cast<int>(pool.size());
  result.record.rejected = result.record.attempts - result.record.accepted;
  if (static_cast<int>(pool.size()) < target) {
    result.record.reason = "pool unfilled after " +
                           std::to_string(result.record.attempts) + " attempts";
    return result;
  }

  for (const Candidate& cand : pool) {
    result.record.rarities.push_back(responsibilities(pcm, cand.normalized).rarity);
  }
  std::size_t chosen = 0;
  if (config.selection == "pcm") {
    for (std::size_t t = 1; t < pool.size(); ++t) {
      if (result.record.rarities[t] < result.record.rarities[chosen]) chosen = t;
    }
  }
  result.record.chosen = static_cast<int>(chosen);
  result.record.skipped = false;

  const Candidate& sel = pool[chosen];
  result.has_sample = true;
  result.pose = sel.pose;
  result.plan = sel.plan;
  result.normalized = sel.normalized;
  result.plausibility = sel.score;
  result.rarity = result.record.rarities[chosen];
  // The image is materialized once, for the selected plan only; the pool
  // stage is pose-only because the discriminator scores pose geometry.
  result.image = apply_plan_to_image(image, mask, mapping, sel.plan, config.inpaint);
  result.bbox = recompute_bbox(sel.pose, sel.plan, mask, mapping, inst.bbox);
  return result;
}

json plan_to_json(const LimbPlan& plan) {
  json arr = json::array();
  for (int i = 0; i < kNumLimbs; ++i) {
    const auto& t = plan.transforms[static_cast<std::size_t>(i)];
    if (!t.has_value()) continue;
    arr.push_back({{"limb", i}, {"scale", t->scale}, {"rotation_rad", t->rotation}});
  }
  return arr;
}

json record_to_json(const PoolRecord& r) {
  json j;
  j["annotation_id"] = r.annotation_id;
  j["attempts"] = r.attempts;
  j["accepted"] = r.accepted;
  j["rejected"] = r.rejected;
  j["scores"] = r.scores;
  j["rarities"] = r.rarities;
  j["chosen"] = r.chosen;
  j["skipped"] = r.skipped;
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j;
}

}  // namespace

AugmentSummary cmd_augment(const PipelineConfig& config) {
  require_file(config.annotations_path, "annotations file");
  require_file(config.limb_labels_path, "limb label map");
  require_file(config.pcm_model_path(), "PCM model (run fit-pcm first)");
  require_file(config.discriminator_path(), "discriminator checkpoint (run train-disc first)");
  if (config.images_dir.empty() || !fs::is_directory(config.images_dir)) {
    throw Error(ErrorCode::InvalidArgument, "images_dir not found: " + config.images_dir);
  }
  if (config.masks_dir.empty() || !fs::is_directory(config.masks_dir)) {
    throw Error(ErrorCode::InvalidArgument, "masks_dir not found: " + config.masks_dir);
  }
  ensure_dir(config.out_dir);
  ensure_dir(config.out_dir + "/images");

  const Dataset ds = load_coco_annotations(config.annotations_path);
  const LimbLabelMap mapping = load_limb_label_map(config.limb_labels_path);
  const GmmModel pcm = load_gmm(config.pcm_model_path());
  const DiscriminatorModel disc = load_discriminator(config.discriminator_path());

  // Worker pool over instances; each instance derives its own rng stream
  // from (seed, annotation id), so results do not depend on scheduling.
  std::vector<InstanceResult> results(ds.instances.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, config.workers);
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ds.instances.size()) return;
      results[i] = augment_instance(ds.instances[i], config, ds, mapping, pcm, disc);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }

  // Single writer, annotation-id order (instances are already sorted).
  std::int64_t max_image_id = 0, max_ann_id = 0;
  for (const DatasetImage& img : ds.images) max_image_id = std::max(max_image_id, img.id);
  for (const PersonInstance& inst : ds.instances) {
    max_ann_id = std::max(max_ann_id, inst.instance_id);
  }

  Dataset out_ds;
  out_ds.category = ds.category;
  std::vector<std::string> provenance;
  std::vector<NormalizedPose> selected_poses;

  AugmentSummary summary;
  std::ofstream ledger(config.out_dir + "/pool_records.jsonl");
  if (!ledger) {
    throw Error(ErrorCode::IoError, "cannot write pool_records.jsonl");
  }
  std::int64_t seq = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    InstanceResult& r = results[i];
    ledger << record_to_json(r.record).dump() << "\n";
    if (!r.has_sample) {
      ++summary.skipped;
      continue;
    }
    ++seq;
    ++summary.augmented;
    const std::int64_t new_image_id = max_image_id + seq;
    const std::int64_t new_ann_id = max_ann_id + seq;
    const std::string file_name = "aug_" + std::to_string(new_image_id) + ".png";
    save_png(r.image, config.out_dir + "/images/" + file_name);

    out_ds.images.push_back({new_image_id, file_name, r.image.width, r.image.height});
    PersonInstance inst;
    inst.image_id = new_image_id;
    inst.instance_id = new_ann_id;
    inst.pose = r.pose;
    inst.bbox = r.bbox;
    inst.area = r.bbox.w * r.bbox.h;
    out_ds.instances.push_back(std::move(inst));

    json prov;
    prov["source_annotation_id"] = r.record.annotation_id;
    prov["seed"] = config.seed;
    prov["plausibility"] = r.plausibility;
    prov["rarity"] = r.rarity;
    prov["selection"] = config.selection;
    prov["plan"] = plan_to_json(r.plan);
    provenance.push_back(prov.dump());
    selected_poses.push_back(r.normalized);
  }
  summary.eligible = summary.augmented + summary.skipped;

  const std::string ann_path = config.out_dir + "/augmented_annotations.json";
  save_coco_annotations(out_ds, ann_path, provenance);
  summary.annotations_path = ann_path;
  summary.ledger_path = config.out_dir + "/pool_records.jsonl";

  if (config.refit_after_augment && !selected_poses.empty()) {
    std::vector<NormalizedPose> combined = fitting_poses(ds, config.pcm);
    combined.insert(combined.end(), selected_poses.begin(), selected_poses.end());
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(combined.size());
    for (const NormalizedPose& p : combined) samples.push_back(normalized_pose_vector(p));
    GmmConfig em = config.pcm.em;
    em.seed = config.seed;
    GmmModel refitted = refit(pcm, samples, em);
    const std::string refit_path = config.out_dir + "/pcm_model_refit.json";
    save_gmm(refitted, refit_path);
    summary.refit_model_path = refit_path;
  }
  return summary;
}

EvalReport cmd_evaluate(const PipelineConfig& config, const std::string& predictions_path) {
  require_file(config.annotations_path, "annotations file");
  require_file(predictions_path, "predictions file");
  require_file(config.pcm_model_path(), "PCM model (run fit-pcm first)");
  ensure_dir(config.out_dir);

  const Dataset ds = load_coco_annotations(config.annotations_path);
  const GmmModel pcm = load_gmm(config.pcm_model_path());
  std::vector<PosePrediction> preds = load_coco_results(predictions_path);

  // Predictions for unknown images are warned about and ignored.
  std::size_t ignored = 0;
  std::vector<PosePrediction> known;
  known.reserve(preds.size());
  for (PosePrediction& p : preds) {
    if (ds.find_image(p.image_id)) {
      known.push_back(std::move(p));
    } else {
      ++ignored;
    }
  }
  if (ignored > 0) {
    std::cerr << "warning: ignoring " << ignored
              << " predictions for unknown image ids\n";
  }

  std::vector<GroundTruthInstance> gts = ground_truths_from_dataset(ds);
  categorize_ground_truths(gts, pcm);
  EvalReport report = balanced_ap(known, std::move(gts), EvalParams::defaults());
  report.ignored_predictions = ignored;

  {
    json j;
    auto opt = [](const std::optional<double>& v) {
      return v ? json(*v) : json(nullptr);
    };
    j["ap"] = opt(report.overall.ap);
    j["ap50"] = opt(report.overall.ap50);
    j["ap75"] = opt(report.overall.ap75);
    j["ap_medium"] = opt(report.overall.ap_medium);
    j["ap_large"] = opt(report.overall.ap_large);
    j["ar"] = opt(report.overall.ar);
    j["ap_bal"] = opt(report.ap_bal);
    j["ar_bal"] = opt(report.ar_bal);
    j["num_predictions"] = report.num_predictions;
    j["num_ground_truths"] = report.num_ground_truths;
    j["ignored_predictions"] = report.ignored_predictions;
    j["per_category"] = json::array();
    for (const CategoryAp& c : report.per_category) {
      j["per_category"].push_back({{"category", c.category},
                                   {"gt_count", c.gt_count},
                                   {"ap", opt(c.ap)},
                                   {"ar", opt(c.ar)}});
    }
    std::ofstream out(config.out_dir + "/eval_report.json");
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot write eval_report.json");
    }
    out << j.dump(1) << "\n";
  }
  {
    std::ofstream out(config.out_dir + "/eval_report.txt");
    out << format_eval_report(report);
  }
  return report;
}

std::string format_eval_report(const EvalReport& report) {
  std::ostringstream out;
  auto line = [&out](const char* name, const std::optional<double>& v) {
    out << "  " << std::left << std::setw(12) << name;
    if (v) {
      out << std::fixed << std::setprecision(4) << *v;
    } else {
      out << "-";
    }
    out << "\n";
  };
  out << "Keypoint evaluation (" << report.num_predictions << " predictions, "
      << report.num_ground_truths << " ground truths";
  if (report.ignored_predictions > 0) {
    out << ", " << report.ignored_predictions << " ignored";
  }
  out << ")\n";
  line("AP", report.overall.ap);
  line("AP50", report.overall.ap50);
  line("AP75", report.overall.ap75);
  line("AP_medium", report.overall.ap_medium);
  line("AP_large", report.overall.ap_large);
  line("AR", report.overall.ar);
  line("AP_BAL", report.ap_bal);
  line("AR_BAL", report.ar_bal);
  out << "  per-category (cluster, gt_count, AP, AR):\n";
  for (const CategoryAp& c : report.per_category) {
    out << "    " << std::setw(3) << c.category << "  " << std::setw(6) << c.gt_count;
    out << "  " << std::fixed << std::setprecision(4) << (c.ap ? *c.ap : -1.0);
    out << "  " << (c.ar ? *c.ar : -1.0) << "\n";
  }
  return out.str();
}

BaselineSummary cmd_baselines(const PipelineConfig& config, const std::string& mode) {
  if (mode != "oversample" && mode != "reweight") {
    throw Error(ErrorCode::InvalidArgument, "baseline mode must be oversample or reweight");
  }
  require_file(config.annotations_path, "annotations file");
  require_file(config.pcm_model_path(), "PCM model (run fit-pcm first)");
  ensure_dir(config.out_dir);

  const Dataset ds = load_coco_annotations(config.annotations_path);
  const GmmModel pcm = load_gmm(config.pcm_model_path());

  std::vector<int> labels;
  labels.reserve(ds.instances.size());
  std::map<int, int> counts;
  for (const PersonInstance& inst : ds.instances) {
    const int label = assign_cluster(pcm, crop_and_normalize(inst));
    labels.push_back(label);
    ++counts[label];
  }
  int max_count = 0;
  for (const auto& [label, count] : counts) max_count = std::max(max_count, count);
  for (int k = 0; k < pcm.n_components; ++k) {
    if (!counts.count(k)) {
      std::cerr << "warning: cluster " << k << " has no instances; skipped\n";
    }
  }

  BaselineSummary summary;
  summary.mode = mode;
  if (mode == "oversample") {
    Dataset out_ds = ds;
    std::vector<std::string> provenance(out_ds.instances.size());
    std::int64_t max_ann_id = 0;
    for (const PersonInstance& inst : ds.instances) {
      max_ann_id = std::max(max_ann_id, inst.instance_id);
    }
    std::int64_t seq = 0;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
      const int count = counts[labels[i]];
      const int factor = std::min(
          10, static_cast<int>(std::lround(static_cast<double>(max_count) / count)));
      for (int copy = 1; copy < factor; ++copy) {
        ++seq;
        ++summary.duplicates;
        PersonInstance dup = ds.instances[i];
        dup.instance_id = max_ann_id + seq;
        out_ds.instances.push_back(dup);
        provenance.push_back(json({{"oversampled_from", ds.instances[i].instance_id},
                                   {"cluster", labels[i]}})
                                 .dump());
      }
    }
    summary.output_path = config.out_dir + "/oversampled_annotations.json";
    save_coco_annotations(out_ds, summary.output_path, provenance);
  } else {
    // Raw weight max_count/count_c, then normalized to mean 1 over instances.
    std::vector<double> weights(ds.instances.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
      weights[i] = static_cast<double>(max_count) / counts[labels[i]];
      sum += weights[i];
    }
    const double mean = sum / static_cast<double>(weights.size());
    json j;
    j["format"] = "posetrans-weights";
    j["version"] = 1;
    json w = json::object();
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
      w[std::to_string(ds.instances[i].instance_id)] = weights[i] / mean;
    }
    j["weights"] = std::move(w);
    summary.output_path = config.out_dir + "/instance_weights.json";
    std::ofstream out(summary.output_path);
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot write instance_weights.json");
    }
    out << j.dump(1) << "\n";
  }
  return summary;
}

void cmd_cluster_report(const PipelineConfig& config) {
  require_file(config.annotations_path, "annotations file");
  require_file(config.pcm_model_path(), "PCM model (run fit-pcm first)");
  ensure_dir(config.out_dir);
  const Dataset ds = load_coco_annotations(config.annotations_path);
  const GmmModel pcm = load_gmm(config.pcm_model_path());
  write_cluster_report(pcm, fitting_poses(ds, config.pcm), config.out_dir);
}

}  // namespace posetrans
