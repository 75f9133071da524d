#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace posetrans::testsupport {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Body frame (units): shoulders at y=0, hips at y=0.30. Segment lengths.
constexpr double kUpperArmLen = 0.16;
constexpr double kLowerArmLen = 0.15;
constexpr double kUpperLegLen = 0.22;
constexpr double kLowerLegLen = 0.22;
constexpr double kBodyScale = 110.0;  // pixels per body unit

// Limb direction angles per archetype, degrees, y-down convention
// (90 = straight down). Order: ua_l, ua_r, la_l, la_r, ul_l, ul_r, ll_l, ll_r.
constexpr double kArchetypeAngles[kSynthClusters][8] = {
    // standing: arms hanging, legs straight
    {100, 80, 100, 80, 95, 85, 95, 85},
    // arms swung outward
    {140, 40, 155, 25, 95, 85, 95, 85},
    // squat: thighs out, shins tucked, arms slightly out
    {115, 65, 120, 60, 120, 60, 70, 110},
};

struct Capsule {
  Vec2 a, b;
  double radius;
  std::uint8_t label;
};

void draw_capsule(Image& img, Image& mask, const Capsule& c,
                  const std::array<std::uint8_t, 3>& color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(c.a.x, c.b.x) - c.radius - 1)));
  const int x1 = std::min(img.width - 1,
                          static_cast<int>(std::ceil(std::max(c.a.x, c.b.x) + c.radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(c.a.y, c.b.y) - c.radius - 1)));
  const int y1 = std::min(img.height - 1,
                          static_cast<int>(std::ceil(std::max(c.a.y, c.b.y) + c.radius + 1)));
  const double abx = c.b.x - c.a.x, aby = c.b.y - c.a.y;
  const double len2 = abx * abx + aby * aby;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x - c.a.x, py = y - c.a.y;
      double t = len2 > 0.0 ? (px * abx + py * aby) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double dx = px - t * abx, dy = py - t * aby;
      if (dx * dx + dy * dy > c.radius * c.radius) continue;
      img.at(x, y, 0) = color[0];
      img.at(x, y, 1) = color[1];
      img.at(x, y, 2) = color[2];
      mask.at(x, y) = c.label;
    }
  }
}

std::array<std::uint8_t, 3> part_color(std::uint8_t label) {
  return {static_cast<std::uint8_t>(40 + 19 * label),
          static_cast<std::uint8_t>(200 - 13 * label),
          static_cast<std::uint8_t>(60 + 11 * label)};
}

}  // namespace

LimbLabelMap synth_label_map() {
  LimbLabelMap map;
  for (int i = 0; i < kNumLimbs; ++i) map[static_cast<std::size_t>(i)] = {i + 1};
  return map;
}

json synth_label_map_json() {
  json j = json::object();
  for (int i = 0; i < kNumLimbs; ++i) j[std::to_string(i)] = json::array({i + 1});
  return j;
}

SynthInstance make_instance(int cluster, std::int64_t image_id, std::int64_t annotation_id,
                            const SynthConfig& config, Rng& rng) {
  SynthInstance out;
  out.true_cluster = cluster;

  const double cx = config.image_size / 2.0 + rng.normal(0.0, 3.0);
  const double cy = 28.0 + rng.normal(0.0, 3.0);
  const double scale = kBodyScale * (1.0 + rng.normal(0.0, 0.04));
  auto place = [&](double ux, double uy) {
    return Vec2{cx + ux * scale, cy + uy * scale};
  };
  auto jitter = [&] { return rng.normal(0.0, config.root_jitter); };

  Pose pose;
  auto set = [&pose](int j, Vec2 p) {
    pose[j] = {p.x, p.y, Visibility::LabeledVisible};
  };
  set(kNose, place(0.00 + jitter(), -0.12 + jitter()));
  set(kLeftEye, place(0.025 + jitter(), -0.135 + jitter()));
  set(kRightEye, place(-0.025 + jitter(), -0.135 + jitter()));
  set(kLeftEar, place(0.05 + jitter(), -0.125 + jitter()));
  set(kRightEar, place(-0.05 + jitter(), -0.125 + jitter()));
  set(kLeftShoulder, place(0.12 + jitter(), 0.0 + jitter()));
  set(kRightShoulder, place(-0.12 + jitter(), 0.0 + jitter()));
  set(kLeftHip, place(0.08 + jitter(), 0.30 + jitter()));
  set(kRightHip, place(-0.08 + jitter(), 0.30 + jitter()));

  const double* angles = kArchetypeAngles[cluster];
  auto limb_end = [&](int src_joint, double angle_deg, double length) {
    const double a = deg_to_rad(angle_deg + rng.normal(0.0, config.angle_jitter_deg));
    return Vec2{pose[src_joint].x + std::cos(a) * length * scale,
                pose[src_joint].y + std::sin(a) * length * scale};
  };
  set(kLeftElbow, limb_end(kLeftShoulder, angles[0], kUpperArmLen));
  set(kRightElbow, limb_end(kRightShoulder, angles[1], kUpperArmLen));
  set(kLeftWrist, limb_end(kLeftElbow, angles[2], kLowerArmLen));
  set(kRightWrist, limb_end(kRightElbow, angles[3], kLowerArmLen));
  set(kLeftKnee, limb_end(kLeftHip, angles[4], kUpperLegLen));
  set(kRightKnee, limb_end(kRightHip, angles[5], kUpperLegLen));
  set(kLeftAnkle, limb_end(kLeftKnee, angles[6], kLowerLegLen));
  set(kRightAnkle, limb_end(kRightKnee, angles[7], kLowerLegLen));

  out.image = Image::create(config.image_size, config.image_size, 3, 220);
  out.mask = Image::create(config.image_size, config.image_size, 1, 0);

  // Torso as a thick spine capsule, then head; limbs last so the limb labels
  // win at the joints.
  const Vec2 neck{(pose[kLeftShoulder].x + pose[kRightShoulder].x) / 2.0,
                  (pose[kLeftShoulder].y + pose[kRightShoulder].y) / 2.0};
  const Vec2 pelvis{(pose[kLeftHip].x + pose[kRightHip].x) / 2.0,
                    (pose[kLeftHip].y + pose[kRightHip].y) / 2.0};
  draw_capsule(out.image, out.mask, {neck, pelvis, 0.115 * scale, 9}, part_color(9));
  const Vec2 head{pose[kNose].x, pose[kNose].y};
  draw_capsule(out.image, out.mask, {head, head, 0.075 * scale, 10}, part_color(10));

  const double limb_radius[kNumLimbs] = {0.034, 0.034, 0.028, 0.028,
                                         0.040, 0.040, 0.033, 0.033};
  for (const Limb& limb : limb_table()) {
    const Keypoint& a = pose[limb.src_joint];
    const Keypoint& b = pose[limb.dst_joint];
    const auto label = static_cast<std::uint8_t>(limb.id + 1);
    draw_capsule(out.image, out.mask,
                 {{a.x, a.y}, {b.x, b.y},
                  limb_radius[static_cast<std::size_t>(limb.id)] * scale, label},
                 part_color(label));
  }

  double min_x = config.image_size, min_y = config.image_size, max_x = 0, max_y = 0;
  for (int j = 0; j < kNumJoints; ++j) {
    min_x = std::min(min_x, pose[j].x);
    max_x = std::max(max_x, pose[j].x);
    min_y = std::min(min_y, pose[j].y);
    max_y = std::max(max_y, pose[j].y);
  }
  const double pad = 10.0;
  Box bbox{std::max(0.0, min_x - pad), std::max(0.0, min_y - pad), 0, 0};
  bbox.w = std::min(static_cast<double>(config.image_size), max_x + pad) - bbox.x;
  bbox.h = std::min(static_cast<double>(config.image_size), max_y + pad) - bbox.y;

  out.instance.image_id = image_id;
  out.instance.instance_id = annotation_id;
  out.instance.pose = pose;
  out.instance.bbox = bbox;
  out.instance.area = bbox.w * bbox.h;
  out.instance.mask_ref = std::to_string(image_id) + "_" + std::to_string(annotation_id) + ".png";
  return out;
}

SynthDataset generate_corpus(const SynthConfig& config, const std::string& root_dir) {
  fs::create_directories(root_dir + "/images");
  fs::create_directories(root_dir + "/masks");

  SynthDataset out;
  out.mapping = synth_label_map();
  out.dataset.category.sigmas = default_oks_sigmas();
  for (int j = 0; j < kNumJoints; ++j) {
    out.dataset.category.keypoint_names.push_back(joint_name(j));
  }

  Rng rng(config.seed);
  // Deterministic cluster counts matching the proportions exactly.
  std::vector<int> clusters;
  clusters.reserve(static_cast<std::size_t>(config.count));
  for (int c = 1; c < kSynthClusters; ++c) {
    const int n = static_cast<int>(std::lround(config.proportions[static_cast<std::size_t>(c)] *
                                               config.count));
    clusters.insert(clusters.end(), static_cast<std::size_t>(n), c);
  }
  while (static_cast<int>(clusters.size()) < config.count) clusters.push_back(0);
  // Deterministic shuffle so clusters are interleaved.
  for (std::size_t i = clusters.size(); i > 1; --i) {
    std::swap(clusters[i - 1], clusters[rng.uniform_int(i)]);
  }

  for (int i = 0; i < config.count; ++i) {
    const std::int64_t image_id = i + 1;
    const std::int64_t ann_id = 1000 + i;
    SynthInstance inst =
        make_instance(clusters[static_cast<std::size_t>(i)], image_id, ann_id, config, rng);
    const std::string image_name = "img_" + std::to_string(image_id) + ".png";
    save_png(inst.image, root_dir + "/images/" + image_name);
    save_png(inst.mask, root_dir + "/masks/" + inst.instance.mask_ref);
    out.dataset.images.push_back(
        {image_id, image_name, config.image_size, config.image_size});
    out.dataset.instances.push_back(inst.instance);
    out.true_clusters.push_back(inst.true_cluster);
  }

  save_coco_annotations(out.dataset, root_dir + "/annotations.json");
  {
    std::ofstream f(root_dir + "/limb_labels.json");
    f << synth_label_map_json().dump(1) << "\n";
  }
  return out;
}

std::string write_pipeline_config(const std::string& root_dir, const json& patch) {
  json cfg = {
      {"dataset",
       {{"annotations", root_dir + "/annotations.json"},
        {"images_dir", root_dir + "/images"},
        {"masks_dir", root_dir + "/masks"},
        {"limb_labels", root_dir + "/limb_labels.json"}}},
      {"augment", json::object()},
      {"pcm", {{"n_components", kSynthClusters}}},
      {"discriminator", json::object()},
      {"output", {{"dir", root_dir + "/out"}}},
      {"seed", 7},
      {"workers", 1},
  };
  cfg.merge_patch(patch);
  const std::string path = root_dir + "/pipeline_config.json";
  std::ofstream f(path);
  f << cfg.dump(1) << "\n";
  return path;
}

}  // namespace posetrans::testsupport
