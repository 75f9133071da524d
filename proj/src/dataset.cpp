#include "posetrans/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace posetrans {

using nlohmann::json;

const std::vector<double>& default_oks_sigmas() {
  static const std::vector<double> kSigmas = {
      0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
      0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
  return kSigmas;
}

const DatasetImage* Dataset::find_image(std::int64_t image_id) const {
  for (const DatasetImage& img : images) {
    if (img.id == image_id) return &img;
  }
  return nullptr;
}

namespace {

json parse_json_file(const std::string& path, ErrorCode missing_code) {
  std::ifstream in(path);
  if (!in) {
    throw Error(missing_code, "cannot open file: " + path);
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedFile, "not valid JSON: " + path);
  }
  return doc;
}

}  // namespace

Dataset load_coco_annotations(const std::string& path) {
  const json doc = parse_json_file(path, ErrorCode::IoError);
  if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations")) {
    throw Error(ErrorCode::SchemaError, "missing images/annotations arrays in " + path);
  }

  Dataset ds;
  for (const json& img : doc.at("images")) {
    if (!img.contains("id")) {
      throw Error(ErrorCode::SchemaError, "image entry without id");
    }
    DatasetImage di;
    di.id = img.at("id").get<std::int64_t>();
    di.file_name = img.value("file_name", std::string{});
    di.width = img.value("width", 0);
    di.height = img.value("height", 0);
    ds.images.push_back(std::move(di));
  }

  ds.category.sigmas = default_oks_sigmas();
  if (doc.contains("categories") && doc.at("categories").is_array() &&
      !doc.at("categories").empty()) {
    const json& cat = doc.at("categories").at(0);
    if (cat.contains("keypoints")) {
      ds.category.keypoint_names = cat.at("keypoints").get<std::vector<std::string>>();
    }
    if (cat.contains("skeleton")) {
      for (const json& edge : cat.at("skeleton")) {
        ds.category.skeleton.emplace_back(edge.at(0).get<int>(), edge.at(1).get<int>());
      }
    }
    if (cat.contains("sigmas")) {
      ds.category.sigmas = cat.at("sigmas").get<std::vector<double>>();
      if (ds.category.sigmas.size() != kNumJoints) {
        throw Error(ErrorCode::SchemaError, "sigma list must have 17 entries");
      }
    }
  }

  for (const json& ann : doc.at("annotations")) {
    const std::string ann_id_str =
        ann.contains("id") ? ann.at("id").dump() : std::string("<missing id>");
    if (!ann.contains("id") || !ann.contains("image_id") ||
        !ann.contains("keypoints") || !ann.contains("bbox")) {
      throw Error(ErrorCode::SchemaError,
                  "annotation " + ann_id_str + " missing keypoints/bbox/id fields");
    }
    const json& kps = ann.at("keypoints");
    if (!kps.is_array() || kps.size() != 3 * kNumJoints) {
      throw Error(ErrorCode::SchemaError,
                  "annotation " + ann_id_str + " keypoints must be a flat array of " +
                      std::to_string(3 * kNumJoints) + " numbers");
    }
    const json& bbox = ann.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4) {
      throw Error(ErrorCode::SchemaError, "annotation " + ann_id_str + " bbox must be [x,y,w,h]");
    }

    PersonInstance inst;
    inst.instance_id = ann.at("id").get<std::int64_t>();
    inst.image_id = ann.at("image_id").get<std::int64_t>();
    inst.bbox = Box{bbox.at(0).get<double>(), bbox.at(1).get<double>(),
                    bbox.at(2).get<double>(), bbox.at(3).get<double>()};
    for (int j = 0; j < kNumJoints; ++j) {
      Keypoint& kp = inst.pose[j];
      kp.x = kps.at(static_cast<std::size_t>(3 * j)).get<double>();
      kp.y = kps.at(static_cast<std::size_t>(3 * j + 1)).get<double>();
      const int v = kps.at(static_cast<std::size_t>(3 * j + 2)).get<int>();
      if (v < 0 || v > 2) {
        throw Error(ErrorCode::SchemaError,
                    "annotation " + ann_id_str + " has visibility flag outside {0,1,2}");
      }
      kp.vis = static_cast<Visibility>(v);
    }
    inst.area = ann.value("area", inst.bbox.w * inst.bbox.h);
    if (ann.contains("mask_ref")) {
      inst.mask_ref = ann.at("mask_ref").get<std::string>();
    }
    if (inst.pose.labeled_count() == 0) {
      ++ds.dropped_empty;
      continue;
    }
    ds.instances.push_back(std::move(inst));
  }

  std::sort(ds.instances.begin(), ds.instances.end(),
            [](const PersonInstance& a, const PersonInstance& b) {
              return a.instance_id < b.instance_id;
            });
  return ds;
}

void save_coco_annotations(const Dataset& dataset, const std::string& path,
                           const std::vector<std::string>& provenance) {
  json doc;
  doc["images"] = json::array();
  for (const DatasetImage& img : dataset.images) {
    doc["images"].push_back({{"id", img.id},
                             {"file_name", img.file_name},
                             {"width", img.width},
                             {"height", img.height}});
  }
  json cat;
  cat["id"] = 1;
  cat["name"] = "person";
  cat["supercategory"] = "person";
  if (!dataset.category.keypoint_names.empty()) {
    cat["keypoints"] = dataset.category.keypoint_names;
  } else {
    json names = json::array();
    for (int j = 0; j < kNumJoints; ++j) names.push_back(joint_name(j));
    cat["keypoints"] = names;
  }
  json skeleton = json::array();
  for (const auto& [a, b] : dataset.category.skeleton) skeleton.push_back({a, b});
  cat["skeleton"] = skeleton;
  cat["sigmas"] = dataset.category.sigmas;
  doc["categories"] = json::array({cat});

  doc["annotations"] = json::array();
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const PersonInstance& inst = dataset.instances[i];
    json ann;
    ann["id"] = inst.instance_id;
    ann["image_id"] = inst.image_id;
    ann["category_id"] = 1;
    ann["iscrowd"] = 0;
    ann["bbox"] = {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h};
    ann["area"] = inst.area;
    json kps = json::array();
    int labeled = 0;
    for (int j = 0; j < kNumJoints; ++j) {
      const Keypoint& kp = inst.pose[j];
      kps.push_back(kp.x);
      kps.push_back(kp.y);
      kps.push_back(static_cast<int>(kp.vis));
      if (kp.labeled()) ++labeled;
    }
    ann["keypoints"] = std::move(kps);
    ann["num_keypoints"] = labeled;
    if (!inst.mask_ref.empty()) ann["mask_ref"] = inst.mask_ref;
    if (i < provenance.size() && !provenance[i].empty()) {
      ann["posetrans"] = json::parse(provenance[i]);
    }
    doc["annotations"].push_back(std::move(ann));
  }

  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write file: " + path);
  }
  out << doc.dump(1) << "\n";
}

ParsingMask ParsingMask::from_image(Image image) {
  if (image.channels != 1) {
    throw Error(ErrorCode::MalformedFile, "parsing mask must be single-channel");
  }
  for (std::uint8_t v : image.data) {
    if (v > kMaxLabel) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "parsing label " + std::to_string(v) + " exceeds " +
                      std::to_string(kMaxLabel));
    }
  }
  ParsingMask mask;
  mask.image_ = std::move(image);
  return mask;
}

bool ParsingMask::has_any_label(const std::vector<int>& labels) const {
  for (std::uint8_t v : image_.data) {
    if (v == 0) continue;
    if (std::find(labels.begin(), labels.end(), static_cast<int>(v)) != labels.end()) {
      return true;
    }
  }
  return false;
}

ParsingMask load_parsing_mask(const std::string& path, int expected_w, int expected_h) {
  Image img = load_image_gray(path);
  if ((expected_w > 0 && img.width != expected_w) ||
      (expected_h > 0 && img.height != expected_h)) {
    throw Error(ErrorCode::DimensionMismatch,
                "mask " + path + " is " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + ", expected " +
                    std::to_string(expected_w) + "x" + std::to_string(expected_h));
  }
  return ParsingMask::from_image(std::move(img));
}

Image limb_region(const ParsingMask& mask, int limb_id, const LimbLabelMap& mapping) {
  if (limb_id < 0 || limb_id >= kNumLimbs) {
    throw Error(ErrorCode::InvalidArgument, "limb id out of range");
  }
  const std::vector<int>& labels = mapping[static_cast<std::size_t>(limb_id)];
  Image region = Image::create(mask.width(), mask.height(), 1, 0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const int v = mask.label(x, y);
      if (v != 0 && std::find(labels.begin(), labels.end(), v) != labels.end()) {
        region.at(x, y) = 1;
      }
    }
  }
  return region;
}

NormalizedPose crop_and_normalize(const PersonInstance& instance) {
  return normalize_pose(instance.pose, instance.bbox);
}

LimbLabelMap load_limb_label_map(const std::string& path) {
  const json doc = parse_json_file(path, ErrorCode::IoError);
  if (!doc.is_object()) {
    throw Error(ErrorCode::SchemaError, "limb label map must be a JSON object");
  }
  LimbLabelMap map;
  for (int i = 0; i < kNumLimbs; ++i) {
    const std::string key = std::to_string(i);
    if (!doc.contains(key) || !doc.at(key).is_array() || doc.at(key).empty()) {
      throw Error(ErrorCode::SchemaError,
                  "limb label map must assign a non-empty label list to limb " + key);
    }
    for (const json& v : doc.at(key)) {
      const int label = v.get<int>();
      if (label < 1 || label > ParsingMask::kMaxLabel) {
        throw Error(ErrorCode::LabelOutOfRange,
                    "limb " + key + " references label " + std::to_string(label));
      }
      map[static_cast<std::size_t>(i)].push_back(label);
    }
  }
  return map;
}

std::string mask_file_name(const PersonInstance& instance) {
  return std::to_string(instance.image_id) + "_" +
         std::to_string(instance.instance_id) + ".png";
}

}  // namespace posetrans
