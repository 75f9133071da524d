#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "posetrans/image.hpp"
#include "posetrans/types.hpp"

namespace posetrans {

struct DatasetImage {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct CategoryInfo {
  std::vector<std::string> keypoint_names;
  std::vector<std::pair<int, int>> skeleton;  // 1-based joint indices, COCO style
  std::vector<double> sigmas;                 // per-keypoint OKS constants
};

/// Standard COCO per-keypoint OKS sigmas.
const std::vector<double>& default_oks_sigmas();

/// In-memory COCO keypoint dataset. Instances are ordered by annotation id.
struct Dataset {
  std::vector<DatasetImage> images;
  std::vector<PersonInstance> instances;
  CategoryInfo category;
  int dropped_empty = 0;  // annotations with zero labeled keypoints

  const DatasetImage* find_image(std::int64_t image_id) const;
};

/// Parses a COCO keypoint annotation document. Annotations without a single
/// labeled keypoint are dropped (counted in dropped_empty).
/// Throws MalformedFile / SchemaError (with the offending annotation id).
Dataset load_coco_annotations(const std::string& path);

/// Writes a dataset back out in the same schema. Augmented annotations may
/// carry a "posetrans" provenance object, preserved verbatim.
void save_coco_annotations(const Dataset& dataset, const std::string& path,
                           const std::vector<std::string>& provenance = {});

/// Per-pixel body-part labels; 0 = background, 1..14 = parts.
class ParsingMask {
 public:
  static constexpr int kMaxLabel = 14;

  /// Validates label range; takes ownership of the raster.
  static ParsingMask from_image(Image image);

  int width() const { return image_.width; }
  int height() const { return image_.height; }
  std::uint8_t label(int x, int y) const { return image_.at(x, y); }
  const Image& raster() const { return image_; }

  bool has_any_label(const std::vector<int>& labels) const;

 private:
  Image image_;
};

/// Loads an 8-bit single-channel raster of part labels.
/// Throws DimensionMismatch when dims differ from expected_{w,h} (pass 0 to
/// skip the check) and LabelOutOfRange for values > 14.
ParsingMask load_parsing_mask(const std::string& path, int expected_w = 0,
                              int expected_h = 0);

/// Binary mask (1-channel, 0/1) of pixels whose label belongs to the limb.
/// An empty result is legal and marks the limb non-transformable.
Image limb_region(const ParsingMask& mask, int limb_id, const LimbLabelMap& mapping);

/// Normalizes the instance pose against its annotation bbox.
NormalizedPose crop_and_normalize(const PersonInstance& instance);

/// Loads the limb id -> parsing label set mapping (JSON object keyed by limb
/// id). Every limb must receive a non-empty label set.
LimbLabelMap load_limb_label_map(const std::string& path);

/// Conventional per-instance mask file name: "<image_id>_<instance_id>.png".
std::string mask_file_name(const PersonInstance& instance);

}  // namespace posetrans
