#include "posetrans/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "posetrans/dataset.hpp"

namespace posetrans {

bool LimbPlan::empty() const {
  return std::none_of(affected.begin(), affected.end(), [](bool b) { return b; });
}

namespace {

double sample_truncated_normal(Rng& rng, double mean, double stddev, double lo,
                               double hi, const char* what) {
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal(mean, stddev);
    if (v >= lo && v <= hi) return v;
  }
  throw Error(ErrorCode::NonConvergent,
              std::string("rejection sampling for ") + what +
                  " exceeded 1000 draws; check std/range configuration");
}

}  // namespace

LimbTransform sample_limb_transform(const AugConfig& config, Rng& rng) {
  LimbTransform t;
  t.scale = sample_truncated_normal(rng, 1.0, config.scale_std, config.scale_min,
                                    config.scale_max, "scale");
  t.rotation = sample_truncated_normal(rng, 0.0, config.rotation_std,
                                       config.rotation_min, config.rotation_max,
                                       "rotation");
  return t;
}

AffineMatrix affine_matrix(const LimbTransform& t, Vec2 center) {
  if (!(t.scale > 0.0)) {
    throw Error(ErrorCode::InvalidScale, "limb scale must be positive");
  }
  const double sc = t.scale * std::cos(t.rotation);
  const double ss = t.scale * std::sin(t.rotation);
  AffineMatrix m;
  m.at(0, 0) = sc;
  m.at(0, 1) = -ss;
  m.at(0, 2) = (1.0 - sc) * center.x + ss * center.y;
  m.at(1, 0) = ss;
  m.at(1, 1) = sc;
  m.at(1, 2) = (1.0 - sc) * center.y - ss * center.x;
  return m;
}

AffineMatrix compose_hierarchy(const AffineMatrix& upper, const AffineMatrix& lower) {
  return upper * lower;
}

LimbPlan sample_limb_plan(const Pose& pose,
                          const std::array<bool, kNumLimbs>& transformable,
                          const AugConfig& config, Rng& rng) {
  const auto& limbs = limb_table();
  LimbPlan plan;
  for (int i = 0; i < kNumLimbs; ++i) {
    plan.effective[static_cast<std::size_t>(i)] = AffineMatrix::identity();
  }
  // Fixed draw order: gate then (maybe) sample, limb ids ascending.
  for (int i = 0; i < kNumLimbs; ++i) {
    if (!transformable[static_cast<std::size_t>(i)]) continue;
    if (rng.uniform() >= config.per_limb_prob) continue;
    plan.transforms[static_cast<std::size_t>(i)] = sample_limb_transform(config, rng);
  }
  // Effective matrices; parents precede children in the table, one pass works.
  for (const Limb& limb : limbs) {
    const auto idx = static_cast<std::size_t>(limb.id);
    const bool parent_affected = limb.has_parent() &&
                                 plan.affected[static_cast<std::size_t>(limb.parent)];
    const bool own = plan.transforms[idx].has_value();
    if (!own && !parent_affected) continue;
    AffineMatrix own_matrix = AffineMatrix::identity();
    if (own) {
      const Keypoint& center = pose[limb.src_joint];
      own_matrix = affine_matrix(*plan.transforms[idx], {center.x, center.y});
    }
    if (parent_affected) {
      plan.effective[idx] = compose_hierarchy(
          plan.effective[static_cast<std::size_t>(limb.parent)], own_matrix);
    } else {
      plan.effective[idx] = own_matrix;
    }
    plan.affected[idx] = true;
  }
  return plan;
}

Pose transform_pose(const Pose& pose, const LimbPlan& plan) {
  Pose out = pose;
  // Each moved limb maps its dst joint. An upper limb's dst is the lower
  // limb's src (elbow/knee), so the chain stays connected by construction.
  for (const Limb& limb : limb_table()) {
    const auto idx = static_cast<std::size_t>(limb.id);
    if (!plan.affected[idx]) continue;
    const Keypoint& orig = pose[limb.dst_joint];
    const Vec2 mapped = plan.effective[idx].apply({orig.x, orig.y});
    out[limb.dst_joint].x = mapped.x;
    out[limb.dst_joint].y = mapped.y;
  }
  return out;
}

EraseResult erase_limbs(const Image& image, const std::vector<Image>& regions) {
  EraseResult result;
  result.image = image;
  result.hole = Image::create(image.width, image.height, 1, 0);
  if (regions.empty()) return result;
  Image unioned = Image::create(image.width, image.height, 1, 0);
  for (const Image& region : regions) {
    if (!region.same_dims(image) || region.channels != 1) {
      throw Error(ErrorCode::DimensionMismatch, "region mask does not match image");
    }
    for (std::size_t i = 0; i < unioned.data.size(); ++i) {
      if (region.data[i] != 0) unioned.data[i] = 1;
    }
  }
  result.hole = dilate_once(unioned);
  return result;
}

namespace {

// Bilinear sample of channel c at (x, y); off-frame taps contribute `fallback`.
double bilinear(const Image& img, double x, double y, int c, double fallback) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      if (wgt == 0.0) continue;
      const int xi = x0 + dx;
      const int yi = y0 + dy;
      acc += wgt * (img.in_bounds(xi, yi) ? static_cast<double>(img.at(xi, yi, c)) : fallback);
    }
  }
  return acc;
}

}  // namespace

Image composite(const Image& base, const std::vector<LimbPatch>& patches) {
  Image out = base;
  for (const LimbPatch& patch : patches) {
    if (!patch.pixels->same_dims(base) || !patch.region->same_dims(base)) {
      throw Error(ErrorCode::DimensionMismatch, "patch does not match base image");
    }
    const AffineMatrix inv = patch.effective.inverse();

    // Bounding box of the warped region, clipped to the frame.
    int min_x = out.width, min_y = out.height, max_x = -1, max_y = -1;
    for (int y = 0; y < patch.region->height; ++y) {
      for (int x = 0; x < patch.region->width; ++x) {
        if (patch.region->at(x, y) == 0) continue;
        for (int cy = 0; cy <= 1; ++cy) {
          for (int cx = 0; cx <= 1; ++cx) {
            const Vec2 p = patch.effective.apply({static_cast<double>(x + cx),
                                                  static_cast<double>(y + cy)});
            min_x = std::min(min_x, static_cast<int>(std::floor(p.x)) - 1);
            min_y = std::min(min_y, static_cast<int>(std::floor(p.y)) - 1);
            max_x = std::max(max_x, static_cast<int>(std::ceil(p.x)) + 1);
            max_y = std::max(max_y, static_cast<int>(std::ceil(p.y)) + 1);
          }
        }
      }
    }
    min_x = std::max(min_x, 0);
    min_y = std::max(min_y, 0);
    max_x = std::min(max_x, out.width - 1);
    max_y = std::min(max_y, out.height - 1);

    for (int y = min_y; y <= max_y; ++y) {
      for (int x = min_x; x <= max_x; ++x) {
        const Vec2 src = inv.apply({static_cast<double>(x), static_cast<double>(y)});
        const double alpha =
            std::clamp(bilinear(*patch.region, src.x, src.y, 0, 0.0), 0.0, 1.0);
        if (alpha <= 0.0) continue;
        for (int c = 0; c < out.channels; ++c) {
          const double v = bilinear(*patch.pixels, src.x, src.y, c,
                                    static_cast<double>(out.at(x, y, c)));
          const double blended = alpha * v + (1.0 - alpha) * out.at(x, y, c);
          out.at(x, y, c) =
              static_cast<std::uint8_t>(std::lround(std::clamp(blended, 0.0, 255.0)));
        }
      }
    }
  }
  return out;
}

std::array<bool, kNumLimbs> transformable_limbs(const Pose& pose,
                                                const ParsingMask& mask,
                                                const LimbLabelMap& mapping) {
  std::array<bool, kNumLimbs> out{};
  for (const Limb& limb : limb_table()) {
    const bool endpoints_visible =
        pose[limb.src_joint].visible() && pose[limb.dst_joint].visible();
    if (!endpoints_visible) continue;
    out[static_cast<std::size_t>(limb.id)] =
        mask.has_any_label(mapping[static_cast<std::size_t>(limb.id)]);
  }
  return out;
}

Image apply_plan_to_image(const Image& image, const ParsingMask& mask,
                          const LimbLabelMap& mapping, const LimbPlan& plan,
                          const InpaintParams& inpaint_params) {
  if (plan.empty()) return image;
  std::vector<Image> regions;
  std::vector<LimbPatch> patches;
  std::vector<int> patch_limbs;
  for (const Limb& limb : limb_table()) {
    const auto idx = static_cast<std::size_t>(limb.id);
    if (!plan.affected[idx]) continue;
    regions.push_back(limb_region(mask, limb.id, mapping));
    patch_limbs.push_back(limb.id);
  }
  EraseResult erased = erase_limbs(image, regions);
  Image filled = inpaint(erased.image, erased.hole, inpaint_params);
  patches.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    patches.push_back(LimbPatch{
        &image, &regions[i],
        plan.effective[static_cast<std::size_t>(patch_limbs[i])]});
  }
  return composite(filled, patches);
}

AugmentedSample apply_ptm(const PersonInstance& instance, const Image& image,
                          const ParsingMask& mask, const LimbLabelMap& mapping,
                          const AugConfig& config, Rng& rng) {
  if (image.width != mask.width() || image.height != mask.height()) {
    throw Error(ErrorCode::DimensionMismatch, "image and parsing mask dims differ");
  }
  const auto transformable = transformable_limbs(instance.pose, mask, mapping);
  if (std::none_of(transformable.begin(), transformable.end(), [](bool b) { return b; })) {
    throw Error(ErrorCode::NoTransformableLimb, "no limb is transformable for instance " +
                                                    std::to_string(instance.instance_id));
  }
  AugmentedSample sample;
  sample.source_instance_id = instance.instance_id;
  sample.rng_seed = config.rng_seed;
  sample.plan = sample_limb_plan(instance.pose, transformable, config, rng);
  sample.pose = transform_pose(instance.pose, sample.plan);
  sample.image = apply_plan_to_image(image, mask, mapping, sample.plan);
  return sample;
}

}  // namespace posetrans
