#pragma once

#include <array>
#include <optional>
#include <vector>

#include "posetrans/image.hpp"
#include "posetrans/inpaint.hpp"
#include "posetrans/rng.hpp"
#include "posetrans/types.hpp"

namespace posetrans {

class ParsingMask;

/// Per-round transform plan: which limbs move, by how much, and the
/// effective matrix of each limb after kinematic-hierarchy composition.
struct LimbPlan {
  std::array<std::optional<LimbTransform>, kNumLimbs> transforms{};
  std::array<AffineMatrix, kNumLimbs> effective{};
  // True when the limb moves at all (own transform or carried by its parent).
  std::array<bool, kNumLimbs> affected{};

  bool empty() const;
};

/// Draws (s, r) from independent normals centered at (1, 0), rejection-
/// sampled into [scale_min,scale_max] x [rotation_min,rotation_max].
/// Throws NonConvergent after 1000 rejected draws per component.
LimbTransform sample_limb_transform(const AugConfig& config, Rng& rng);

/// Center-anchored similarity T(c) R(r) S(s) T(-c): rotates by r and scales
/// by s about the rotation center c, which stays fixed for all (s, r).
/// Throws InvalidScale when t.scale <= 0.
AffineMatrix affine_matrix(const LimbTransform& t, Vec2 center);

/// upper x lower: the lower limb's own movement followed by the carried
/// movement of its upper segment.
AffineMatrix compose_hierarchy(const AffineMatrix& upper, const AffineMatrix& lower);

/// Builds a LimbPlan: for each transformable limb, with probability
/// config.per_limb_prob samples a LimbTransform; effective matrices include
/// hierarchy composition. Draw order is limb id 0..7 so that one rng state
/// fully determines the plan.
LimbPlan sample_limb_plan(const Pose& pose,
                          const std::array<bool, kNumLimbs>& transformable,
                          const AugConfig& config, Rng& rng);

/// Applies the plan to the keypoints: each moved limb's dst joint is mapped
/// by the limb's effective matrix, keeping the chain connected. Visibility
/// flags are unchanged.
Pose transform_pose(const Pose& pose, const LimbPlan& plan);

struct EraseResult {
  Image image;  // pixels under the hole are left as-is; content is defined by inpaint
  Image hole;   // union of regions, dilated by one pixel
};

/// Marks limb regions for removal. The hole mask is the union of the given
/// regions dilated by one pixel to absorb anti-aliased seams.
EraseResult erase_limbs(const Image& image, const std::vector<Image>& regions);

struct LimbPatch {
  const Image* pixels = nullptr;  // source image the limb is cut from
  const Image* region = nullptr;  // 1-channel mask of the limb's pixels
  AffineMatrix effective;
};

/// Warps each patch by its effective matrix (inverse-warp bilinear sampling,
/// alpha from the bilinearly sampled region mask) and draws it over the base.
/// Later patches overdraw earlier ones; out-of-frame pixels are clipped.
/// Throws SingularMatrix for non-invertible matrices.
Image composite(const Image& base, const std::vector<LimbPatch>& patches);

/// A PTM product: augmented raster + transformed pose + provenance.
struct AugmentedSample {
  Image image;
  Pose pose;
  std::optional<double> plausibility;
  std::int64_t source_instance_id = 0;
  LimbPlan plan;
  std::uint64_t rng_seed = 0;
};

/// A limb is transformable iff both endpoint keypoints are labeled visible
/// and its parsing-mask region is non-empty.
std::array<bool, kNumLimbs> transformable_limbs(const Pose& pose,
                                                const ParsingMask& mask,
                                                const LimbLabelMap& mapping);

/// Erase + inpaint + composite for an already-sampled plan.
Image apply_plan_to_image(const Image& image, const ParsingMask& mask,
                          const LimbLabelMap& mapping, const LimbPlan& plan,
                          const InpaintParams& inpaint_params = {});

/// Full PTM round for one instance: gate limbs, sample the plan, rebuild the
/// image, transform the pose. Deterministic given (inputs, rng state).
/// Throws NoTransformableLimb when all limbs are ineligible.
AugmentedSample apply_ptm(const PersonInstance& instance, const Image& image,
                          const ParsingMask& mask, const LimbLabelMap& mapping,
                          const AugConfig& config, Rng& rng);

}  // namespace posetrans
