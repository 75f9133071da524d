#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "posetrans/error.hpp"

namespace posetrans {

inline constexpr int kNumJoints = 17;
inline constexpr int kNumLimbs = 8;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// COCO keypoint order. All joint indices in the library refer to this table.
enum JointId : int {
  kNose = 0,
  kLeftEye,
  kRightEye,
  kLeftEar,
  kRightEar,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHip,
  kRightHip,
  kLeftKnee,
  kRightKnee,
  kLeftAnkle,
  kRightAnkle,
};

const char* joint_name(int joint);

/// COCO visibility convention: 0 = not labeled, 1 = labeled but occluded,
/// 2 = labeled and visible.
enum class Visibility : int {
  NotLabeled = 0,
  LabeledOccluded = 1,
  LabeledVisible = 2,
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  Visibility vis = Visibility::NotLabeled;

  bool labeled() const { return vis != Visibility::NotLabeled; }
  bool visible() const { return vis == Visibility::LabeledVisible; }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// A full-body pose: exactly kNumJoints keypoints in COCO order,
/// coordinates in image pixels.
struct Pose {
  std::array<Keypoint, kNumJoints> joints{};

  Keypoint& operator[](int j) { return joints[static_cast<std::size_t>(j)]; }
  const Keypoint& operator[](int j) const {
    return joints[static_cast<std::size_t>(j)];
  }
  int labeled_count() const;
};

/// Pose in normalized crop space: labeled coordinates in [0,1], unlabeled
/// joints filled with the crop center (0.5, 0.5). Produced only by
/// crop_and_normalize / normalize_pose.
struct NormalizedPose {
  std::array<Keypoint, kNumJoints> joints{};

  Keypoint& operator[](int j) { return joints[static_cast<std::size_t>(j)]; }
  const Keypoint& operator[](int j) const {
    return joints[static_cast<std::size_t>(j)];
  }

  /// Flattened 2J coordinate vector (x0, y0, x1, y1, ...).
  std::array<double, 2 * kNumJoints> coords() const;
};

/// One of the eight rigid limb segments. src_joint is the rotation center
/// (shoulder/elbow for arms, hip/knee for legs); lower segments carry the id
/// of their upper segment as parent.
struct Limb {
  int id = 0;
  int src_joint = 0;
  int dst_joint = 0;
  int parent = -1;  // -1 = no parent (upper segment)
  const char* name = "";

  bool has_parent() const { return parent >= 0; }
};

/// The fixed limb table. Ids are ordered upper-before-lower and left-before-
/// right so that a single forward pass composes the hierarchy and the paste
/// order is deterministic.
const std::array<Limb, kNumLimbs>& limb_table();

/// Parsing-mask labels belonging to each limb id. This mapping is a config
/// input (the part labeling convention is dataset-dependent).
using LimbLabelMap = std::array<std::vector<int>, kNumLimbs>;

/// Per-limb scale/rotation parameters. Rotation is radians, always.
struct LimbTransform {
  double scale = 1.0;
  double rotation = 0.0;
};

/// 3x3 homogeneous transform, row-major. The bottom row is always [0,0,1].
struct AffineMatrix {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static AffineMatrix identity() { return AffineMatrix{}; }

  double at(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
  double& at(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

  Vec2 apply(Vec2 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }

  /// Determinant of the 2x2 linear part.
  double linear_det() const { return m[0] * m[4] - m[1] * m[3]; }

  /// Inverse; throws SingularMatrix when the linear part is not invertible.
  AffineMatrix inverse() const;

  bool is_identity(double tol = 0.0) const;
};

/// upper * lower (lower applied first). Keeps the bottom row exact.
AffineMatrix operator*(const AffineMatrix& upper, const AffineMatrix& lower);

struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

/// One annotated person: the unit PTM and PCM operate on.
struct PersonInstance {
  std::int64_t image_id = 0;
  std::int64_t instance_id = 0;  // COCO annotation id
  Box bbox;
  Pose pose;
  std::string mask_ref;  // parsing-mask file name; empty = no mask available
  double area = 0.0;
};

/// Augmentation knobs. Defaults follow the reference configuration:
/// p=0.5, s in [0.75,1.25], r in [-35 deg, 35 deg], T=5, E=0.7, N=20.
struct AugConfig {
  double per_limb_prob = 0.5;
  double scale_min = 0.75;
  double scale_max = 1.25;
  double rotation_min = deg_to_rad(-35.0);
  double rotation_max = deg_to_rad(35.0);
  // Sampling std-devs default to a quarter of the range width.
  double scale_std = 0.125;
  double rotation_std = deg_to_rad(17.5);
  int pool_size = 5;                      // T
  double plausibility_threshold = 0.7;    // E
  int n_components = 20;                  // N
  std::uint64_t rng_seed = 0;
  int max_pool_attempts = 50;

  /// Throws InvalidArgument when any invariant is violated
  /// (empty ranges, ranges not containing the identity (1, 0), ...).
  void validate() const;
};

/// ((x-bx)/bw, (y-by)/bh) clamped to [0,1]; unlabeled joints become the crop
/// center (0.5, 0.5) with vis preserved as NotLabeled. Anisotropic by design
/// (fixed-size square resize semantics). Throws DegenerateBox.
NormalizedPose normalize_pose(const Pose& pose, const Box& bbox);

}  // namespace posetrans
