#include "posetrans/types.hpp"

#include <algorithm>
#include <cmath>

namespace posetrans {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoTransformableLimb: return "NoTransformableLimb";
    case ErrorCode::FullMask: return "FullMask";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    case ErrorCode::AllZeroDensity: return "AllZeroDensity";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::NoLabeledKeypoints: return "NoLabeledKeypoints";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::Diverged: return "Diverged";
  }
  return "UnknownError";
}

const char* joint_name(int joint) {
  static const char* kNames[kNumJoints] = {
      "nose",           "left_eye",      "right_eye",     "left_ear",
      "right_ear",      "left_shoulder", "right_shoulder", "left_elbow",
      "right_elbow",    "left_wrist",    "right_wrist",   "left_hip",
      "right_hip",      "left_knee",     "right_knee",    "left_ankle",
      "right_ankle"};
  if (joint < 0 || joint >= kNumJoints) return "invalid";
  return kNames[joint];
}

int Pose::labeled_count() const {
  return static_cast<int>(std::count_if(joints.begin(), joints.end(),
                                        [](const Keypoint& k) { return k.labeled(); }));
}

std::array<double, 2 * kNumJoints> NormalizedPose::coords() const {
  std::array<double, 2 * kNumJoints> out{};
  for (int j = 0; j < kNumJoints; ++j) {
    out[static_cast<std::size_t>(2 * j)] = joints[static_cast<std::size_t>(j)].x;
    out[static_cast<std::size_t>(2 * j + 1)] = joints[static_cast<std::size_t>(j)].y;
  }
  return out;
}

const std::array<Limb, kNumLimbs>& limb_table() {
  // Upper segments first, left before right; children after their parents.
  static const std::array<Limb, kNumLimbs> kLimbs = {{
      {0, kLeftShoulder, kLeftElbow, -1, "left_upper_arm"},
      {1, kRightShoulder, kRightElbow, -1, "right_upper_arm"},
      {2, kLeftElbow, kLeftWrist, 0, "left_lower_arm"},
      {3, kRightElbow, kRightWrist, 1, "right_lower_arm"},
      {4, kLeftHip, kLeftKnee, -1, "left_upper_leg"},
      {5, kRightHip, kRightKnee, -1, "right_upper_leg"},
      {6, kLeftKnee, kLeftAnkle, 4, "left_lower_leg"},
      {7, kRightKnee, kRightAnkle, 5, "right_lower_leg"},
  }};
  return kLimbs;
}

AffineMatrix operator*(const AffineMatrix& upper, const AffineMatrix& lower) {
  AffineMatrix out;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) {
      out.at(r, c) = upper.at(r, 0) * lower.at(0, c) +
                     upper.at(r, 1) * lower.at(1, c) +
                     upper.at(r, 2) * lower.at(2, c);
    }
  }
  out.at(2, 0) = 0.0;
  out.at(2, 1) = 0.0;
  out.at(2, 2) = 1.0;
  return out;
}

AffineMatrix AffineMatrix::inverse() const {
  const double det = linear_det();
  if (det == 0.0 || !std::isfinite(det)) {
    throw Error(ErrorCode::SingularMatrix, "affine matrix is not invertible");
  }
  AffineMatrix inv;
  inv.at(0, 0) = at(1, 1) / det;
  inv.at(0, 1) = -at(0, 1) / det;
  inv.at(1, 0) = -at(1, 0) / det;
  inv.at(1, 1) = at(0, 0) / det;
  inv.at(0, 2) = -(inv.at(0, 0) * at(0, 2) + inv.at(0, 1) * at(1, 2));
  inv.at(1, 2) = -(inv.at(1, 0) * at(0, 2) + inv.at(1, 1) * at(1, 2));
  return inv;
}

bool AffineMatrix::is_identity(double tol) const {
  const AffineMatrix id;
  for (int i = 0; i < 9; ++i) {
    if (std::abs(m[static_cast<std::size_t>(i)] - id.m[static_cast<std::size_t>(i)]) > tol) {
      return false;
    }
  }
  return true;
}

void AugConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::InvalidArgument, msg);
  };
  if (!(per_limb_prob >= 0.0 && per_limb_prob <= 1.0)) fail("per_limb_prob must be in [0,1]");
  if (!(scale_min > 0.0)) fail("scale_min must be positive");
  if (!(scale_min <= 1.0 && 1.0 <= scale_max)) fail("scale range must contain 1");
  if (!(rotation_min <= 0.0 && 0.0 <= rotation_max)) fail("rotation range must contain 0");
  if (!(scale_std >= 0.0) || !(rotation_std >= 0.0)) fail("std-devs must be non-negative");
  if (pool_size < 1) fail("pool_size must be >= 1");
  if (!(plausibility_threshold >= 0.0 && plausibility_threshold <= 1.0)) {
    fail("plausibility_threshold must be in [0,1]");
  }
  if (n_components < 1) fail("n_components must be >= 1");
  if (max_pool_attempts < 1) fail("max_pool_attempts must be >= 1");
}

NormalizedPose normalize_pose(const Pose& pose, const Box& bbox) {
  if (!(bbox.w > 0.0) || !(bbox.h > 0.0)) {
    throw Error(ErrorCode::DegenerateBox, "bbox width/height must be positive");
  }
  NormalizedPose out;
  for (int j = 0; j < kNumJoints; ++j) {
    const Keypoint& kp = pose[j];
    Keypoint& n = out[j];
    if (kp.labeled()) {
      n.x = std::clamp((kp.x - bbox.x) / bbox.w, 0.0, 1.0);
      n.y = std::clamp((kp.y - bbox.y) / bbox.h, 0.0, 1.0);
      n.vis = kp.vis;
    } else {
      // Crop-center fill keeps the clustering feature vector fixed-length
      // without biasing toward any corner.
      n.x = 0.5;
      n.y = 0.5;
      n.vis = Visibility::NotLabeled;
    }
  }
  return out;
}

}  // namespace posetrans
