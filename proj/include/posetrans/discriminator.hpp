#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posetrans/types.hpp"

namespace posetrans {

/// Pose-geometry feature vector fed to the discriminator:
///   [0..33]    2J normalized coordinates
///   [34..49]   8 limb orientation angles, (sin, cos) each
///   [50..53]   4 lower/upper limb length ratios (L arm, R arm, L leg, R leg)
///   [54..61]   4 interior joint angles (L/R elbow, L/R knee), (sin, cos) each
///   [62..123]  presence flag per value above (0 = missing, zero-filled)
inline constexpr int kPoseFeatureValues = 62;
inline constexpr int kPoseFeatureDim = 2 * kPoseFeatureValues;

using PoseFeatures = std::array<double, kPoseFeatureDim>;

PoseFeatures extract_pose_features(const NormalizedPose& pose);

/// Plausibility scorer: MLP 124 -> 64 -> 32 -> 1, tanh hidden layers and a
/// sigmoid output, so scores live strictly inside (0, 1).
struct DiscriminatorModel {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  double threshold = 0.7;

  int trained_epochs = 0;
  double best_holdout_loss = 0.0;

  static DiscriminatorModel init(std::uint64_t seed);
};

double forward(const DiscriminatorModel& model, const PoseFeatures& features);

struct DiscGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

/// LS-GAN objective on a batch: mean_real (D-1)^2 + mean_fake D^2.
/// When grads is non-null the analytic gradients are written there.
double lsgan_loss(const DiscriminatorModel& model,
                  const std::vector<PoseFeatures>& real,
                  const std::vector<PoseFeatures>& fake,
                  DiscGradients* grads = nullptr);

struct DiscTrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  double threshold = 0.7;
};

struct TrainEpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;
};

struct DiscTrainResult {
  DiscriminatorModel model;  // snapshot with the best held-out loss
  std::vector<TrainEpochStats> history;
};

/// Mini-batch gradient descent with momentum on the LS-GAN loss. The fake
/// generator is called once per real pose up front, so the training stream
/// is fully determined by (inputs, seed). Throws InsufficientData (< 100
/// real poses) and Diverged (non-finite loss or weights).
DiscTrainResult train_discriminator(const std::vector<NormalizedPose>& real_poses,
                                    const std::function<NormalizedPose()>& fake_generator,
                                    const DiscTrainConfig& config);

DiscTrainResult train_discriminator_features(const std::vector<PoseFeatures>& real,
                                             const std::vector<PoseFeatures>& fake,
                                             const DiscTrainConfig& config);

bool is_plausible(const DiscriminatorModel& model, const NormalizedPose& pose,
                  double threshold);

/// Versioned JSON checkpoint (layer shapes + row-major weights + metadata);
/// doubles round-trip exactly.
void save_discriminator(const DiscriminatorModel& model, const std::string& path);
DiscriminatorModel load_discriminator(const std::string& path);

}  // namespace posetrans
