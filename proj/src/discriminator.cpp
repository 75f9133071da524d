#include "posetrans/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "posetrans/rng.hpp"

namespace posetrans {

using nlohmann::json;

namespace {

constexpr int kHidden1 = 64;
constexpr int kHidden2 = 32;

struct LimbGeometry {
  bool present = false;
  double dx = 0.0, dy = 0.0, length = 0.0;
};

LimbGeometry limb_geometry(const NormalizedPose& pose, const Limb& limb) {
  LimbGeometry g;
  const Keypoint& a = pose[limb.src_joint];
  const Keypoint& b = pose[limb.dst_joint];
  if (!a.labeled() || !b.labeled()) return g;
  g.dx = b.x - a.x;
  g.dy = b.y - a.y;
  g.length = std::hypot(g.dx, g.dy);
  g.present = g.length > 0.0;
  return g;
}

}  // namespace

PoseFeatures extract_pose_features(const NormalizedPose& pose) {
  PoseFeatures f{};
  auto set = [&f](int slot, double value, bool present) {
    f[static_cast<std::size_t>(slot)] = present ? value : 0.0;
    f[static_cast<std::size_t>(kPoseFeatureValues + slot)] = present ? 1.0 : 0.0;
  };

  for (int j = 0; j < kNumJoints; ++j) {
    const Keypoint& kp = pose[j];
    set(2 * j, kp.x, kp.labeled());
    set(2 * j + 1, kp.y, kp.labeled());
  }

  const auto& limbs = limb_table();
  std::array<LimbGeometry, kNumLimbs> geo;
  for (int i = 0; i < kNumLimbs; ++i) {
    geo[static_cast<std::size_t>(i)] = limb_geometry(pose, limbs[static_cast<std::size_t>(i)]);
  }

  for (int i = 0; i < kNumLimbs; ++i) {
    const LimbGeometry& g = geo[static_cast<std::size_t>(i)];
    const double sin_v = g.present ? g.dy / g.length : 0.0;
    const double cos_v = g.present ? g.dx / g.length : 0.0;
    set(34 + 2 * i, sin_v, g.present);
    set(34 + 2 * i + 1, cos_v, g.present);
  }

  // Lower/upper pairs: (2,0) L arm, (3,1) R arm, (6,4) L leg, (7,5) R leg.
  constexpr int kPairs[4][2] = {{2, 0}, {3, 1}, {6, 4}, {7, 5}};
  for (int p = 0; p < 4; ++p) {
    const LimbGeometry& lower = geo[static_cast<std::size_t>(kPairs[p][0])];
    const LimbGeometry& upper = geo[static_cast<std::size_t>(kPairs[p][1])];
    const bool present = lower.present && upper.present;
    set(50 + p, present ? lower.length / upper.length : 0.0, present);
  }

  // Interior flexion angle between (src->parent src) and (src->dst) at the
  // elbow/knee: angle in [0, pi], so sin >= 0; straight limb encodes (0, -1).
  for (int p = 0; p < 4; ++p) {
    const Limb& lower = limbs[static_cast<std::size_t>(kPairs[p][0])];
    const Limb& upper = limbs[static_cast<std::size_t>(kPairs[p][1])];
    const Keypoint& joint = pose[lower.src_joint];   // elbow / knee
    const Keypoint& prox = pose[upper.src_joint];    // shoulder / hip
    const Keypoint& dist = pose[lower.dst_joint];    // wrist / ankle
    bool present = joint.labeled() && prox.labeled() && dist.labeled();
    double sin_v = 0.0, cos_v = 0.0;
    if (present) {
      const double ux = prox.x - joint.x, uy = prox.y - joint.y;
      const double vx = dist.x - joint.x, vy = dist.y - joint.y;
      const double nu = std::hypot(ux, uy), nv = std::hypot(vx, vy);
      if (nu > 0.0 && nv > 0.0) {
        cos_v = (ux * vx + uy * vy) / (nu * nv);
        sin_v = std::abs(ux * vy - uy * vx) / (nu * nv);
        const double norm = std::hypot(sin_v, cos_v);
        sin_v /= norm;
        cos_v /= norm;
      } else {
        present = false;
      }
    }
    set(54 + 2 * p, sin_v, present);
    set(54 + 2 * p + 1, cos_v, present);
  }
  return f;
}

DiscriminatorModel DiscriminatorModel::init(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0x64697363ULL));
  DiscriminatorModel m;
  auto fill = [&rng](Eigen::MatrixXd& w, int rows, int cols) {
    const double a = std::sqrt(6.0 / (rows + cols));
    w.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-a, a);
    }
  };
  fill(m.w1, kHidden1, kPoseFeatureDim);
  fill(m.w2, kHidden2, kHidden1);
  fill(m.w3, 1, kHidden2);
  m.b1 = Eigen::VectorXd::Zero(kHidden1);
  m.b2 = Eigen::VectorXd::Zero(kHidden2);
  m.b3 = Eigen::VectorXd::Zero(1);
  return m;
}

namespace {

struct ForwardCache {
  Eigen::VectorXd x, a1, a2;
  double out = 0.0;
};

ForwardCache forward_cached(const DiscriminatorModel& model, const PoseFeatures& f) {
  ForwardCache c;
  c.x = Eigen::Map<const Eigen::VectorXd>(f.data(), kPoseFeatureDim);
  c.a1 = (model.w1 * c.x + model.b1).array().tanh();
  c.a2 = (model.w2 * c.a1 + model.b2).array().tanh();
  const double z3 = (model.w3 * c.a2)(0) + model.b3(0);
  c.out = 1.0 / (1.0 + std::exp(-z3));
  return c;
}

void zero_like(const DiscriminatorModel& model, DiscGradients& g) {
  g.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
  g.w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
  g.w3 = Eigen::MatrixXd::Zero(model.w3.rows(), model.w3.cols());
  g.b1 = Eigen::VectorXd::Zero(model.b1.size());
  g.b2 = Eigen::VectorXd::Zero(model.b2.size());
  g.b3 = Eigen::VectorXd::Zero(model.b3.size());
}

void backprop_sample(const DiscriminatorModel& model, const ForwardCache& c,
                     double dloss_dout, DiscGradients& g) {
  const double dz3 = dloss_dout * c.out * (1.0 - c.out);
  g.w3.row(0) += dz3 * c.a2.transpose();
  g.b3(0) += dz3;
  Eigen::VectorXd da2 = model.w3.transpose() * dz3;
  Eigen::VectorXd dz2 = da2.array() * (1.0 - c.a2.array().square());
  g.w2 += dz2 * c.a1.transpose();
  g.b2 += dz2;
  Eigen::VectorXd da1 = model.w2.transpose() * dz2;
  Eigen::VectorXd dz1 = da1.array() * (1.0 - c.a1.array().square());
  g.w1 += dz1 * c.x.transpose();
  g.b1 += dz1;
}

bool finite(const DiscriminatorModel& m) {
  return m.w1.allFinite() && m.w2.allFinite() && m.w3.allFinite() &&
         m.b1.allFinite() && m.b2.allFinite() && m.b3.allFinite();
}

}  // namespace

double forward(const DiscriminatorModel& model, const PoseFeatures& features) {
  if (model.w1.cols() != kPoseFeatureDim) {
    throw Error(ErrorCode::DimensionMismatch, "model input width mismatch");
  }
  return forward_cached(model, features).out;
}

double lsgan_loss(const DiscriminatorModel& model,
                  const std::vector<PoseFeatures>& real,
                  const std::vector<PoseFeatures>& fake, DiscGradients* grads) {
  if (grads) zero_like(model, *grads);
  double loss = 0.0;
  if (!real.empty()) {
    const double scale = 1.0 / static_cast<double>(real.size());
    for (const PoseFeatures& f : real) {
      const ForwardCache c = forward_cached(model, f);
      loss += scale * (c.out - 1.0) * (c.out - 1.0);
      if (grads) backprop_sample(model, c, scale * 2.0 * (c.out - 1.0), *grads);
    }
  }
  if (!fake.empty()) {
    const double scale = 1.0 / static_cast<double>(fake.size());
    for (const PoseFeatures& f : fake) {
      const ForwardCache c = forward_cached(model, f);
      loss += scale * c.out * c.out;
      if (grads) backprop_sample(model, c, scale * 2.0 * c.out, *grads);
    }
  }
  return loss;
}

DiscTrainResult train_discriminator_features(const std::vector<PoseFeatures>& real,
                                             const std::vector<PoseFeatures>& fake,
                                             const DiscTrainConfig& config) {
  if (real.size() < 100) {
    throw Error(ErrorCode::InsufficientData,
                "need at least 100 real poses, got " + std::to_string(real.size()));
  }
  if (fake.empty()) {
    throw Error(ErrorCode::InsufficientData, "no fake poses provided");
  }

  Rng rng(Rng::derive(config.seed, 0x747261696EULL));

  auto split = [&rng, &config](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // Fisher-Yates with our own stream.
    for (std::size_t i = n; i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    }
    const auto holdout = static_cast<std::size_t>(
        std::max(1.0, std::floor(config.holdout_fraction * static_cast<double>(n))));
    return std::pair{std::vector<std::size_t>(idx.begin(), idx.end() - static_cast<long>(holdout)),
                     std::vector<std::size_t>(idx.end() - static_cast<long>(holdout), idx.end())};
  };
  auto [real_train_idx, real_hold_idx] = split(real.size());
  auto [fake_train_idx, fake_hold_idx] = split(fake.size());

  auto gather = [](const std::vector<PoseFeatures>& src, const std::vector<std::size_t>& idx) {
    std::vector<PoseFeatures> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(src[i]);
    return out;
  };
  std::vector<PoseFeatures> real_train = gather(real, real_train_idx);
  std::vector<PoseFeatures> real_hold = gather(real, real_hold_idx);
  std::vector<PoseFeatures> fake_train = gather(fake, fake_train_idx);
  std::vector<PoseFeatures> fake_hold = gather(fake, fake_hold_idx);

  DiscriminatorModel model = DiscriminatorModel::init(config.seed);
  model.threshold = config.threshold;
  DiscGradients velocity;
  zero_like(model, velocity);

  DiscTrainResult result;
  result.model = model;
  result.model.best_holdout_loss = lsgan_loss(model, real_hold, fake_hold);

  const std::size_t steps_per_epoch =
      std::max<std::size_t>(1, std::min(real_train.size(), fake_train.size()) /
                                   static_cast<std::size_t>(config.batch_size));

  std::vector<std::size_t> r_order(real_train.size()), f_order(fake_train.size());
  std::iota(r_order.begin(), r_order.end(), 0);
  std::iota(f_order.begin(), f_order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = r_order.size(); i > 1; --i) {
      std::swap(r_order[i - 1], r_order[rng.uniform_int(i)]);
    }
    for (std::size_t i = f_order.size(); i > 1; --i) {
      std::swap(f_order[i - 1], f_order[rng.uniform_int(i)]);
    }

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<PoseFeatures> rb, fb;
      const auto bs = static_cast<std::size_t>(config.batch_size);
      for (std::size_t i = step * bs; i < (step + 1) * bs && i < r_order.size(); ++i) {
        rb.push_back(real_train[r_order[i]]);
      }
      for (std::size_t i = step * bs; i < (step + 1) * bs && i < f_order.size(); ++i) {
        fb.push_back(fake_train[f_order[i]]);
      }
      DiscGradients g;
      lsgan_loss(model, rb, fb, &g);
      velocity.w1 = config.momentum * velocity.w1 - config.learning_rate * g.w1;
      velocity.w2 = config.momentum * velocity.w2 - config.learning_rate * g.w2;
      velocity.w3 = config.momentum * velocity.w3 - config.learning_rate * g.w3;
      velocity.b1 = config.momentum * velocity.b1 - config.learning_rate * g.b1;
      velocity.b2 = config.momentum * velocity.b2 - config.learning_rate * g.b2;
      velocity.b3 = config.momentum * velocity.b3 - config.learning_rate * g.b3;
      model.w1 += velocity.w1;
      model.w2 += velocity.w2;
      model.w3 += velocity.w3;
      model.b1 += velocity.b1;
      model.b2 += velocity.b2;
      model.b3 += velocity.b3;
    }

    const double train_loss = lsgan_loss(model, real_train, fake_train);
    const double holdout_loss = lsgan_loss(model, real_hold, fake_hold);
    if (!std::isfinite(train_loss) || !std::isfinite(holdout_loss) || !finite(model)) {
      throw Error(ErrorCode::Diverged, "training produced non-finite values at epoch " +
                                           std::to_string(epoch));
    }
    result.history.push_back({epoch, train_loss, holdout_loss});
    if (holdout_loss < result.model.best_holdout_loss) {
      const double best = holdout_loss;
      result.model = model;
      result.model.best_holdout_loss = best;
      result.model.trained_epochs = epoch;
    }
  }
  result.model.threshold = config.threshold;
  return result;
}

DiscTrainResult train_discriminator(const std::vector<NormalizedPose>& real_poses,
                                    const std::function<NormalizedPose()>& fake_generator,
                                    const DiscTrainConfig& config) {
  if (real_poses.size() < 100) {
    throw Error(ErrorCode::InsufficientData,
                "need at least 100 real poses, got " + std::to_string(real_poses.size()));
  }
  std::vector<PoseFeatures> real, fake;
  real.reserve(real_poses.size());
  fake.reserve(real_poses.size());
  for (const NormalizedPose& p : real_poses) real.push_back(extract_pose_features(p));
  for (std::size_t i = 0; i < real_poses.size(); ++i) {
    fake.push_back(extract_pose_features(fake_generator()));
  }
  return train_discriminator_features(real, fake, config);
}

bool is_plausible(const DiscriminatorModel& model, const NormalizedPose& pose,
                  double threshold) {
  return forward(model, extract_pose_features(pose)) >= threshold;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(flat.size()) != rows * cols) {
    throw Error(ErrorCode::SchemaError, "weight matrix size mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

void save_discriminator(const DiscriminatorModel& model, const std::string& path) {
  json doc;
  doc["format"] = "posetrans-discriminator";
  doc["version"] = 1;
  doc["threshold"] = model.threshold;
  doc["trained_epochs"] = model.trained_epochs;
  doc["best_holdout_loss"] = model.best_holdout_loss;
  doc["layers"] = json::array({matrix_to_json(model.w1), matrix_to_json(model.w2),
                               matrix_to_json(model.w3)});
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  doc["biases"] = json::array({vec(model.b1), vec(model.b2), vec(model.b3)});
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write checkpoint: " + path);
  }
  out << doc.dump() << "\n";
}

DiscriminatorModel load_discriminator(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open checkpoint: " + path);
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedFile, "not valid JSON: " + path);
  }
  if (doc.value("format", std::string{}) != "posetrans-discriminator" ||
      doc.value("version", 0) != 1) {
    throw Error(ErrorCode::SchemaError, "not a posetrans-discriminator v1 file: " + path);
  }
  DiscriminatorModel m;
  m.threshold = doc.at("threshold").get<double>();
  m.trained_epochs = doc.value("trained_epochs", 0);
  m.best_holdout_loss = doc.value("best_holdout_loss", 0.0);
  const json& layers = doc.at("layers");
  m.w1 = matrix_from_json(layers.at(0));
  m.w2 = matrix_from_json(layers.at(1));
  m.w3 = matrix_from_json(layers.at(2));
  const json& biases = doc.at("biases");
  auto vec = [](const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size())));
  };
  m.b1 = vec(biases.at(0));
  m.b2 = vec(biases.at(1));
  m.b3 = vec(biases.at(2));
  if (m.w1.cols() != kPoseFeatureDim || m.w2.cols() != m.w1.rows() ||
      m.w3.cols() != m.w2.rows() || m.w3.rows() != 1) {
    throw Error(ErrorCode::SchemaError, "layer shape chain is inconsistent");
  }
  return m;
}

}  // namespace posetrans
