#include "posetrans/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace posetrans {

using nlohmann::json;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kWeightFloor = 1e-8;

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& cov, double reg, int component) {
  Eigen::MatrixXd work = cov;
  double bump = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    bump = bump == 0.0 ? std::max(reg, 1e-12) : bump * 10.0;
    work = cov + bump * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  }
  throw Error(ErrorCode::DegenerateComponent,
              "covariance of component " + std::to_string(component) +
                  " is not positive definite");
}

/// Per-component log densities for one sample.
void component_log_densities(const GmmModel& model, const Eigen::VectorXd& x,
                             Eigen::VectorXd& out) {
  for (int k = 0; k < model.n_components; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const Eigen::VectorXd diff = x - model.means[ku];
    const Eigen::VectorXd solved =
        model.chol_lower_[ku].triangularView<Eigen::Lower>().solve(diff);
    out[k] = model.log_norm_[ku] - 0.5 * solved.squaredNorm();
  }
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

struct EStepResult {
  Eigen::MatrixXd resp;  // samples x components
  double log_likelihood = 0.0;
};

EStepResult e_step(const GmmModel& model, const std::vector<Eigen::VectorXd>& samples) {
  const int m = static_cast<int>(samples.size());
  EStepResult result;
  result.resp.resize(m, model.n_components);
  Eigen::VectorXd logs(model.n_components);
  for (int i = 0; i < m; ++i) {
    component_log_densities(model, samples[static_cast<std::size_t>(i)], logs);
    for (int k = 0; k < model.n_components; ++k) {
      logs[k] += std::log(model.weights[k]);
    }
    const double lse = log_sum_exp(logs);
    for (int k = 0; k < model.n_components; ++k) {
      result.resp(i, k) = std::exp(logs[k] - lse);
    }
    result.log_likelihood += lse;
  }
  return result;
}

void m_step(const std::vector<Eigen::VectorXd>& samples, const Eigen::MatrixXd& resp,
            double reg_epsilon, GmmModel& model) {
  const int m = static_cast<int>(samples.size());
  const int d = model.dim;
  for (int k = 0; k < model.n_components; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double nk = resp.col(k).sum();
    model.weights[k] = nk / m;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < m; ++i) {
      mean += resp(i, k) * samples[static_cast<std::size_t>(i)];
    }
    mean /= nk;
    Eigen::MatrixXd centered(d, m);
    for (int i = 0; i < m; ++i) {
      centered.col(i) =
          std::sqrt(resp(i, k)) * (samples[static_cast<std::size_t>(i)] - mean);
    }
    Eigen::MatrixXd cov = (centered * centered.transpose()) / nk;
    cov.diagonal().array() += reg_epsilon;
    model.means[ku] = std::move(mean);
    model.covariances[ku] = std::move(cov);
  }
}

Eigen::MatrixXd pooled_covariance(const std::vector<Eigen::VectorXd>& samples,
                                  double reg_epsilon) {
  const int d = static_cast<int>(samples.front().size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : samples) {
    const Eigen::VectorXd diff = x - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(diff);
  }
  cov = Eigen::MatrixXd(cov.selfadjointView<Eigen::Lower>());
  cov /= static_cast<double>(samples.size());
  cov.diagonal().array() += reg_epsilon;
  return cov;
}

/// k-means++ seeding: spread initial means proportionally to squared distance
/// from the nearest already-chosen seed.
std::vector<Eigen::VectorXd> kmeanspp_means(const std::vector<Eigen::VectorXd>& samples,
                                            int n_components, Rng& rng) {
  const std::size_t m = samples.size();
  std::vector<Eigen::VectorXd> means;
  means.reserve(static_cast<std::size_t>(n_components));
  means.push_back(samples[rng.uniform_int(m)]);
  std::vector<double> dist2(m, 0.0);
  for (int k = 1; k < n_components; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& mu : means) {
        best = std::min(best, (samples[i] - mu).squaredNorm());
      }
      dist2[i] = best;
      total += best;
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = rng.uniform_int(m);
    }
    means.push_back(samples[chosen]);
  }
  return means;
}

void check_samples(const std::vector<Eigen::VectorXd>& samples, int n_components) {
  if (n_components < 1) {
    throw Error(ErrorCode::InvalidArgument, "n_components must be >= 1");
  }
  if (samples.size() < static_cast<std::size_t>(10 * n_components)) {
    throw Error(ErrorCode::InsufficientData,
                "need at least " + std::to_string(10 * n_components) +
                    " samples, got " + std::to_string(samples.size()));
  }
  const auto d = samples.front().size();
  for (const auto& x : samples) {
    if (x.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "samples have mixed dimensions");
    }
  }
}

/// Shared EM loop. The model comes in with valid initial parameters.
/// A candidate update that lowers the log-likelihood is rolled back, so the
/// recorded trace is non-decreasing (the regularized M-step is not exactly
/// the Q maximizer, which can otherwise shave off a hair near convergence).
void run_em(const std::vector<Eigen::VectorXd>& samples, const GmmConfig& config,
            Rng& rng, GmmModel& model) {
  model.log_likelihood_trace.clear();
  model.iterations = 0;
  model.converged = false;
  std::vector<int> reseeds(static_cast<std::size_t>(model.n_components), 0);

  model.finalize();
  EStepResult cur = e_step(model, samples);
  model.log_likelihood_trace.push_back(cur.log_likelihood);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    GmmModel candidate = model;
    m_step(samples, cur.resp, config.reg_epsilon, candidate);

    // Reseed components whose weight underflowed; once per component.
    bool reseeded = false;
    for (int k = 0; k < candidate.n_components; ++k) {
      if (candidate.weights[k] >= kWeightFloor) continue;
      if (++reseeds[static_cast<std::size_t>(k)] > 1) {
        throw Error(ErrorCode::DegenerateComponent,
                    "component " + std::to_string(k) + " underflowed twice");
      }
      candidate.means[static_cast<std::size_t>(k)] =
          samples[rng.uniform_int(samples.size())];
      candidate.covariances[static_cast<std::size_t>(k)] =
          pooled_covariance(samples, config.reg_epsilon);
      candidate.weights[k] = 1.0 / candidate.n_components;
      reseeded = true;
    }
    candidate.weights /= candidate.weights.sum();
    candidate.finalize();

    EStepResult next = e_step(candidate, samples);
    if (reseeded) {
      // A reseed restarts the run; the trace covers the final uninterrupted EM.
      model = std::move(candidate);
      cur = std::move(next);
      model.log_likelihood_trace.assign(1, cur.log_likelihood);
      continue;
    }

    const double prev_ll = cur.log_likelihood;
    if (next.log_likelihood < prev_ll) {
      model.converged = true;
      break;
    }
    model = std::move(candidate);
    cur = std::move(next);
    model.log_likelihood_trace.push_back(cur.log_likelihood);
    ++model.iterations;

    const double rel = std::abs(cur.log_likelihood - prev_ll) /
                       (std::abs(cur.log_likelihood) + 1e-12);
    if (rel < config.tol) {
      model.converged = true;
      break;
    }
  }
}

}  // namespace

Eigen::VectorXd normalized_pose_vector(const NormalizedPose& pose) {
  Eigen::VectorXd v(2 * kNumJoints);
  const auto coords = pose.coords();
  for (int i = 0; i < 2 * kNumJoints; ++i) v[i] = coords[static_cast<std::size_t>(i)];
  return v;
}

void GmmModel::finalize() {
  chol_lower_.clear();
  log_norm_.clear();
  chol_lower_.reserve(static_cast<std::size_t>(n_components));
  log_norm_.reserve(static_cast<std::size_t>(n_components));
  for (int k = 0; k < n_components; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    Eigen::MatrixXd lower = cholesky_lower(covariances[ku], reg_epsilon, k);
    double log_det = 0.0;
    for (int i = 0; i < dim; ++i) log_det += 2.0 * std::log(lower(i, i));
    log_norm_.push_back(-0.5 * (dim * kLog2Pi + log_det));
    chol_lower_.push_back(std::move(lower));
  }
}

GmmModel fit_gmm(const std::vector<Eigen::VectorXd>& samples, int n_components,
                 const GmmConfig& config) {
  check_samples(samples, n_components);
  const int d = static_cast<int>(samples.front().size());

  Rng rng(Rng::derive(config.seed, 0x6D6D67ULL));
  GmmModel model;
  model.n_components = n_components;
  model.dim = d;
  model.reg_epsilon = config.reg_epsilon;
  model.weights = Eigen::VectorXd::Constant(n_components, 1.0 / n_components);
  model.means = kmeanspp_means(samples, n_components, rng);
  model.covariances.assign(static_cast<std::size_t>(n_components),
                           pooled_covariance(samples, config.reg_epsilon));

  run_em(samples, config, rng, model);
  return model;
}

GmmModel fit_gmm_poses(const std::vector<NormalizedPose>& poses, int n_components,
                       const GmmConfig& config) {
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(poses.size());
  for (const NormalizedPose& p : poses) samples.push_back(normalized_pose_vector(p));
  return fit_gmm(samples, n_components, config);
}

GmmModel refit(const GmmModel& previous, const std::vector<Eigen::VectorXd>& samples,
               const GmmConfig& config) {
  check_samples(samples, previous.n_components);
  if (static_cast<int>(samples.front().size()) != previous.dim) {
    throw Error(ErrorCode::DimensionMismatch, "refit samples do not match model dim");
  }
  Rng rng(Rng::derive(config.seed, 0x726566ULL));
  GmmModel model = previous;
  model.reg_epsilon = config.reg_epsilon;
  run_em(samples, config, rng, model);
  return model;
}

namespace {

const GmmModel& require_finalized(const GmmModel& model) {
  if (!model.finalized()) {
    throw Error(ErrorCode::InvalidArgument, "model is not finalized; call finalize()");
  }
  return model;
}

}  // namespace

double density(const GmmModel& model, const Eigen::VectorXd& sample) {
  require_finalized(model);
  if (sample.size() != model.dim) {
    throw Error(ErrorCode::DimensionMismatch, "sample dimension mismatch");
  }
  Eigen::VectorXd logs(model.n_components);
  component_log_densities(model, sample, logs);
  for (int k = 0; k < model.n_components; ++k) logs[k] += std::log(model.weights[k]);
  return std::exp(log_sum_exp(logs));
}

double density(const GmmModel& model, const NormalizedPose& pose) {
  return density(model, normalized_pose_vector(pose));
}

ClusterAssignment responsibilities(const GmmModel& model, const Eigen::VectorXd& sample) {
  require_finalized(model);
  if (sample.size() != model.dim) {
    throw Error(ErrorCode::DimensionMismatch, "sample dimension mismatch");
  }
  Eigen::VectorXd logs(model.n_components);
  component_log_densities(model, sample, logs);
  for (int k = 0; k < model.n_components; ++k) logs[k] += std::log(model.weights[k]);
  const double lse = log_sum_exp(logs);
  if (!std::isfinite(lse)) {
    throw Error(ErrorCode::AllZeroDensity, "all components underflow for this sample");
  }
  ClusterAssignment out;
  out.posterior.resize(model.n_components);
  for (int k = 0; k < model.n_components; ++k) {
    out.posterior[k] = std::exp(logs[k] - lse);
  }
  out.hard_label = 0;
  for (int k = 1; k < model.n_components; ++k) {
    if (out.posterior[k] > out.posterior[out.hard_label]) out.hard_label = k;
  }
  out.rarity = model.weights.dot(out.posterior);
  return out;
}

ClusterAssignment responsibilities(const GmmModel& model, const NormalizedPose& pose) {
  return responsibilities(model, normalized_pose_vector(pose));
}

int assign_cluster(const GmmModel& model, const Eigen::VectorXd& sample) {
  return responsibilities(model, sample).hard_label;
}

int assign_cluster(const GmmModel& model, const NormalizedPose& pose) {
  return responsibilities(model, pose).hard_label;
}

std::size_t select_rarest(const GmmModel& model, const std::vector<Eigen::VectorXd>& pool) {
  if (pool.empty()) {
    throw Error(ErrorCode::EmptyPool, "candidate pool is empty");
  }
  std::size_t best = 0;
  double best_rarity = responsibilities(model, pool[0]).rarity;
  for (std::size_t t = 1; t < pool.size(); ++t) {
    const double r = responsibilities(model, pool[t]).rarity;
    if (r < best_rarity) {
      best_rarity = r;
      best = t;
    }
  }
  return best;
}

std::size_t select_rarest(const GmmModel& model, const std::vector<NormalizedPose>& pool) {
  std::vector<Eigen::VectorXd> vecs;
  vecs.reserve(pool.size());
  for (const NormalizedPose& p : pool) vecs.push_back(normalized_pose_vector(p));
  return select_rarest(model, vecs);
}

void save_gmm(const GmmModel& model, const std::string& path) {
  json doc;
  doc["format"] = "posetrans-gmm";
  doc["version"] = 1;
  doc["n_components"] = model.n_components;
  doc["dim"] = model.dim;
  doc["reg_epsilon"] = model.reg_epsilon;
  doc["weights"] = std::vector<double>(model.weights.data(),
                                       model.weights.data() + model.weights.size());
  json means = json::array();
  for (const auto& mu : model.means) {
    means.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
  }
  doc["means"] = std::move(means);
  json covs = json::array();
  for (const auto& cov : model.covariances) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(cov.size()));
    for (int r = 0; r < cov.rows(); ++r) {
      for (int c = 0; c < cov.cols(); ++c) flat.push_back(cov(r, c));
    }
    covs.push_back(std::move(flat));
  }
  doc["covariances"] = std::move(covs);
  doc["fit"] = {{"iterations", model.iterations},
                {"converged", model.converged},
                {"log_likelihood_trace", model.log_likelihood_trace}};
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write model file: " + path);
  }
  out << doc.dump() << "\n";
}

GmmModel load_gmm(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open model file: " + path);
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedFile, "not valid JSON: " + path);
  }
  if (doc.value("format", std::string{}) != "posetrans-gmm" || doc.value("version", 0) != 1) {
    throw Error(ErrorCode::SchemaError, "not a posetrans-gmm v1 file: " + path);
  }
  GmmModel model;
  model.n_components = doc.at("n_components").get<int>();
  model.dim = doc.at("dim").get<int>();
  model.reg_epsilon = doc.at("reg_epsilon").get<double>();
  const auto weights = doc.at("weights").get<std::vector<double>>();
  if (static_cast<int>(weights.size()) != model.n_components) {
    throw Error(ErrorCode::SchemaError, "weight count mismatch in " + path);
  }
  model.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                    static_cast<int>(weights.size()));
  for (const json& mu_json : doc.at("means")) {
    const auto mu = mu_json.get<std::vector<double>>();
    if (static_cast<int>(mu.size()) != model.dim) {
      throw Error(ErrorCode::SchemaError, "mean dimension mismatch in " + path);
    }
    model.means.emplace_back(
        Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<int>(mu.size())));
  }
  for (const json& cov_json : doc.at("covariances")) {
    const auto flat = cov_json.get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != model.dim * model.dim) {
      throw Error(ErrorCode::SchemaError, "covariance size mismatch in " + path);
    }
    Eigen::MatrixXd cov(model.dim, model.dim);
    for (int r = 0; r < model.dim; ++r) {
      for (int c = 0; c < model.dim; ++c) {
        cov(r, c) = flat[static_cast<std::size_t>(r * model.dim + c)];
      }
    }
    model.covariances.push_back(std::move(cov));
  }
  if (static_cast<int>(model.means.size()) != model.n_components ||
      static_cast<int>(model.covariances.size()) != model.n_components) {
    throw Error(ErrorCode::SchemaError, "component count mismatch in " + path);
  }
  if (doc.contains("fit")) {
    const json& fit = doc.at("fit");
    model.iterations = fit.value("iterations", 0);
    model.converged = fit.value("converged", false);
    if (fit.contains("log_likelihood_trace")) {
      model.log_likelihood_trace = fit.at("log_likelihood_trace").get<std::vector<double>>();
    }
  }
  model.finalize();
  return model;
}

}  // namespace posetrans
