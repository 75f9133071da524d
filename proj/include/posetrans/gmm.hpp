#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posetrans/rng.hpp"
#include "posetrans/types.hpp"

namespace posetrans {

struct GmmConfig {
  int max_iters = 500;
  double tol = 1e-6;          // relative log-likelihood change
  double reg_epsilon = 1e-6;  // diagonal added to every covariance
  std::uint64_t seed = 0;
};

/// Full-covariance Gaussian mixture. Immutable once fitted; queries are
/// read-only and safe to run concurrently.
struct GmmModel {
  int n_components = 0;
  int dim = 0;
  Eigen::VectorXd weights;                   // alpha, sums to 1
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;  // symmetric positive definite
  double reg_epsilon = 1e-6;

  // Fit metadata.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;

  /// Precomputes Cholesky factors and log-normalizers for fast queries.
  /// Called by fit/load; must be re-run if parameters are edited by hand.
  void finalize();
  bool finalized() const { return !chol_lower_.empty(); }

  // Query-path cache (derived from the parameters above, not serialized).
  std::vector<Eigen::MatrixXd> chol_lower_;
  std::vector<double> log_norm_;  // -(d/2) log 2pi - (1/2) logdet per component
};

/// Posterior over components for one sample, plus the quantities PCM uses:
/// hard label (argmax, ties to the lowest index) and the rarity score
/// sum_n alpha_n w_n (small = rare).
struct ClusterAssignment {
  Eigen::VectorXd posterior;
  int hard_label = 0;
  double rarity = 0.0;
};

/// Flattened 2J coordinate vector for clustering.
Eigen::VectorXd normalized_pose_vector(const NormalizedPose& pose);

/// EM fit with k-means++ seeding, uniform initial weights, pooled initial
/// covariance. Converges when the relative log-likelihood change drops below
/// config.tol (or max_iters). An update that fails to improve the
/// log-likelihood is rolled back and fitting stops, so the recorded trace is
/// non-decreasing. Throws InsufficientData (fewer than 10*N samples) and
/// DegenerateComponent (a component's weight underflows twice).
GmmModel fit_gmm(const std::vector<Eigen::VectorXd>& samples, int n_components,
                 const GmmConfig& config);

GmmModel fit_gmm_poses(const std::vector<NormalizedPose>& poses, int n_components,
                       const GmmConfig& config);

/// Warm-start EM from an existing model on original + selected samples.
GmmModel refit(const GmmModel& previous, const std::vector<Eigen::VectorXd>& samples,
               const GmmConfig& config);

/// Mixture density sum_n alpha_n N(y; mu_n, sigma_n), via log-sum-exp.
double density(const GmmModel& model, const Eigen::VectorXd& sample);
double density(const GmmModel& model, const NormalizedPose& pose);

/// Posterior, hard label, and rarity. Throws AllZeroDensity when every
/// component underflows even in log space.
ClusterAssignment responsibilities(const GmmModel& model, const Eigen::VectorXd& sample);
ClusterAssignment responsibilities(const GmmModel& model, const NormalizedPose& pose);

int assign_cluster(const GmmModel& model, const Eigen::VectorXd& sample);
int assign_cluster(const GmmModel& model, const NormalizedPose& pose);

/// Index of the pool entry with the smallest rarity score (ties to the
/// lowest index). Throws EmptyPool.
std::size_t select_rarest(const GmmModel& model, const std::vector<NormalizedPose>& pool);
std::size_t select_rarest(const GmmModel& model, const std::vector<Eigen::VectorXd>& pool);

/// Versioned JSON model file (round-trips doubles exactly).
void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);

}  // namespace posetrans
