#include "posetrans/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace posetrans {

using nlohmann::json;

namespace {

// COCO skeleton edges (0-based joint indices).
const std::vector<std::pair<int, int>>& skeleton_edges() {
  static const std::vector<std::pair<int, int>> kEdges = {
      {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
      {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
      {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
  return kEdges;
}

const char* palette(int i) {
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                  "#bcbd22", "#17becf"};
  return kColors[i % 10];
}

void write_skeleton_svg(const NormalizedPose& mean_pose, int cluster, int count,
                        const std::string& path) {
  const double size = 256.0;
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path);
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"256\" height=\"256\" "
         "viewBox=\"0 0 256 256\">\n";
  out << "  <rect width=\"256\" height=\"256\" fill=\"#ffffff\"/>\n";
  out << std::fixed << std::setprecision(2);
  for (const auto& [a, b] : skeleton_edges()) {
    const Keypoint& ka = mean_pose[a];
    const Keypoint& kb = mean_pose[b];
    out << "  <line x1=\"" << ka.x * size << "\" y1=\"" << ka.y * size
        << "\" x2=\"" << kb.x * size << "\" y2=\"" << kb.y * size
        << "\" stroke=\"" << palette(cluster) << "\" stroke-width=\"3\"/>\n";
  }
  for (int j = 0; j < kNumJoints; ++j) {
    out << "  <circle cx=\"" << mean_pose[j].x * size << "\" cy=\""
        << mean_pose[j].y * size << "\" r=\"3.5\" fill=\"#333333\"/>\n";
  }
  out << "  <text x=\"8\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">"
      << "cluster " << cluster << " (" << count << " poses)</text>\n";
  out << "</svg>\n";
}

}  // namespace

std::vector<ClusterStats> cluster_statistics(const GmmModel& model,
                                             const std::vector<NormalizedPose>& poses) {
  std::vector<ClusterStats> stats(static_cast<std::size_t>(model.n_components));
  for (int k = 0; k < model.n_components; ++k) {
    stats[static_cast<std::size_t>(k)].cluster = k;
    stats[static_cast<std::size_t>(k)].weight = model.weights[k];
  }
  for (const NormalizedPose& pose : poses) {
    ++stats[static_cast<std::size_t>(assign_cluster(model, pose))].count;
  }
  for (ClusterStats& s : stats) {
    s.share = poses.empty() ? 0.0
                            : static_cast<double>(s.count) / static_cast<double>(poses.size());
  }
  std::stable_sort(stats.begin(), stats.end(), [](const ClusterStats& a, const ClusterStats& b) {
    return a.count > b.count;
  });
  return stats;
}

void write_cluster_report(const GmmModel& model,
                          const std::vector<NormalizedPose>& poses,
                          const std::string& out_dir) {
  // Hard labels and posteriors in one pass.
  std::vector<int> labels(poses.size(), 0);
  Eigen::MatrixXd posteriors(static_cast<long>(poses.size()), model.n_components);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const ClusterAssignment a = responsibilities(model, poses[i]);
    labels[i] = a.hard_label;
    posteriors.row(static_cast<long>(i)) = a.posterior.transpose();
  }

  std::vector<ClusterStats> stats(static_cast<std::size_t>(model.n_components));
  for (int k = 0; k < model.n_components; ++k) {
    stats[static_cast<std::size_t>(k)] = {k, 0, model.weights[k], 0.0};
  }
  for (int label : labels) ++stats[static_cast<std::size_t>(label)].count;
  for (ClusterStats& s : stats) {
    s.share = poses.empty() ? 0.0
                            : static_cast<double>(s.count) / static_cast<double>(poses.size());
  }
  std::stable_sort(stats.begin(), stats.end(), [](const ClusterStats& a, const ClusterStats& b) {
    return a.count > b.count;
  });

  json doc;
  doc["n_components"] = model.n_components;
  doc["total_poses"] = poses.size();
  doc["clusters"] = json::array();
  for (const ClusterStats& s : stats) {
    doc["clusters"].push_back({{"cluster", s.cluster},
                               {"count", s.count},
                               {"weight", s.weight},
                               {"share", s.share}});
  }
  {
    std::ofstream out(out_dir + "/cluster_report.json");
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot write cluster_report.json in " + out_dir);
    }
    out << doc.dump(1) << "\n";
  }

  // Mean skeleton per cluster (members' average normalized pose).
  for (int k = 0; k < model.n_components; ++k) {
    NormalizedPose mean{};
    int count = 0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (labels[i] != k) continue;
      for (int j = 0; j < kNumJoints; ++j) {
        mean[j].x += poses[i][j].x;
        mean[j].y += poses[i][j].y;
      }
      ++count;
    }
    if (count > 0) {
      for (int j = 0; j < kNumJoints; ++j) {
        mean[j].x /= count;
        mean[j].y /= count;
        mean[j].vis = Visibility::LabeledVisible;
      }
    } else {
      // No members: draw the component mean instead.
      for (int j = 0; j < kNumJoints; ++j) {
        mean[j].x = model.means[static_cast<std::size_t>(k)][2 * j];
        mean[j].y = model.means[static_cast<std::size_t>(k)][2 * j + 1];
        mean[j].vis = Visibility::LabeledVisible;
      }
    }
    write_skeleton_svg(mean, k, count,
                       out_dir + "/cluster_" + std::to_string(k) + "_skeleton.svg");
  }

  // 2-component PCA of the posterior vectors.
  const long m = posteriors.rows();
  Eigen::RowVectorXd mean_row = posteriors.colwise().mean();
  Eigen::MatrixXd centered = posteriors.rowwise() - mean_row;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / std::max<long>(1, m - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascending; take the last two columns.
  const int n = model.n_components;
  Eigen::VectorXd pc1 = eig.eigenvectors().col(n - 1);
  Eigen::VectorXd pc2 = Eigen::VectorXd::Zero(n);
  if (n >= 2) pc2 = eig.eigenvectors().col(n - 2);
  Eigen::VectorXd proj1 = centered * pc1;
  Eigen::VectorXd proj2 = centered * pc2;

  {
    std::ofstream csv(out_dir + "/cluster_scatter.csv");
    if (!csv) {
      throw Error(ErrorCode::IoError, "cannot write cluster_scatter.csv in " + out_dir);
    }
    csv << "pc1,pc2,cluster\n";
    csv << std::setprecision(10);
    for (long i = 0; i < m; ++i) {
      csv << proj1[i] << "," << proj2[i] << "," << labels[static_cast<std::size_t>(i)] << "\n";
    }
  }

  {
    const double size = 480.0, margin = 30.0;
    const double lo1 = m > 0 ? proj1.minCoeff() : -1.0, hi1 = m > 0 ? proj1.maxCoeff() : 1.0;
    const double lo2 = m > 0 ? proj2.minCoeff() : -1.0, hi2 = m > 0 ? proj2.maxCoeff() : 1.0;
    const double span1 = std::max(hi1 - lo1, 1e-9), span2 = std::max(hi2 - lo2, 1e-9);
    std::ofstream svg(out_dir + "/cluster_scatter.svg");
    if (!svg) {
      throw Error(ErrorCode::IoError, "cannot write cluster_scatter.svg in " + out_dir);
    }
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
           "viewBox=\"0 0 480 480\">\n";
    svg << "  <rect width=\"480\" height=\"480\" fill=\"#ffffff\"/>\n";
    svg << std::fixed << std::setprecision(2);
    for (long i = 0; i < m; ++i) {
      const double x = margin + (proj1[i] - lo1) / span1 * (size - 2 * margin);
      const double y = size - margin - (proj2[i] - lo2) / span2 * (size - 2 * margin);
      svg << "  <circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"2.5\" fill=\""
          << palette(labels[static_cast<std::size_t>(i)]) << "\" fill-opacity=\"0.6\"/>\n";
    }
    svg << "</svg>\n";
  }
}

}  // namespace posetrans
