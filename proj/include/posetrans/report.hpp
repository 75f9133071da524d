#pragma once

#include <string>
#include <vector>

#include "posetrans/gmm.hpp"
#include "posetrans/types.hpp"

namespace posetrans {

struct ClusterStats {
  int cluster = 0;
  int count = 0;
  double weight = 0.0;
  double share = 0.0;
};

/// Per-cluster counts (hard assignments), sorted by descending count.
std::vector<ClusterStats> cluster_statistics(const GmmModel& model,
                                             const std::vector<NormalizedPose>& poses);

/// Writes cluster_report.json, one mean-skeleton SVG per cluster, and a
/// 2-component PCA scatter of the posterior vectors (SVG + CSV) into out_dir.
void write_cluster_report(const GmmModel& model,
                          const std::vector<NormalizedPose>& poses,
                          const std::string& out_dir);

}  // namespace posetrans
