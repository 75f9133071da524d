#pragma once

// Synthetic stick-figure corpus for pipeline and acceptance tests: renders
// posed figures as rasters with part-label masks and writes a full on-disk
// dataset (COCO annotations, images, masks, limb-label map, pipeline config).

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "posetrans/dataset.hpp"
#include "posetrans/image.hpp"
#include "posetrans/rng.hpp"
#include "posetrans/types.hpp"

namespace posetrans::testsupport {

inline constexpr int kSynthClusters = 3;

struct SynthConfig {
  int count = 300;
  std::array<double, kSynthClusters> proportions{0.90, 0.07, 0.03};
  int image_size = 128;
  double angle_jitter_deg = 8.0;   // per-limb direction noise
  double root_jitter = 0.012;      // torso/head joint noise, body units
  std::uint64_t seed = 1;
};

struct SynthInstance {
  PersonInstance instance;
  Image image;        // RGB raster
  Image mask;         // part labels (1..8 limbs, 9 torso, 10 head)
  int true_cluster = 0;
};

/// Deterministic generator: cluster 0 = standing (arms down), 1 = arms out,
/// 2 = squat. Archetypes differ by limb direction angles only, close enough
/// that in-range limb transforms can move a pose across cluster boundaries.
SynthInstance make_instance(int cluster, std::int64_t image_id, std::int64_t annotation_id,
                            const SynthConfig& config, Rng& rng);

struct SynthDataset {
  Dataset dataset;
  std::vector<int> true_clusters;
  LimbLabelMap mapping;
};

/// Generates `config.count` instances with the configured cluster mix and
/// writes everything under root_dir:
///   annotations.json, images/, masks/, limb_labels.json
SynthDataset generate_corpus(const SynthConfig& config, const std::string& root_dir);

/// Writes a pipeline config pointing at a generated corpus, with `patch`
/// merged on top of the defaults. Returns the config path.
std::string write_pipeline_config(const std::string& root_dir, const nlohmann::json& patch);

/// The limb-label map used by the generator (limb id i -> label i + 1).
LimbLabelMap synth_label_map();
nlohmann::json synth_label_map_json();

}  // namespace posetrans::testsupport
