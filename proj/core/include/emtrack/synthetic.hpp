#pragma once

#include <cstdint>
#include <vector>

#include "emtrack/mot_io.hpp"

namespace emtrack {

struct SceneConfig {
  int k = 5;                  // objects
  int t = 50;                 // frames
  double width = 800.0;
  double height = 600.0;
  double miss_rate = 0.0;     // [0,1) per-detection drop probability
  double fp_rate = 0.0;       // [0,1) expected false positives per frame is k * fp_rate
  double center_noise = 0.0;  // px, gaussian on box centers
  double size_noise = 0.0;    // px, gaussian on box sizes
  bool crossing = false;      // route all paths through the scene center
  int gap_len = 0;            // when > 0, every object is occluded once for this many frames
  int embed_dim = 32;
  double embed_noise = 0.05;
  std::uint64_t seed = 0;

  void check() const;  // throws ConfigError on out-of-range values or infeasible bounds
};

struct SyntheticScene {
  std::vector<MotRow> truth;       // ids are 1-based object indices, conf 1
  std::vector<MotRow> detections;  // id -1
  std::vector<EmbeddingEntry> embeddings;      // keyed "<frame>:<index within frame>"
  std::vector<std::vector<int>> det_identity;  // [frame-1][index] -> truth id, -1 for a false positive
};

// Constant-velocity objects with optional crossings, occlusion gaps, gaussian
// detection noise, per-detection misses, and uniform false positives. Every
// identity gets a distinct unit embedding; detections observe it with noise.
// Deterministic in the config, including the seed.
SyntheticScene generate_scene(const SceneConfig& cfg);

}  // namespace emtrack
