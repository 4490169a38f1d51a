#pragma once

#include <optional>
#include <vector>

#include "emtrack/appearance.hpp"
#include "emtrack/boxes.hpp"
#include "emtrack/gaussian.hpp"
#include "emtrack/scorer.hpp"

namespace emtrack {

struct TrackerConfig {
  double kappa = 5.0;            // appearance weight
  double s_min = 0.85;           // cosine floor
  int max_misses = 60;           // a track ends once its miss streak exceeds this
  double c_miss = 4000.0;        // per-line opt-out cost in the assignment
  double sigma_pos = 1.0 / 20.0; // size-relative position noise scale
  double sigma_vel = 1.0 / 160.0;
  double new_track_conf = 0.6;   // minimum confidence to start a track
  double ema_momentum = 0.9;
  bool use_appearance = false;

  void check() const;
};

struct TrackRecord {
  int frame = 0;
  int id = 0;
  BoundingBox box;
};

// Online tracker over an 8-dim constant-velocity state per track:
// (cx, cy, w, h) and their velocities. Each step predicts every live track,
// scores predicted boxes against the frame's detections, solves the
// assignment with per-line opt-out, updates matched tracks, ages the rest,
// and starts tracks from confident unmatched detections. Only matched and
// newborn tracks emit a record; coasting tracks stay silent.
class OnlineTracker {
 public:
  OnlineTracker(ScorerParams scorer, TrackerConfig cfg,
                std::optional<AppearanceHead> head = std::nullopt);

  // embeddings run parallel to dets and are required when appearance is on
  std::vector<TrackRecord> step(int frame, const std::vector<Detection>& dets,
                                const std::vector<Eigen::VectorXd>& embeddings = {});

  int live_tracks() const { return static_cast<int>(tracks_.size()); }

 private:
  struct Track {
    int id;
    GaussianBelief belief;
    Eigen::VectorXd app;  // unit-norm head output, EMA over matches
    int misses = 0;
  };

  ScorerParams scorer_;
  TrackerConfig cfg_;
  std::optional<AppearanceHead> head_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
};

}  // namespace emtrack
