#pragma once

#include <string>
#include <vector>

#include "emtrack/boxes.hpp"

namespace emtrack {

// T frames of exactly K detections each. Entries without a crop id are boxes
// synthesized by gap filling.
struct DetectionClip {
  int k = 0;
  int t = 0;
  std::vector<std::vector<Detection>> frames;  // t outer, k inner
  std::string sequence;
  int first_frame = 1;

  void check() const;
};

struct PreprocessOptions {
  int clip_len = 10;
  double conf_threshold = 0.5;
  double fill_iou_gate = 0.05;  // minimum overlap to claim a detection
};

struct PreprocessResult {
  std::vector<DetectionClip> clips;
  std::vector<std::string> warnings;
};

// Cuts a detection sequence into non-overlapping fixed-length clips with a
// constant number of objects per frame. K is the count of above-threshold
// detections in the clip's first frame; in later frames each slot greedily
// claims the best-overlapping detection against its constant-velocity
// extrapolation, unclaimed slots keep the extrapolated box, and unclaimed
// detections are dropped. Empty first frames skip the window with a warning;
// a trailing partial window is dropped.
PreprocessResult preprocess_clips(
    const std::vector<std::vector<Detection>>& frames, int first_frame,
    const std::string& sequence, const PreprocessOptions& opt);

}  // namespace emtrack
