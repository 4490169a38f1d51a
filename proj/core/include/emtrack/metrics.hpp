#pragma once

#include <vector>

#include "emtrack/mot_io.hpp"

namespace emtrack {

struct EvalReport {
  double mota = 0.0;
  double idf1 = 0.0;
  int idsw = 0;
  int gt_count = 0;
  int pred_count = 0;
  int matches = 0;
  int false_negatives = 0;
  int false_positives = 0;
};

// CLEAR-style evaluation. Per frame, truth and result boxes are matched by a
// min-cost assignment on -IoU with pairs below iou_threshold forbidden.
// MOTA = 1 - (FN + FP + IDSW) / GT; an identity switch is counted whenever a
// truth id is matched to a different result id than its previous match.
// IDF1 matches truth ids to result ids once, globally, maximizing the number
// of frames where the pair overlaps above the threshold.
// Empty truth scores 1.0 only against empty results.
EvalReport evaluate(const std::vector<MotRow>& truth, const std::vector<MotRow>& result,
                    double iou_threshold = 0.5);

}  // namespace emtrack
