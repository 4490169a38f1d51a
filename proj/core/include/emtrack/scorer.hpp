#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emtrack/boxes.hpp"
#include "emtrack/rng.hpp"

namespace emtrack {

// Two-layer perceptron over pair geometry: 5 -> hidden (ReLU) -> 1.
struct ScorerParams {
  Eigen::MatrixXd w1;  // hidden x 5
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // 1 x hidden
  Eigen::VectorXd b2;  // 1

  int hidden() const { return static_cast<int>(w1.rows()); }
  void check() const;
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; draw order is w1 rows,
// b1, w2, b2 so a fixed seed pins every coefficient.
ScorerParams init_scorer(int hidden, Rng& rng);

double score_pair(const ScorerParams& p, const BoundingBox& prev,
                  const BoundingBox& cur);

// rows index prev, cols index cur
Eigen::MatrixXd score_matrix(const ScorerParams& p,
                             const std::vector<BoundingBox>& prev,
                             const std::vector<BoundingBox>& cur);

// MLP forward over a batch of feature columns, 1 x n output.
Eigen::MatrixXd scorer_forward(const ScorerParams& p,
                               const Eigen::MatrixXd& features);

}  // namespace emtrack
