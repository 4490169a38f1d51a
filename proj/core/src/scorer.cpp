#include "emtrack/scorer.hpp"

#include <cmath>

#include "emtrack/errors.hpp"

namespace emtrack {

void ScorerParams::check() const {
  if (w1.cols() != 5 || b1.size() != w1.rows() || w2.rows() != 1 ||
      w2.cols() != w1.rows() || b2.size() != 1)
    throw DimensionError("scorer parameter shapes are inconsistent");
}

ScorerParams init_scorer(int hidden, Rng& rng) {
  if (hidden < 1) throw DimensionError("scorer needs at least one hidden unit");
  ScorerParams p;
  double s1 = 1.0 / std::sqrt(5.0);
  double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.w1.resize(hidden, 5);
  for (int i = 0; i < hidden; ++i)
    for (int j = 0; j < 5; ++j) p.w1(i, j) = rng.uniform(-s1, s1);
  p.b1.resize(hidden);
  for (int i = 0; i < hidden; ++i) p.b1(i) = rng.uniform(-s1, s1);
  p.w2.resize(1, hidden);
  for (int j = 0; j < hidden; ++j) p.w2(0, j) = rng.uniform(-s2, s2);
  p.b2.resize(1);
  p.b2(0) = rng.uniform(-s2, s2);
  return p;
}

Eigen::MatrixXd scorer_forward(const ScorerParams& p,
                               const Eigen::MatrixXd& features) {
  p.check();
  if (features.rows() != 5)
    throw DimensionError("scorer features must have 5 rows");
  Eigen::MatrixXd h =
      ((p.w1 * features).colwise() + p.b1).cwiseMax(0.0);
  return (p.w2 * h).colwise() + p.b2;
}

double score_pair(const ScorerParams& p, const BoundingBox& prev,
                  const BoundingBox& cur) {
  return scorer_forward(p, pair_features(prev, cur))(0, 0);
}

Eigen::MatrixXd score_matrix(const ScorerParams& p,
                             const std::vector<BoundingBox>& prev,
                             const std::vector<BoundingBox>& cur) {
  if (prev.empty() || cur.empty())
    throw DimensionError("score_matrix needs non-empty box lists");
  Eigen::MatrixXd flat = scorer_forward(p, pair_feature_matrix(prev, cur));
  Eigen::MatrixXd out(prev.size(), cur.size());
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < cur.size(); ++j)
      out(i, j) = flat(0, i * cur.size() + j);
  return out;
}

}  // namespace emtrack
