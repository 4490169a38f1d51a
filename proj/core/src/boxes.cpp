#include "emtrack/boxes.hpp"

#include <algorithm>
#include <cmath>

#include "emtrack/errors.hpp"

namespace emtrack {

double iou(const BoundingBox& a, const BoundingBox& b) {
  double x1 = std::max(a.x, b.x);
  double y1 = std::max(a.y, b.y);
  double x2 = std::min(a.x + a.w, b.x + b.w);
  double y2 = std::min(a.y + a.h, b.y + b.h);
  double inter = std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1);
  double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Eigen::Matrix<double, 5, 1> pair_features(const BoundingBox& a,
                                          const BoundingBox& b) {
  if (!a.has_positive_size() || !b.has_positive_size())
    throw DimensionError("pair_features requires positive box sizes");
  double hsum = a.h + b.h;
  Eigen::Matrix<double, 5, 1> f;
  f(0) = 2.0 * (b.cx() - a.cx()) / hsum;
  f(1) = 2.0 * (b.cy() - a.cy()) / hsum;
  f(2) = std::log(a.h / b.h);
  f(3) = std::log(a.w / b.w);
  f(4) = iou(a, b);
  return f;
}

Eigen::MatrixXd pair_feature_matrix(const std::vector<BoundingBox>& prev,
                                    const std::vector<BoundingBox>& cur) {
  Eigen::MatrixXd out(5, prev.size() * cur.size());
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < cur.size(); ++j)
      out.col(i * cur.size() + j) = pair_features(prev[i], cur[j]);
  return out;
}

}  // namespace emtrack
