#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emtrack {

// Top-left corner plus size, image coordinates.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 1.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  bool has_positive_size() const { return w > 0.0 && h > 0.0; }
};

struct Detection {
  BoundingBox box;
  std::string crop_id;
};

double iou(const BoundingBox& a, const BoundingBox& b);

// Geometry of a candidate association from box a (previous frame) to box b
// (current frame): height-normalized centre offsets, log size ratios, IoU.
// Throws DimensionError on non-positive box sizes.
Eigen::Matrix<double, 5, 1> pair_features(const BoundingBox& a,
                                          const BoundingBox& b);

// 5 x (prev.size() * cur.size()); column i * cur.size() + j holds
// pair_features(prev[i], cur[j]).
Eigen::MatrixXd pair_feature_matrix(const std::vector<BoundingBox>& prev,
                                    const std::vector<BoundingBox>& cur);

}  // namespace emtrack
