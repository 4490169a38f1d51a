#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace emtrack {

// Minimum-cost perfect matching on a square cost matrix, O(n^3) shortest
// augmenting paths with dual potentials. Returns row -> column.
std::vector<int> hungarian_square(const Eigen::MatrixXd& cost);

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), row-sorted
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double cost = 0.0;  // sum of matched entries plus c_miss per unmatched line
};

// Matching with opt-out: C is augmented so every row and column can instead
// pay c_miss to stay unmatched. The auxiliary block pairing an unmatched row
// slot with an unmatched column slot costs nothing.
Assignment solve_assignment(const Eigen::MatrixXd& c, double c_miss);

}  // namespace emtrack
