#include "emtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emtrack/errors.hpp"

namespace emtrack {

std::vector<int> hungarian_square(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};
  if (cost.cols() != n) throw DimensionError("hungarian_square needs a square matrix");
  if (!cost.allFinite()) throw NumericalError("non-finite assignment cost");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> match(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) match[p[j] - 1] = j - 1;
  }
  return match;
}

Assignment solve_assignment(const Eigen::MatrixXd& c, double c_miss) {
  const int n = static_cast<int>(c.rows());
  const int m = static_cast<int>(c.cols());
  if (!c.allFinite() || !std::isfinite(c_miss)) {
    throw NumericalError("non-finite assignment cost");
  }

  // Finite stand-in for a forbidden entry, far above any reachable total.
  double scale = std::abs(c_miss);
  if (n > 0 && m > 0) scale = std::max(scale, c.cwiseAbs().maxCoeff());
  const double big = (scale + 1.0) * (n + m + 1) * 4.0;

  const int dim = n + m;
  Eigen::MatrixXd aug = Eigen::MatrixXd::Constant(dim, dim, big);
  aug.topLeftCorner(n, m) = c;
  aug.topRightCorner(n, n).setConstant(big);
  aug.topRightCorner(n, n).diagonal().setConstant(c_miss);
  aug.bottomLeftCorner(m, m).setConstant(big);
  aug.bottomLeftCorner(m, m).diagonal().setConstant(c_miss);
  aug.bottomRightCorner(m, n).setZero();

  const std::vector<int> match = hungarian_square(aug);

  Assignment out;
  for (int i = 0; i < n; ++i) {
    if (match[i] < m) {
      out.pairs.emplace_back(i, match[i]);
      out.cost += c(i, match[i]);
    } else {
      out.unmatched_rows.push_back(i);
      out.cost += c_miss;
    }
  }
  std::vector<char> col_taken(m, 0);
  for (const auto& pr : out.pairs) col_taken[pr.second] = 1;
  for (int j = 0; j < m; ++j) {
    if (!col_taken[j]) {
      out.unmatched_cols.push_back(j);
      out.cost += c_miss;
    }
  }
  return out;
}

}  // namespace emtrack
