#pragma once

#include <Eigen/Dense>

namespace emtrack {

// Doubly stochastic relaxation of a permutation, produced by
// sinkhorn_normalize. Row i weights how strongly current-frame detection slots
// map onto previous-frame slots.
struct SoftPermutation {
  Eigen::MatrixXd a;
  int sweeps = 0;        // alternating log-space normalizations applied
  int polish_steps = 0;  // Newton corrections applied after the sweeps
  double max_dev = 0.0;  // final max |row sum - 1| / |col sum - 1|

  int size() const { return static_cast<int>(a.rows()); }
};

struct SinkhornSweeps {
  Eigen::MatrixXd log_a;
  int sweeps = 0;
  double max_dev = 0.0;
};

double max_ds_deviation(const Eigen::MatrixXd& a);

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& l);
Eigen::RowVectorXd col_logsumexp(const Eigen::MatrixXd& l);

// Alternating row/column normalization of exp(s) in log space. Runs at least
// min_sweeps full sweeps, then continues until the doubly stochastic deviation
// drops to tol or max_sweeps is reached. This exact loop is what the training
// gradient unrolls.
SinkhornSweeps sinkhorn_log_sweeps(const Eigen::MatrixXd& s, int min_sweeps,
                                   double tol, int max_sweeps);

// iters sweeps as a floor, then Newton balancing on the dual potentials down
// to machine-level deviation. Alternating normalization alone has a linear
// rate that can need millions of sweeps on adversarial inputs; the Newton
// phase reaches the same fixed point in a handful of O(K^3) solves.
SoftPermutation sinkhorn_normalize(const Eigen::MatrixXd& s, int iters = 20);

// P_t = A_t^T P_{t-1}. Rows of the result index current-frame detections.
Eigen::MatrixXd compose_transport(const Eigen::MatrixXd& a_cur,
                                  const Eigen::MatrixXd& p_prev);

}  // namespace emtrack
