#pragma once

#include <Eigen/Dense>

namespace emtrack {

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }

  // Throws NumericalError if cov is asymmetric beyond tol or has an
  // eigenvalue below -tol * trace.
  void validate(double tol = 1e-9) const;
};

// Cholesky factorization with a single jitter retry (1e-9 * trace / dim added
// to the diagonal). Throws NumericalError if the matrix still fails.
Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& a);

// a^{-1} * b via spd_factor
Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& cov);

}  // namespace emtrack
