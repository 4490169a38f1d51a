#include "emtrack/gaussian.hpp"

#include <cmath>

#include "emtrack/errors.hpp"

namespace emtrack {

void GaussianBelief::validate(double tol) const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw DimensionError("belief covariance does not match mean dimension");
  double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw NumericalError("belief covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov,
                                                    Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol * std::max(1.0, cov.trace()))
    throw NumericalError("belief covariance has a negative eigenvalue");
}

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  double jitter = 1e-9 * a.trace() / static_cast<double>(a.rows());
  Eigen::MatrixXd aj = a;
  aj.diagonal().array() += jitter;
  llt.compute(aj);
  if (llt.info() != Eigen::Success)
    throw NumericalError("matrix is not positive definite");
  return llt;
}

Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows())
    throw DimensionError("spd_solve dimension mismatch");
  return spd_factor(a).solve(b);
}

double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& cov) {
  const auto n = x.size();
  if (mean.size() != n || cov.rows() != n || cov.cols() != n)
    throw DimensionError("gaussian_logpdf dimension mismatch");
  auto llt = spd_factor(cov);
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  Eigen::VectorXd d = x - mean;
  double quad = d.dot(llt.solve(d));
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logdet + quad);
}

}  // namespace emtrack
