#include "emtrack/kalman.hpp"

#include <cmath>

#include "emtrack/errors.hpp"

namespace emtrack {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

}  // namespace

GaussianBelief kf_predict(const GaussianBelief& prior, const Eigen::MatrixXd& f,
                          const Eigen::MatrixXd& q) {
  const auto n = prior.mean.size();
  if (f.rows() != n || f.cols() != n || q.rows() != n || q.cols() != n)
    throw DimensionError("kf_predict dimension mismatch");
  GaussianBelief out;
  out.mean = f * prior.mean;
  out.cov = symmetrized(f * prior.cov * f.transpose() + q);
  return out;
}

KalmanUpdate kf_update(const GaussianBelief& predicted, const Eigen::MatrixXd& h,
                       const Eigen::MatrixXd& r, const Eigen::VectorXd& z) {
  const auto n = predicted.mean.size();
  const auto m = z.size();
  if (h.rows() != m || h.cols() != n || r.rows() != m || r.cols() != m)
    throw DimensionError("kf_update dimension mismatch");

  Eigen::MatrixXd hp = h * predicted.cov;                 // m x n
  Eigen::MatrixXd s = symmetrized(hp * h.transpose() + r);
  auto llt = spd_factor(s);
  if (llt.rcond() < 1e-12)
    throw NumericalError("singular innovation covariance");

  Eigen::VectorXd innov = z - h * predicted.mean;
  Eigen::MatrixXd gain = llt.solve(hp).transpose();       // n x m

  KalmanUpdate out;
  out.posterior.mean = predicted.mean + gain * innov;
  out.posterior.cov = symmetrized(predicted.cov - gain * hp);
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double quad = innov.dot(llt.solve(innov));
  out.log_marginal =
      -0.5 * (static_cast<double>(m) * std::log(2.0 * M_PI) + logdet + quad);
  return out;
}

GaussianBelief rts_step(const GaussianBelief& filt,
                        const GaussianBelief& pred_next,
                        const GaussianBelief& smooth_next,
                        const Eigen::MatrixXd& f) {
  // J = Sigma_f F^T (Sigma_pred)^{-1}
  Eigen::MatrixXd j = spd_solve(pred_next.cov, f * filt.cov).transpose();
  GaussianBelief out;
  out.mean = filt.mean + j * (smooth_next.mean - pred_next.mean);
  Eigen::MatrixXd dcov = smooth_next.cov - pred_next.cov;
  Eigen::MatrixXd c = filt.cov + j * dcov * j.transpose();
  out.cov = 0.5 * (c + c.transpose());
  return out;
}

std::vector<GaussianBelief> rts_smooth(
    const std::vector<GaussianBelief>& filtered,
    const std::vector<GaussianBelief>& predicted, const Eigen::MatrixXd& f) {
  if (filtered.empty() || filtered.size() != predicted.size())
    throw DimensionError("rts_smooth needs matching non-empty sequences");
  std::vector<GaussianBelief> smoothed(filtered.size());
  smoothed.back() = filtered.back();
  for (int t = static_cast<int>(filtered.size()) - 2; t >= 0; --t)
    smoothed[t] = rts_step(filtered[t], predicted[t + 1], smoothed[t + 1], f);
  return smoothed;
}

double smoothed_obs_loglik(const GaussianBelief& smoothed,
                           const Eigen::MatrixXd& h, const Eigen::MatrixXd& r,
                           const Eigen::VectorXd& z) {
  return gaussian_logpdf(z, h * smoothed.mean,
                         (h * smoothed.cov * h.transpose() + r).eval());
}

}  // namespace emtrack
