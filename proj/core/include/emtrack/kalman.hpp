#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emtrack/gaussian.hpp"

namespace emtrack {

struct KalmanUpdate {
  GaussianBelief posterior;
  double log_marginal = 0.0;  // log N(z; H mu, H Sigma H^T + R)
};

GaussianBelief kf_predict(const GaussianBelief& prior, const Eigen::MatrixXd& f,
                          const Eigen::MatrixXd& q);

// Throws NumericalError when the innovation covariance has condition > 1e12.
KalmanUpdate kf_update(const GaussianBelief& predicted, const Eigen::MatrixXd& h,
                       const Eigen::MatrixXd& r, const Eigen::VectorXd& z);

// One backward smoothing step. filt is the filtered belief at t, pred_next and
// smooth_next are the predicted and smoothed beliefs at t+1.
GaussianBelief rts_step(const GaussianBelief& filt,
                        const GaussianBelief& pred_next,
                        const GaussianBelief& smooth_next,
                        const Eigen::MatrixXd& f);

// Full backward pass. predicted[t] conditions on observations before t, so
// predicted[0] is the initial prior and filtered[t] conditions on z_{1..t}.
std::vector<GaussianBelief> rts_smooth(
    const std::vector<GaussianBelief>& filtered,
    const std::vector<GaussianBelief>& predicted, const Eigen::MatrixXd& f);

double smoothed_obs_loglik(const GaussianBelief& smoothed,
                           const Eigen::MatrixXd& h, const Eigen::MatrixXd& r,
                           const Eigen::VectorXd& z);

}  // namespace emtrack
