#pragma once

#include <Eigen/Dense>

#include "emtrack/clips.hpp"
#include "emtrack/scorer.hpp"

namespace emtrack {

// Settings shared by the loss evaluation and its gradient. The gradient
// unrolls exactly the sweeps the forward pass ran, so both sides must see the
// same floor / tolerance / cap.
struct LossConfig {
  int sinkhorn_floor = 20;
  double sinkhorn_tol = 1e-14;
  int sinkhorn_cap = 2000;
  double sigma_q = 150.0;    // process noise variance per state dimension
  double sigma_r = 5.0;      // observation noise variance
  double sigma_init = 300.0; // initial state variance
};

// Negative sum over frames of smoothed observation log-likelihood for one
// clip: score matrices -> soft permutations -> lifted Kalman filter ->
// smoother -> per-frame marginals. Forward-only evaluation on the concrete
// Kalman/Sinkhorn routines.
double association_loss(const ScorerParams& params, const DetectionClip& clip,
                        const LossConfig& cfg);

struct LossGrad {
  double loss = 0.0;
  ScorerParams grad;  // same shapes as the parameters
};

// Same quantity via the reverse-mode tape, plus d loss / d params.
LossGrad association_loss_grad(const ScorerParams& params,
                               const DetectionClip& clip,
                               const LossConfig& cfg);

struct FdReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int coords = 0;
};

// Central finite differences of association_loss against the tape gradient,
// coordinate by coordinate over every parameter. Relative error per
// coordinate is |fd - ad| / max(1e-8, |fd| + |ad|).
FdReport fd_check(const ScorerParams& params, const DetectionClip& clip,
                  const LossConfig& cfg, double eps = 1e-5);

// p ⊗ b
Eigen::MatrixXd kron_dense(const Eigen::MatrixXd& p, const Eigen::MatrixXd& b);

// Soft transport composed across the whole clip, exactly as the loss builds
// it: rows index the last frame's detections, columns the first frame's.
Eigen::MatrixXd final_transport(const ScorerParams& params, const DetectionClip& clip,
                                const LossConfig& cfg);

}  // namespace emtrack
