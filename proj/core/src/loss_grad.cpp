#include "emtrack/loss_grad.hpp"

#include <cmath>
#include <vector>

#include "emtrack/autodiff.hpp"
#include "emtrack/errors.hpp"
#include "emtrack/kalman.hpp"
#include "emtrack/sinkhorn.hpp"

namespace emtrack {

namespace {

Eigen::MatrixXd cv_block() {
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(4, 4);
  f(0, 2) = f(1, 3) = 1.0;
  return f;
}

Eigen::MatrixXd obs_block() {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 4);
  h(0, 0) = h(1, 1) = 1.0;
  return h;
}

std::vector<BoundingBox> frame_boxes(const DetectionClip& clip, int t) {
  std::vector<BoundingBox> out;
  out.reserve(clip.k);
  for (const auto& d : clip.frames[t]) out.push_back(d.box);
  return out;
}

Eigen::VectorXd frame_observation(const DetectionClip& clip, int t) {
  Eigen::VectorXd z(2 * clip.k);
  for (int j = 0; j < clip.k; ++j) {
    z(2 * j) = clip.frames[t][j].box.cx();
    z(2 * j + 1) = clip.frames[t][j].box.cy();
  }
  return z;
}

Eigen::VectorXd initial_mean(const DetectionClip& clip) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(4 * clip.k);
  for (int j = 0; j < clip.k; ++j) {
    mu(4 * j) = clip.frames[0][j].box.cx();
    mu(4 * j + 1) = clip.frames[0][j].box.cy();
  }
  return mu;
}

// b2 shifts every entry of S by the same amount, which the first row
// normalization inside sinkhorn removes identically. Leaving it out keeps the
// loss bit-for-bit invariant to b2, so its gradient is exactly zero.
Eigen::MatrixXd scores_no_bias(const ScorerParams& p,
                               const std::vector<BoundingBox>& prev,
                               const std::vector<BoundingBox>& cur) {
  const int nr = static_cast<int>(prev.size());
  const int nc = static_cast<int>(cur.size());
  Eigen::MatrixXd f = pair_feature_matrix(prev, cur);
  Eigen::MatrixXd h = ((p.w1 * f).colwise() + p.b1).cwiseMax(0.0);
  Eigen::MatrixXd flat = p.w2 * h;
  Eigen::MatrixXd s(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) s(i, j) = flat(0, i * nc + j);
  return s;
}

}  // namespace

Eigen::MatrixXd kron_dense(const Eigen::MatrixXd& p, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(p.rows() * b.rows(), p.cols() * b.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = p(i, j) * b;
  return out;
}

double association_loss(const ScorerParams& params, const DetectionClip& clip,
                        const LossConfig& cfg) {
  clip.check();
  params.check();
  const int k = clip.k;
  const int t_len = clip.t;

  Eigen::MatrixXd f = kron_dense(Eigen::MatrixXd::Identity(k, k), cv_block());
  Eigen::MatrixXd q =
      cfg.sigma_q * Eigen::MatrixXd::Identity(4 * k, 4 * k);
  Eigen::MatrixXd r =
      cfg.sigma_r * Eigen::MatrixXd::Identity(2 * k, 2 * k);
  Eigen::MatrixXd h_base =
      kron_dense(Eigen::MatrixXd::Identity(k, k), obs_block());

  GaussianBelief prior;
  prior.mean = initial_mean(clip);
  prior.cov = cfg.sigma_init * Eigen::MatrixXd::Identity(4 * k, 4 * k);

  std::vector<GaussianBelief> predicted(t_len), filtered(t_len);
  std::vector<Eigen::MatrixXd> h_eff(t_len);
  std::vector<Eigen::VectorXd> zs(t_len);

  predicted[0] = prior;
  filtered[0] = prior;  // first state is pinned to the first observations
  h_eff[0] = h_base;
  zs[0] = frame_observation(clip, 0);

  Eigen::MatrixXd perm = Eigen::MatrixXd::Identity(k, k);
  for (int t = 1; t < t_len; ++t) {
    Eigen::MatrixXd s =
        scores_no_bias(params, frame_boxes(clip, t - 1), frame_boxes(clip, t));
    auto sw = sinkhorn_log_sweeps(s, cfg.sinkhorn_floor, cfg.sinkhorn_tol,
                                  cfg.sinkhorn_cap);
    Eigen::MatrixXd a = sw.log_a.array().exp().matrix();
    perm = compose_transport(a, perm);
    h_eff[t] = kron_dense(perm, obs_block());
    zs[t] = frame_observation(clip, t);

    predicted[t] = kf_predict(filtered[t - 1], f, q);
    filtered[t] = kf_update(predicted[t], h_eff[t], r, zs[t]).posterior;
  }

  auto smoothed = rts_smooth(filtered, predicted, f);
  double loss = 0.0;
  for (int t = 0; t < t_len; ++t)
    loss -= smoothed_obs_loglik(smoothed[t], h_eff[t], r, zs[t]);
  return loss;
}

namespace {

// identical outer loop to sinkhorn_log_sweeps, recorded on the tape
ad::Var sinkhorn_tape(ad::Tape& tp, ad::Var s, const LossConfig& cfg) {
  ad::Var l = s;
  int sweeps = 0;
  while (sweeps < cfg.sinkhorn_cap) {
    l = tp.sub_colvec(l, tp.row_lse(l));
    l = tp.sub_rowvec(l, tp.col_lse(l));
    ++sweeps;
    if (sweeps >= cfg.sinkhorn_floor) {
      double dev = max_ds_deviation(tp.value(l).array().exp().matrix());
      if (dev <= cfg.sinkhorn_tol) break;
    }
  }
  return tp.exp(l);
}

}  // namespace

LossGrad association_loss_grad(const ScorerParams& params,
                               const DetectionClip& clip,
                               const LossConfig& cfg) {
  clip.check();
  params.check();
  const int k = clip.k;
  const int t_len = clip.t;

  ad::Tape tp;
  ad::Var w1 = tp.leaf(params.w1);
  ad::Var b1 = tp.leaf(params.b1);
  ad::Var w2 = tp.leaf(params.w2);

  Eigen::MatrixXd f_mat =
      kron_dense(Eigen::MatrixXd::Identity(k, k), cv_block());
  ad::Var f = tp.constant(f_mat);
  ad::Var ft = tp.constant(f_mat.transpose());
  ad::Var q = tp.constant(cfg.sigma_q *
                          Eigen::MatrixXd::Identity(4 * k, 4 * k));
  ad::Var r = tp.constant(cfg.sigma_r *
                          Eigen::MatrixXd::Identity(2 * k, 2 * k));
  const Eigen::MatrixXd h_block = obs_block();

  std::vector<ad::Var> zs(t_len), h_eff(t_len);
  std::vector<ad::Var> pred_mu(t_len), pred_sig(t_len), filt_mu(t_len),
      filt_sig(t_len);

  for (int t = 0; t < t_len; ++t) {
    Eigen::VectorXd z = frame_observation(clip, t);
    zs[t] = tp.constant(z);
  }
  h_eff[0] =
      tp.constant(kron_dense(Eigen::MatrixXd::Identity(k, k), h_block));

  pred_mu[0] = tp.constant(initial_mean(clip));
  pred_sig[0] = tp.constant(cfg.sigma_init *
                            Eigen::MatrixXd::Identity(4 * k, 4 * k));
  filt_mu[0] = pred_mu[0];
  filt_sig[0] = pred_sig[0];

  ad::Var perm = tp.constant(Eigen::MatrixXd::Identity(k, k));
  for (int t = 1; t < t_len; ++t) {
    ad::Var feats = tp.constant(
        pair_feature_matrix(frame_boxes(clip, t - 1), frame_boxes(clip, t)));
    ad::Var hidden = tp.relu(tp.add_colvec(tp.matmul(w1, feats), b1));
    ad::Var flat = tp.matmul(w2, hidden);  // output bias cancels, see above
    ad::Var s = tp.reshape(flat, k, k);
    ad::Var a = sinkhorn_tape(tp, s, cfg);
    perm = tp.matmul(tp.transpose(a), perm);
    h_eff[t] = tp.kron_const(perm, h_block);

    pred_mu[t] = tp.matmul(f, filt_mu[t - 1]);
    pred_sig[t] = tp.symmetrize(
        tp.add(tp.matmul(tp.matmul(f, filt_sig[t - 1]), ft), q));

    ad::Var hs = tp.matmul(h_eff[t], pred_sig[t]);
    ad::Var s_cov =
        tp.symmetrize(tp.add(tp.matmul(hs, tp.transpose(h_eff[t])), r));
    ad::Var gain = tp.transpose(tp.spd_solve(s_cov, hs));
    ad::Var innov = tp.sub(zs[t], tp.matmul(h_eff[t], pred_mu[t]));
    filt_mu[t] = tp.add(pred_mu[t], tp.matmul(gain, innov));
    filt_sig[t] = tp.symmetrize(tp.sub(pred_sig[t], tp.matmul(gain, hs)));
  }

  std::vector<ad::Var> smooth_mu(t_len), smooth_sig(t_len);
  smooth_mu[t_len - 1] = filt_mu[t_len - 1];
  smooth_sig[t_len - 1] = filt_sig[t_len - 1];
  for (int t = t_len - 2; t >= 0; --t) {
    ad::Var j =
        tp.transpose(tp.spd_solve(pred_sig[t + 1], tp.matmul(f, filt_sig[t])));
    smooth_mu[t] = tp.add(
        filt_mu[t], tp.matmul(j, tp.sub(smooth_mu[t + 1], pred_mu[t + 1])));
    ad::Var dcov = tp.sub(smooth_sig[t + 1], pred_sig[t + 1]);
    smooth_sig[t] = tp.symmetrize(
        tp.add(filt_sig[t], tp.matmul(tp.matmul(j, dcov), tp.transpose(j))));
  }

  const double log2pi = std::log(2.0 * M_PI);
  ad::Var acc = tp.constant_scalar(0.0);
  for (int t = 0; t < t_len; ++t) {
    ad::Var hs = tp.matmul(h_eff[t], smooth_sig[t]);
    ad::Var c =
        tp.symmetrize(tp.add(tp.matmul(hs, tp.transpose(h_eff[t])), r));
    ad::Var resid = tp.sub(zs[t], tp.matmul(h_eff[t], smooth_mu[t]));
    ad::Var quad = tp.matmul(tp.transpose(resid), tp.spd_solve(c, resid));
    ad::Var term = tp.add(tp.add(tp.logdet_spd(c), quad),
                          tp.constant_scalar(2.0 * k * log2pi));
    acc = tp.add(acc, term);
  }
  ad::Var loss = tp.scalar_mul(acc, 0.5);

  tp.backward(loss);

  LossGrad out;
  out.loss = tp.value(loss)(0, 0);
  out.grad.w1 = tp.adjoint(w1);
  out.grad.b1 = tp.adjoint(b1);
  out.grad.w2 = tp.adjoint(w2);
  out.grad.b2 = Eigen::VectorXd::Zero(1);
  return out;
}

FdReport fd_check(const ScorerParams& params, const DetectionClip& clip,
                  const LossConfig& cfg, double eps) {
  LossGrad ref = association_loss_grad(params, clip, cfg);
  ScorerParams work = params;
  FdReport rep;

  auto probe = [&](double& coord, double analytic) {
    double keep = coord;
    coord = keep + eps;
    double hi = association_loss(work, clip, cfg);
    coord = keep - eps;
    double lo = association_loss(work, clip, cfg);
    coord = keep;
    double fd = (hi - lo) / (2.0 * eps);
    double abs_err = std::abs(fd - analytic);
    rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
    rep.max_rel_err =
        std::max(rep.max_rel_err,
                 abs_err / std::max(1e-8, std::abs(analytic) + std::abs(fd)));
    ++rep.coords;
  };

  for (int i = 0; i < work.w1.rows(); ++i)
    for (int j = 0; j < work.w1.cols(); ++j)
      probe(work.w1(i, j), ref.grad.w1(i, j));
  for (int i = 0; i < work.b1.size(); ++i) probe(work.b1(i), ref.grad.b1(i));
  for (int j = 0; j < work.w2.cols(); ++j)
    probe(work.w2(0, j), ref.grad.w2(0, j));
  probe(work.b2(0), ref.grad.b2(0));
  return rep;
}

Eigen::MatrixXd final_transport(const ScorerParams& params, const DetectionClip& clip,
                                const LossConfig& cfg) {
  clip.check();
  params.check();
  Eigen::MatrixXd perm = Eigen::MatrixXd::Identity(clip.k, clip.k);
  for (int t = 1; t < clip.t; ++t) {
    Eigen::MatrixXd s =
        scores_no_bias(params, frame_boxes(clip, t - 1), frame_boxes(clip, t));
    auto sw = sinkhorn_log_sweeps(s, cfg.sinkhorn_floor, cfg.sinkhorn_tol,
                                  cfg.sinkhorn_cap);
    perm = compose_transport(sw.log_a.array().exp().matrix(), perm);
  }
  return perm;
}

}  // namespace emtrack
