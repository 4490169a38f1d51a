#include <doctest.h>

#include <cmath>
#include <vector>

#include "emtrack/boxes.hpp"
#include "emtrack/clips.hpp"
#include "emtrack/errors.hpp"
#include "emtrack/gaussian.hpp"
#include "emtrack/loss_grad.hpp"
#include "emtrack/rng.hpp"
#include "emtrack/scorer.hpp"
#include "emtrack/sinkhorn.hpp"

using namespace emtrack;

namespace {

Detection det(double cx, double cy, double w, double h) {
  Detection d;
  d.box = BoundingBox{cx - 0.5 * w, cy - 0.5 * h, w, h, 0.9};
  return d;
}

// K linear trajectories with per-frame jitter, constant box size
DetectionClip make_clip(int k, int t, Rng& rng) {
  DetectionClip clip;
  clip.k = k;
  clip.t = t;
  clip.frames.resize(t);

  std::vector<double> x0(k), y0(k), vx(k), vy(k);
  for (int j = 0; j < k; ++j) {
    x0[j] = 40.0 + 60.0 * j + rng.uniform(-5.0, 5.0);
    y0[j] = 50.0 + 30.0 * j + rng.uniform(-5.0, 5.0);
    vx[j] = rng.uniform(-4.0, 4.0);
    vy[j] = rng.uniform(-4.0, 4.0);
  }
  for (int s = 0; s < t; ++s)
    for (int j = 0; j < k; ++j)
      clip.frames[s].push_back(det(x0[j] + vx[j] * s + rng.uniform(-1.0, 1.0),
                                   y0[j] + vy[j] * s + rng.uniform(-1.0, 1.0),
                                   8.0 + 2.0 * j, 16.0 + 2.0 * j));
  return clip;
}

std::vector<BoundingBox> frame_boxes(const DetectionClip& clip, int t) {
  std::vector<BoundingBox> out;
  for (const auto& d : clip.frames[t]) out.push_back(d.box);
  return out;
}

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

// Direct conditioning of the joint Gaussian over all T stacked states on the
// frame 2..T observations, then the same per-frame marginal terms. No
// filtering or smoothing recursions anywhere.
double joint_gaussian_loss(const ScorerParams& params,
                           const DetectionClip& clip, const LossConfig& cfg) {
  const int k = clip.k, tl = clip.t, d = 4 * k, o = 2 * k;
  Eigen::MatrixXd f = kron_dense(Eigen::MatrixXd::Identity(k, k), cv_block());
  Eigen::MatrixXd q = cfg.sigma_q * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd r = cfg.sigma_r * Eigen::MatrixXd::Identity(o, o);

  std::vector<Eigen::VectorXd> zs(tl);
  for (int t = 0; t < tl; ++t) {
    zs[t].resize(o);
    for (int j = 0; j < k; ++j) {
      zs[t](2 * j) = clip.frames[t][j].box.cx();
      zs[t](2 * j + 1) = clip.frames[t][j].box.cy();
    }
  }

  // same score/permutation chain the loss uses; b2 never enters it
  std::vector<Eigen::MatrixXd> h_eff(tl);
  h_eff[0] = kron_dense(Eigen::MatrixXd::Identity(k, k), obs_block());
  ScorerParams nob = params;
  nob.b2.setZero();
  Eigen::MatrixXd perm = Eigen::MatrixXd::Identity(k, k);
  for (int t = 1; t < tl; ++t) {
    Eigen::MatrixXd s =
        score_matrix(nob, frame_boxes(clip, t - 1), frame_boxes(clip, t));
    auto sw = sinkhorn_log_sweeps(s, cfg.sinkhorn_floor, cfg.sinkhorn_tol,
                                  cfg.sinkhorn_cap);
    perm = compose_transport(sw.log_a.array().exp().matrix(), perm);
    h_eff[t] = kron_dense(perm, obs_block());
  }

  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < k; ++j) {
    mu1(4 * j) = zs[0](2 * j);
    mu1(4 * j + 1) = zs[0](2 * j + 1);
  }

  std::vector<Eigen::MatrixXd> fpow(tl);
  fpow[0] = Eigen::MatrixXd::Identity(d, d);
  for (int t = 1; t < tl; ++t) fpow[t] = f * fpow[t - 1];

  std::vector<Eigen::MatrixXd> sig(tl);
  sig[0] = cfg.sigma_init * Eigen::MatrixXd::Identity(d, d);
  for (int t = 1; t < tl; ++t) sig[t] = f * sig[t - 1] * f.transpose() + q;

  Eigen::VectorXd m(tl * d);
  Eigen::MatrixXd c(tl * d, tl * d);
  for (int t = 0; t < tl; ++t) m.segment(t * d, d) = fpow[t] * mu1;
  for (int s = 0; s < tl; ++s)
    for (int t = s; t < tl; ++t) {
      Eigen::MatrixXd blk = sig[s] * fpow[t - s].transpose();
      c.block(s * d, t * d, d, d) = blk;
      c.block(t * d, s * d, d, d) = blk.transpose();
    }

  const int ny = (tl - 1) * o;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(ny, tl * d);
  Eigen::VectorXd y(ny);
  for (int t = 1; t < tl; ++t) {
    g.block((t - 1) * o, t * d, o, d) = h_eff[t];
    y.segment((t - 1) * o, o) = zs[t];
  }

  Eigen::MatrixXd gc = g * c;
  Eigen::MatrixXd sy = gc * g.transpose();
  sy += cfg.sigma_r * Eigen::MatrixXd::Identity(ny, ny);
  Eigen::MatrixXd gain = spd_solve(sy, gc).transpose();
  Eigen::VectorXd post_m = m + gain * (y - g * m);
  Eigen::MatrixXd post_c = c - gain * gc;

  double loss = 0.0;
  for (int t = 0; t < tl; ++t) {
    Eigen::VectorXd mu = post_m.segment(t * d, d);
    Eigen::MatrixXd pc = post_c.block(t * d, t * d, d, d);
    pc = 0.5 * (pc + pc.transpose()).eval();
    Eigen::MatrixXd cov = h_eff[t] * pc * h_eff[t].transpose() + r;
    loss -= gaussian_logpdf(zs[t], h_eff[t] * mu, cov);
  }
  return loss;
}

// pre-activation screen: rejects configurations where finite differences
// cannot measure the gradient (a unit active on every pair sits on a plateau
// where fd sees only rounding noise; a pre-activation near the kink can flip
// inside the fd window)
bool fd_safe(const ScorerParams& params, const DetectionClip& clip,
             double margin = 1e-3) {
  for (int t = 1; t < clip.t; ++t) {
    Eigen::MatrixXd feats =
        pair_feature_matrix(frame_boxes(clip, t - 1), frame_boxes(clip, t));
    Eigen::MatrixXd pre = (params.w1 * feats).colwise() + params.b1;
    if (pre.cwiseAbs().minCoeff() < margin) return false;
  }
  for (int u = 0; u < params.hidden(); ++u) {
    double mn = 1e300;
    for (int t = 1; t < clip.t; ++t) {
      Eigen::MatrixXd feats =
          pair_feature_matrix(frame_boxes(clip, t - 1), frame_boxes(clip, t));
      Eigen::MatrixXd pre = (params.w1 * feats).colwise() + params.b1;
      mn = std::min(mn, pre.row(u).minCoeff());
    }
    if (mn > 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("kron_dense lays out blocks of the left factor") {
  Eigen::MatrixXd p(2, 2);
  p << 1, 2, 3, 4;
  Eigen::MatrixXd b(1, 2);
  b << 5, 6;
  Eigen::MatrixXd k = kron_dense(p, b);
  REQUIRE(k.rows() == 2);
  REQUIRE(k.cols() == 4);
  Eigen::MatrixXd want(2, 4);
  want << 5, 6, 10, 12, 15, 18, 20, 24;
  CHECK(k.isApprox(want, 1e-15));
}

TEST_CASE("loss matches direct joint-Gaussian conditioning") {
  Rng rng(101);
  LossConfig cfg;
  for (int rep = 0; rep < 3; ++rep) {
    int k = 2 + rep % 2;
    int t = 3 + rep % 2;
    DetectionClip clip = make_clip(k, t, rng);
    Rng pr = rng.stream("params" + std::to_string(rep));
    ScorerParams params = init_scorer(4, pr);

    double pipeline = association_loss(params, clip, cfg);
    double oracle = joint_gaussian_loss(params, clip, cfg);
    CHECK(std::abs(pipeline - oracle) <
          1e-8 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("tape loss agrees with the forward-only evaluation") {
  Rng rng(102);
  LossConfig cfg;
  DetectionClip clip = make_clip(3, 4, rng);
  Rng pr = rng.stream("params");
  ScorerParams params = init_scorer(4, pr);

  double fwd = association_loss(params, clip, cfg);
  LossGrad lg = association_loss_grad(params, clip, cfg);
  CHECK(std::isfinite(lg.loss));
  CHECK(std::abs(fwd - lg.loss) < 1e-12 * std::max(1.0, std::abs(fwd)));
}

TEST_CASE("loss never reads the output bias") {
  Rng rng(103);
  LossConfig cfg;
  DetectionClip clip = make_clip(2, 3, rng);
  Rng pr = rng.stream("params");
  ScorerParams params = init_scorer(4, pr);

  double base = association_loss(params, clip, cfg);
  params.b2(0) = 7.25;
  CHECK(association_loss(params, clip, cfg) == base);

  LossGrad lg = association_loss_grad(params, clip, cfg);
  CHECK(lg.grad.b2(0) == 0.0);
}

TEST_CASE("loss is invariant to within-frame detection order") {
  Rng rng(104);
  LossConfig cfg;
  DetectionClip clip = make_clip(3, 4, rng);
  Rng pr = rng.stream("params");
  ScorerParams params = init_scorer(4, pr);
  double base = association_loss(params, clip, cfg);

  DetectionClip shuffled_mid = clip;
  std::swap(shuffled_mid.frames[2][0], shuffled_mid.frames[2][2]);
  std::swap(shuffled_mid.frames[2][1], shuffled_mid.frames[2][2]);
  CHECK(association_loss(params, shuffled_mid, cfg) ==
        doctest::Approx(base).epsilon(1e-9));

  DetectionClip shuffled_first = clip;
  std::swap(shuffled_first.frames[0][0], shuffled_first.frames[0][1]);
  CHECK(association_loss(params, shuffled_first, cfg) ==
        doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("gradients are deterministic and point downhill") {
  Rng rng(105);
  LossConfig cfg;
  DetectionClip clip = make_clip(2, 4, rng);
  Rng pr = rng.stream("params");
  ScorerParams params = init_scorer(4, pr);

  LossGrad a = association_loss_grad(params, clip, cfg);
  LossGrad b = association_loss_grad(params, clip, cfg);
  CHECK(a.loss == b.loss);
  CHECK(a.grad.w1 == b.grad.w1);
  CHECK(a.grad.b1 == b.grad.b1);
  CHECK(a.grad.w2 == b.grad.w2);

  double gnorm = a.grad.w1.norm() + a.grad.b1.norm() + a.grad.w2.norm();
  REQUIRE(gnorm > 0.0);

  double step = 1e-4 / std::max(1.0, gnorm);
  ScorerParams moved = params;
  moved.w1 -= step * a.grad.w1;
  moved.b1 -= step * a.grad.b1;
  moved.w2 -= step * a.grad.w2;
  CHECK(association_loss(moved, clip, cfg) < a.loss);
}

TEST_CASE("finite differences confirm the tape on screened configurations") {
  LossConfig cfg;
  int done = 0;
  std::uint64_t seed = 0;
  while (done < 6 && seed < 400) {
    Rng rng(seed++);
    int k = 2 + rng.uniform_int(0, 1);
    int t = 3 + rng.uniform_int(0, 1);
    DetectionClip clip = make_clip(k, t, rng);
    Rng pr = rng.stream("params");
    ScorerParams params = init_scorer(4, pr);
    if (!fd_safe(params, clip)) continue;

    FdReport rep = fd_check(params, clip, cfg);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.coords == 4 * 5 + 4 + 4 + 1);
    ++done;
  }
  CHECK(done == 6);
}

TEST_CASE("a dead scorer has exactly zero gradient and zero fd error") {
  Rng rng(106);
  LossConfig cfg;
  DetectionClip clip = make_clip(2, 3, rng);

  ScorerParams params;
  params.w1 = Eigen::MatrixXd::Zero(4, 5);
  params.b1 = Eigen::VectorXd::Constant(4, -1.0);
  params.w2 = Eigen::MatrixXd::Ones(1, 4);
  params.b2 = Eigen::VectorXd::Constant(1, 0.3);

  LossGrad lg = association_loss_grad(params, clip, cfg);
  CHECK(lg.grad.w1.norm() == 0.0);
  CHECK(lg.grad.b1.norm() == 0.0);
  CHECK(lg.grad.w2.norm() == 0.0);

  FdReport rep = fd_check(params, clip, cfg);
  CHECK(rep.max_rel_err < 1e-7);
}
