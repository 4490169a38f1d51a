#include "emtrack/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "emtrack/autodiff.hpp"
#include "emtrack/errors.hpp"
#include "emtrack/rng.hpp"
#include "emtrack/sinkhorn.hpp"

namespace emtrack {

void TrainConfig::check() const {
  if (lr < 0.0 || appearance_lr < 0.0) throw ConfigError("learning rates must be >= 0");
  if (epochs < 1 || appearance_epochs < 1) throw ConfigError("epochs must be >= 1");
  if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be >= 1");
  if (clip_len < 2) throw ConfigError("clip_len must be >= 2");
  if (sigma_q <= 0.0 || sigma_r <= 0.0 || sigma_init <= 0.0) {
    throw ConfigError("noise variances must be > 0");
  }
  if (conf_threshold < 0.0 || conf_threshold > 1.0) {
    throw ConfigError("conf_threshold must be in [0,1]");
  }
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
}

LossConfig TrainConfig::loss_config() const {
  LossConfig lc;
  lc.sinkhorn_floor = sinkhorn_iters;
  lc.sigma_q = sigma_q;
  lc.sigma_r = sigma_r;
  lc.sigma_init = sigma_init;
  return lc;
}

namespace {

template <typename M>
struct AdamState {
  M m, v;
  explicit AdamState(const M& shape)
      : m(M::Zero(shape.rows(), shape.cols())), v(M::Zero(shape.rows(), shape.cols())) {}

  void apply(M& p, const M& g, double lr, int step) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const double mc = 1.0 - std::pow(b1, step);
    const double vc = 1.0 - std::pow(b2, step);
    p -= lr * ((m / mc).array() / ((v / vc).array().sqrt() + eps)).matrix();
  }
};

bool finite(const ScorerParams& g) {
  return g.w1.allFinite() && g.b1.allFinite() && g.w2.allFinite() && g.b2.allFinite();
}

// The output bias shifts every score equally and Sinkhorn cancels the shift,
// so the loss cannot determine it. Setting it so the transport-weighted mean
// score is zero puts matched pairs near score zero, which gives the absolute
// scale downstream match costs rely on.
void calibrate_bias(ScorerParams& p, const std::vector<DetectionClip>& clips,
                    const TrainConfig& cfg) {
  double total = 0.0;
  double mass = 0.0;
  std::vector<BoundingBox> prev, cur;
  for (const DetectionClip& clip : clips) {
    prev.resize(clip.k);
    cur.resize(clip.k);
    for (int t = 1; t < clip.t; ++t) {
      for (int j = 0; j < clip.k; ++j) {
        prev[j] = clip.frames[t - 1][j].box;
        cur[j] = clip.frames[t][j].box;
      }
      const Eigen::MatrixXd s = score_matrix(p, prev, cur);
      const Eigen::MatrixXd a = sinkhorn_normalize(s, cfg.sinkhorn_iters).a;
      total += a.cwiseProduct(s).sum();
      mass += static_cast<double>(clip.k);
    }
  }
  if (mass > 0.0) p.b2.array() -= total / mass;
}

}  // namespace

TrainResult train_association(const std::vector<DetectionClip>& clips, const ScorerParams& init,
                              const TrainConfig& cfg) {
  cfg.check();
  init.check();
  const LossConfig lc = cfg.loss_config();

  TrainResult out;
  out.params = init;
  Rng shuffle_rng = Rng(cfg.seed).stream("shuffle");

  AdamState<Eigen::MatrixXd> m_w1(init.w1), m_w2(init.w2);
  AdamState<Eigen::VectorXd> m_b1(init.b1);

  std::vector<int> order(clips.size());
  std::iota(order.begin(), order.end(), 0);

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int idx : order) {
      LossGrad lg;
      try {
        lg = association_loss_grad(out.params, clips[idx], lc);
      } catch (const NumericalError& e) {
        throw NumericalError("step " + std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(lg.loss) || !finite(lg.grad)) {
        throw NumericalError("non-finite loss at step " + std::to_string(step));
      }
      out.losses.push_back(lg.loss);
      ++step;
      if (cfg.adam) {
        m_w1.apply(out.params.w1, lg.grad.w1, cfg.lr, step);
        m_b1.apply(out.params.b1, lg.grad.b1, cfg.lr, step);
        m_w2.apply(out.params.w2, lg.grad.w2, cfg.lr, step);
      } else {
        out.params.w1 -= cfg.lr * lg.grad.w1;
        out.params.b1 -= cfg.lr * lg.grad.b1;
        out.params.w2 -= cfg.lr * lg.grad.w2;
      }
    }
  }
  if (cfg.lr > 0.0) calibrate_bias(out.params, clips, cfg);
  return out;
}

TrainResult train_association(const std::vector<DetectionClip>& clips, const TrainConfig& cfg) {
  cfg.check();
  Rng init_rng = Rng(cfg.seed).stream("init");
  return train_association(clips, init_scorer(cfg.hidden, init_rng), cfg);
}

AppearanceTrainResult train_appearance(const std::vector<DetectionClip>& clips,
                                       const ScorerParams& scorer, const AppearanceHead& init,
                                       const EmbeddingProvider& embeddings,
                                       const TrainConfig& cfg) {
  cfg.check();
  scorer.check();
  init.check();
  if (embeddings.dim() != init.embed_dim()) {
    throw DimensionError("provider dim does not match the appearance head");
  }
  const LossConfig lc = cfg.loss_config();

  struct ClipData {
    Eigen::MatrixXd target;  // rows index last-frame detections
    Eigen::MatrixXd e_cur, e_ref;
    double plogp = 0.0;
  };
  std::vector<ClipData> data;
  data.reserve(clips.size());
  for (const DetectionClip& clip : clips) {
    ClipData d;
    d.target = final_transport(scorer, clip, lc);
    d.e_cur.resize(embeddings.dim(), clip.k);
    d.e_ref.resize(embeddings.dim(), clip.k);
    for (int j = 0; j < clip.k; ++j) {
      d.e_cur.col(j) = embeddings.embed(clip.frames[clip.t - 1][j].crop_id);
      d.e_ref.col(j) = embeddings.embed(clip.frames[0][j].crop_id);
    }
    for (Eigen::Index i = 0; i < d.target.size(); ++i) {
      const double p = d.target(i);
      if (p > 0.0) d.plogp += p * std::log(p);
    }
    data.push_back(std::move(d));
  }

  AppearanceTrainResult out;
  out.head = init;
  for (int epoch = 0; epoch < cfg.appearance_epochs; ++epoch) {
    for (const ClipData& d : data) {
      ad::Tape tp;
      ad::Var proj = tp.leaf(out.head.proj);
      ad::Var y_cur = tp.colwise_normalize(tp.matmul(proj, tp.constant(d.e_cur)));
      ad::Var y_ref = tp.colwise_normalize(tp.matmul(proj, tp.constant(d.e_ref)));
      ad::Var c = tp.matmul(tp.transpose(y_cur), y_ref);
      ad::Var log_u = tp.sub_colvec(c, tp.row_lse(c));
      ad::Var cross = tp.neg(tp.sum_all(tp.mul_elem_const(log_u, d.target)));
      tp.backward(cross);
      out.kl.push_back(d.plogp + tp.value(cross)(0, 0));
      out.head.proj -= cfg.appearance_lr * tp.adjoint(proj);
      if (!out.head.proj.allFinite()) {
        throw NumericalError("non-finite appearance update at step " +
                             std::to_string(out.kl.size() - 1));
      }
    }
  }
  return out;
}

}  // namespace emtrack
