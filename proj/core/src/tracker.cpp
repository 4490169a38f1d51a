#include "emtrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "emtrack/assignment.hpp"
#include "emtrack/errors.hpp"
#include "emtrack/kalman.hpp"

namespace emtrack {
namespace {

Eigen::MatrixXd motion_model() {
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(8, 8);
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  return f;
}

Eigen::MatrixXd obs_model() {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, 8);
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

// Noise scales follow the current box size; tiny sizes are floored so the
// covariances stay positive definite.
void size_scales(const Eigen::VectorXd& mean, double& w, double& h) {
  w = std::max(std::abs(mean(2)), 1.0);
  h = std::max(std::abs(mean(3)), 1.0);
}

Eigen::MatrixXd process_noise(const Eigen::VectorXd& mean, const TrackerConfig& cfg) {
  double w, h;
  size_scales(mean, w, h);
  Eigen::VectorXd d(8);
  const double pw = cfg.sigma_pos * w, ph = cfg.sigma_pos * h;
  const double vw = cfg.sigma_vel * w, vh = cfg.sigma_vel * h;
  d << pw * pw, ph * ph, pw * pw, ph * ph, vw * vw, vh * vh, vw * vw, vh * vh;
  return d.asDiagonal();
}

Eigen::MatrixXd obs_noise(const Eigen::VectorXd& mean, const TrackerConfig& cfg) {
  double w, h;
  size_scales(mean, w, h);
  Eigen::VectorXd d(4);
  const double pw = cfg.sigma_pos * w, ph = cfg.sigma_pos * h;
  d << pw * pw, ph * ph, pw * pw, ph * ph;
  return d.asDiagonal();
}

BoundingBox mean_box(const Eigen::VectorXd& mean) {
  const double w = std::max(mean(2), 1e-3);
  const double h = std::max(mean(3), 1e-3);
  return BoundingBox{mean(0) - w / 2.0, mean(1) - h / 2.0, w, h, 1.0};
}

}  // namespace

void TrackerConfig::check() const {
  if (kappa < 0.0) throw ConfigError("kappa must be >= 0");
  if (s_min < -1.0 || s_min > 1.0) throw ConfigError("s_min must be in [-1,1]");
  if (max_misses < 0) throw ConfigError("max_misses must be >= 0");
  if (!(sigma_pos > 0.0) || !(sigma_vel > 0.0)) throw ConfigError("noise scales must be > 0");
  if (new_track_conf < 0.0 || new_track_conf > 1.0) {
    throw ConfigError("new_track_conf must be in [0,1]");
  }
  if (ema_momentum < 0.0 || ema_momentum > 1.0) throw ConfigError("ema_momentum must be in [0,1]");
  if (!std::isfinite(c_miss)) throw ConfigError("c_miss must be finite");
}

OnlineTracker::OnlineTracker(ScorerParams scorer, TrackerConfig cfg,
                             std::optional<AppearanceHead> head)
    : scorer_(std::move(scorer)), cfg_(cfg), head_(std::move(head)) {
  scorer_.check();
  cfg_.check();
  if (cfg_.use_appearance && !head_) {
    throw ConfigError("appearance scoring enabled without a head");
  }
  if (head_) head_->check();
}

std::vector<TrackRecord> OnlineTracker::step(int frame, const std::vector<Detection>& dets,
                                             const std::vector<Eigen::VectorXd>& embeddings) {
  const bool app = cfg_.use_appearance;
  if (app && embeddings.size() != dets.size()) {
    throw DimensionError("embeddings must run parallel to detections");
  }

  const Eigen::MatrixXd f = motion_model();
  const Eigen::MatrixXd h_obs = obs_model();
  const int n = static_cast<int>(tracks_.size());
  const int m = static_cast<int>(dets.size());

  std::vector<GaussianBelief> predicted(n);
  std::vector<BoundingBox> pred_boxes(n);
  for (int i = 0; i < n; ++i) {
    predicted[i] = kf_predict(tracks_[i].belief, f, process_noise(tracks_[i].belief.mean, cfg_));
    pred_boxes[i] = mean_box(predicted[i].mean);
  }

  std::vector<Eigen::VectorXd> det_app(app ? m : 0);
  if (app) {
    for (int j = 0; j < m; ++j) det_app[j] = apply_head(*head_, embeddings[j]);
  }

  Eigen::MatrixXd cost(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double c = -score_pair(scorer_, pred_boxes[i], dets[j].box);
      if (app) c -= cfg_.kappa * (tracks_[i].app.dot(det_app[j]) - cfg_.s_min);
      cost(i, j) = c;
    }
  }
  const Assignment assign = solve_assignment(cost, cfg_.c_miss);

  std::vector<TrackRecord> out;
  std::vector<char> det_taken(m, 0);
  std::vector<char> track_matched(n, 0);

  for (const auto& [i, j] : assign.pairs) {
    track_matched[i] = 1;
    det_taken[j] = 1;
    Track& tr = tracks_[i];
    const BoundingBox& b = dets[j].box;
    Eigen::VectorXd z(4);
    z << b.cx(), b.cy(), b.w, b.h;
    tr.belief = kf_update(predicted[i], h_obs, obs_noise(predicted[i].mean, cfg_), z).posterior;
    tr.misses = 0;
    if (app) tr.app = ema_update(tr.app, det_app[j], cfg_.ema_momentum);
    out.push_back(TrackRecord{frame, tr.id, mean_box(tr.belief.mean)});
  }

  for (int i = 0; i < n; ++i) {
    if (track_matched[i]) continue;
    tracks_[i].belief = predicted[i];
    ++tracks_[i].misses;
  }
  tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                               [&](const Track& t) { return t.misses > cfg_.max_misses; }),
                tracks_.end());

  for (int j = 0; j < m; ++j) {
    if (det_taken[j] || dets[j].box.conf < cfg_.new_track_conf) continue;
    const BoundingBox& b = dets[j].box;
    Track tr;
    tr.id = next_id_++;
    tr.belief.mean = Eigen::VectorXd::Zero(8);
    tr.belief.mean << b.cx(), b.cy(), b.w, b.h, 0.0, 0.0, 0.0, 0.0;
    double w, h;
    size_scales(tr.belief.mean, w, h);
    Eigen::VectorXd d(8);
    const double pw = 2.0 * cfg_.sigma_pos * w, ph = 2.0 * cfg_.sigma_pos * h;
    const double vw = 10.0 * cfg_.sigma_vel * w, vh = 10.0 * cfg_.sigma_vel * h;
    d << pw * pw, ph * ph, pw * pw, ph * ph, vw * vw, vh * vh, vw * vw, vh * vh;
    tr.belief.cov = d.asDiagonal();
    if (app) tr.app = det_app[j];
    out.push_back(TrackRecord{frame, tr.id, mean_box(tr.belief.mean)});
    tracks_.push_back(std::move(tr));
  }
  return out;
}

}  // namespace emtrack
