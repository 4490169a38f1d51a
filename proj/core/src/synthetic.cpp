#include "emtrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emtrack/errors.hpp"
#include "emtrack/rng.hpp"

namespace emtrack {

void SceneConfig::check() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (t < 2) throw ConfigError("t must be >= 2");
  if (miss_rate < 0.0 || miss_rate >= 1.0) throw ConfigError("miss_rate must be in [0,1)");
  if (fp_rate < 0.0 || fp_rate >= 1.0) throw ConfigError("fp_rate must be in [0,1)");
  if (center_noise < 0.0 || size_noise < 0.0) throw ConfigError("noise must be >= 0");
  if (gap_len < 0) throw ConfigError("gap_len must be >= 0");
  if (gap_len > 0 && t < 2 * gap_len + 6) throw ConfigError("t too small for gap_len");
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (k > embed_dim) throw ConfigError("embed_dim must be >= k");
  if (embed_noise < 0.0) throw ConfigError("embed_noise must be >= 0");
  if (crossing) {
    if (std::min(width, height) / 2.0 - 140.0 < 20.0) {
      throw ConfigError("scene bounds too small for crossing paths");
    }
  } else {
    if (width < 300.0) throw ConfigError("scene width too small");
    if (height < 100.0 * k + 100.0) throw ConfigError("scene height too small for k lanes");
  }
}

SyntheticScene generate_scene(const SceneConfig& cfg) {
  cfg.check();
  Rng rng = Rng(cfg.seed).stream("scene");

  const double margin = 50.0;
  const double cx0 = cfg.width / 2.0, cy0 = cfg.height / 2.0;

  struct Body {
    double w, h;
    double x, y;    // start center
    double vx, vy;  // px per frame
    int gap_start;  // first occluded frame, 0 when none
  };
  std::vector<Body> bodies(cfg.k);
  for (int j = 0; j < cfg.k; ++j) {
    Body& b = bodies[j];
    b.w = rng.uniform(25.0, 45.0);
    b.h = rng.uniform(40.0, 85.0);
    if (cfg.crossing) {
      // Start on a ring, aim near the antipode; every path passes close to
      // the center and the speed stays claimable frame to frame.
      const double r = std::min(9.0 * (cfg.t - 1), std::min(cfg.width, cfg.height) / 2.0 - 140.0);
      const double th = 2.0 * std::numbers::pi * j / cfg.k + rng.uniform(-0.2, 0.2);
      const double ph = th + std::numbers::pi + rng.uniform(-0.35, 0.35);
      b.x = cx0 + r * std::cos(th);
      b.y = cy0 + r * std::sin(th);
      b.vx = (cx0 + r * std::cos(ph) - b.x) / (cfg.t - 1);
      b.vy = (cy0 + r * std::sin(ph) - b.y) / (cfg.t - 1);
    } else {
      const double span = cfg.width - 2.0 * margin;
      const double lane = margin + (j + 0.5) * (cfg.height - 2.0 * margin) / cfg.k;
      b.x = margin + rng.uniform(0.0, 0.1) * span;
      b.y = lane;
      b.vx = std::min(rng.uniform(8.0, 18.0), (cfg.width - margin - b.x) / (cfg.t - 1));
      b.vy = 0.0;
    }
    b.gap_start = cfg.gap_len > 0 ? rng.uniform_int(cfg.t / 4, cfg.t / 2) : 0;
  }

  // Orthonormal identity embeddings.
  Eigen::MatrixXd g(cfg.embed_dim, cfg.k);
  for (int j = 0; j < cfg.k; ++j) {
    for (int i = 0; i < cfg.embed_dim; ++i) g(i, j) = rng.normal();
  }
  const Eigen::MatrixXd base =
      Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
      Eigen::MatrixXd::Identity(cfg.embed_dim, cfg.k);

  SyntheticScene scene;
  scene.det_identity.resize(cfg.t);
  auto emit_embedding = [&](int frame, int index, const Eigen::VectorXd& e) {
    scene.embeddings.emplace_back(std::to_string(frame) + ":" + std::to_string(index), e);
  };

  for (int f = 1; f <= cfg.t; ++f) {
    int index = 0;
    for (int j = 0; j < cfg.k; ++j) {
      const Body& b = bodies[j];
      const double cx = b.x + b.vx * (f - 1);
      const double cy = b.y + b.vy * (f - 1);
      scene.truth.push_back(MotRow{f, j + 1, cx - b.w / 2.0, cy - b.h / 2.0, b.w, b.h, 1.0});

      const bool occluded = b.gap_start > 0 && f >= b.gap_start && f < b.gap_start + cfg.gap_len;
      if (occluded) continue;
      if (cfg.miss_rate > 0.0 && rng.uniform() < cfg.miss_rate) continue;

      double dx = cx, dy = cy, dw = b.w, dh = b.h;
      if (cfg.center_noise > 0.0) {
        dx += cfg.center_noise * rng.normal();
        dy += cfg.center_noise * rng.normal();
      }
      if (cfg.size_noise > 0.0) {
        dw = std::max(2.0, dw + cfg.size_noise * rng.normal());
        dh = std::max(2.0, dh + cfg.size_noise * rng.normal());
      }
      const double conf = rng.uniform(0.75, 1.0);
      scene.detections.push_back(MotRow{f, -1, dx - dw / 2.0, dy - dh / 2.0, dw, dh, conf});
      scene.det_identity[f - 1].push_back(j + 1);

      Eigen::VectorXd e = base.col(j);
      if (cfg.embed_noise > 0.0) {
        for (int i = 0; i < cfg.embed_dim; ++i) e(i) += cfg.embed_noise * rng.normal();
      }
      emit_embedding(f, index++, e / e.norm());
    }
    for (int j = 0; j < cfg.k; ++j) {
      if (cfg.fp_rate <= 0.0 || rng.uniform() >= cfg.fp_rate) continue;
      const double w = rng.uniform(25.0, 45.0);
      const double h = rng.uniform(40.0, 85.0);
      const double cx = rng.uniform(margin, cfg.width - margin);
      const double cy = rng.uniform(margin, cfg.height - margin);
      const double conf = rng.uniform(0.55, 0.95);
      scene.detections.push_back(MotRow{f, -1, cx - w / 2.0, cy - h / 2.0, w, h, conf});
      scene.det_identity[f - 1].push_back(-1);
      Eigen::VectorXd e(cfg.embed_dim);
      for (int i = 0; i < cfg.embed_dim; ++i) e(i) = rng.normal();
      emit_embedding(f, index++, e / e.norm());
    }
  }
  return scene;
}

}  // namespace emtrack
