#pragma once

#include <cstdint>
#include <vector>

#include "emtrack/appearance.hpp"
#include "emtrack/clips.hpp"
#include "emtrack/loss_grad.hpp"
#include "emtrack/scorer.hpp"

namespace emtrack {

struct TrainConfig {
  double lr = 5e-3;
  int epochs = 10;
  double appearance_lr = 1e-4;
  int appearance_epochs = 3;
  int sinkhorn_iters = 20;
  int clip_len = 10;
  double sigma_q = 150.0;
  double sigma_r = 5.0;
  double sigma_init = 300.0;
  double conf_threshold = 0.5;
  int hidden = 64;
  bool adam = false;  // SGD is the deterministic default
  std::uint64_t seed = 0;

  void check() const;  // throws ConfigError on out-of-range values
  LossConfig loss_config() const;
};

struct TrainResult {
  ScorerParams params;
  std::vector<double> losses;  // one entry per gradient step, pre-update
};

// One gradient step per clip per epoch on the association loss. Clip order is
// reshuffled every epoch from the seed's "shuffle" stream; parameters start
// from init (or a fresh draw from the "init" stream). A zero learning rate
// returns init bit for bit. A non-finite loss or gradient aborts with the
// failing step index in the error.
// The loss is invariant to the scorer's output bias, so after the last step
// the bias is set to make the transport-weighted mean score zero; matched
// pairs then score near zero and mismatches stay far negative.
TrainResult train_association(const std::vector<DetectionClip>& clips, const TrainConfig& cfg);
TrainResult train_association(const std::vector<DetectionClip>& clips, const ScorerParams& init,
                              const TrainConfig& cfg);

struct AppearanceTrainResult {
  AppearanceHead head;
  std::vector<double> kl;  // one entry per gradient step, pre-update
};

// Gradient steps on the projection head only. For each clip the frozen scorer
// supplies the soft transport between the first and last frames, and the head
// is pulled toward it by KL between that transport and the cosine softmax
// rows. Embeddings are looked up by crop id; unknown ids throw from the
// provider, naming the id.
AppearanceTrainResult train_appearance(const std::vector<DetectionClip>& clips,
                                       const ScorerParams& scorer, const AppearanceHead& init,
                                       const EmbeddingProvider& embeddings,
                                       const TrainConfig& cfg);

}  // namespace emtrack
