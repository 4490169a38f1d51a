#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "emtrack/rng.hpp"

namespace emtrack {

// Linear projection over externally supplied embeddings; outputs are
// L2-normalized so cosine similarity is a dot product.
struct AppearanceHead {
  Eigen::MatrixXd proj;  // out_dim x embed_dim

  int out_dim() const { return static_cast<int>(proj.rows()); }
  int embed_dim() const { return static_cast<int>(proj.cols()); }
  void check() const;
};

AppearanceHead init_appearance(int out_dim, int embed_dim, Rng& rng);

// proj * e scaled to unit norm
Eigen::VectorXd apply_head(const AppearanceHead& head, const Eigen::VectorXd& e);

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// u_ij = softmax over j of cosine(head(cur_i), head(ref_j)); rows are
// current-frame detections, columns reference-frame detections.
Eigen::MatrixXd appearance_matrix(const AppearanceHead& head,
                                  const Eigen::MatrixXd& cur,   // e x K
                                  const Eigen::MatrixXd& ref);  // e x K

// Σ p log(p/u) with 0 log 0 = 0. Throws on negative p, shape mismatch, or
// u = 0 where p > 0.
double kl_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& u);

// momentum-weighted blend of a track embedding with a new one, unit-norm
Eigen::VectorXd ema_update(const Eigen::VectorXd& track_emb,
                           const Eigen::VectorXd& det_emb, double momentum);

// Resolves crop-ids to embedding vectors.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Eigen::VectorXd embed(const std::string& crop_id) const = 0;
  virtual int dim() const = 0;
};

class MapEmbeddingProvider : public EmbeddingProvider {
 public:
  MapEmbeddingProvider() = default;
  explicit MapEmbeddingProvider(
      const std::vector<std::pair<std::string, Eigen::VectorXd>>& entries);

  void insert(const std::string& crop_id, const Eigen::VectorXd& e);
  Eigen::VectorXd embed(const std::string& crop_id) const override;
  int dim() const override { return dim_; }
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, Eigen::VectorXd> map_;
  int dim_ = 0;
};

}  // namespace emtrack
