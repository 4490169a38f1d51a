#include "emtrack/appearance.hpp"

#include <cmath>

#include "emtrack/errors.hpp"
#include "emtrack/sinkhorn.hpp"

namespace emtrack {

void AppearanceHead::check() const {
  if (proj.rows() < 1 || proj.cols() < 1)
    throw DimensionError("appearance head projection is empty");
}

AppearanceHead init_appearance(int out_dim, int embed_dim, Rng& rng) {
  if (out_dim < 1 || embed_dim < 1)
    throw DimensionError("appearance head needs positive dimensions");
  AppearanceHead head;
  double s = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  head.proj.resize(out_dim, embed_dim);
  for (int i = 0; i < out_dim; ++i)
    for (int j = 0; j < embed_dim; ++j) head.proj(i, j) = rng.uniform(-s, s);
  return head;
}

Eigen::VectorXd apply_head(const AppearanceHead& head,
                           const Eigen::VectorXd& e) {
  head.check();
  if (e.size() != head.embed_dim())
    throw DimensionError("embedding dimension does not match the head");
  Eigen::VectorXd y = head.proj * e;
  double n = y.norm();
  if (n == 0.0) throw NumericalError("appearance projection collapsed to zero");
  return y / n;
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw DimensionError("cosine dimension mismatch");
  double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0)
    throw NumericalError("cosine of a zero vector");
  return u.dot(v) / (nu * nv);
}

Eigen::MatrixXd appearance_matrix(const AppearanceHead& head,
                                  const Eigen::MatrixXd& cur,
                                  const Eigen::MatrixXd& ref) {
  if (cur.rows() != head.embed_dim() || ref.rows() != head.embed_dim())
    throw DimensionError("embedding matrices do not match the head");
  if (cur.cols() != ref.cols())
    throw DimensionError("appearance_matrix needs equal detection counts");
  const auto k = cur.cols();
  Eigen::MatrixXd c(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd yi = apply_head(head, cur.col(i));
    for (Eigen::Index j = 0; j < k; ++j)
      c(i, j) = yi.dot(apply_head(head, ref.col(j)));
  }
  // row softmax
  Eigen::MatrixXd logu = c;
  logu.colwise() -= row_logsumexp(c);
  return logu.array().exp().matrix();
}

double kl_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& u) {
  if (p.rows() != u.rows() || p.cols() != u.cols())
    throw DimensionError("kl_loss shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      double pij = p(i, j);
      if (pij < 0.0) throw NumericalError("kl_loss needs non-negative p");
      if (pij == 0.0) continue;
      if (u(i, j) <= 0.0)
        throw NumericalError("kl_loss is infinite: u vanishes where p > 0");
      total += pij * std::log(pij / u(i, j));
    }
  }
  return total;
}

Eigen::VectorXd ema_update(const Eigen::VectorXd& track_emb,
                           const Eigen::VectorXd& det_emb, double momentum) {
  if (track_emb.size() != det_emb.size())
    throw DimensionError("ema_update dimension mismatch");
  Eigen::VectorXd mixed = momentum * track_emb + (1.0 - momentum) * det_emb;
  double n = mixed.norm();
  if (n == 0.0) throw NumericalError("ema_update collapsed to zero");
  return mixed / n;
}

MapEmbeddingProvider::MapEmbeddingProvider(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& entries) {
  for (const auto& [id, e] : entries) insert(id, e);
}

void MapEmbeddingProvider::insert(const std::string& crop_id,
                                  const Eigen::VectorXd& e) {
  if (dim_ == 0) dim_ = static_cast<int>(e.size());
  if (e.size() != dim_)
    throw DimensionError("embedding dimension changed mid-stream");
  if (!map_.emplace(crop_id, e).second)
    throw ParseError("duplicate crop id: " + crop_id);
}

Eigen::VectorXd MapEmbeddingProvider::embed(const std::string& crop_id) const {
  auto it = map_.find(crop_id);
  if (it == map_.end()) throw IoError("unknown crop id: " + crop_id);
  return it->second;
}

}  // namespace emtrack
