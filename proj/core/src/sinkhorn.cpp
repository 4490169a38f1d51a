#include "emtrack/sinkhorn.hpp"

#include <cmath>
#include <limits>

#include "emtrack/errors.hpp"

namespace emtrack {

double max_ds_deviation(const Eigen::MatrixXd& a) {
  double r = (a.rowwise().sum().array() - 1.0).abs().maxCoeff();
  double c = (a.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(r, c);
}

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& l) {
  Eigen::VectorXd m = l.rowwise().maxCoeff();
  Eigen::VectorXd sums =
      (l.colwise() - m).array().exp().matrix().rowwise().sum();
  return m.array() + sums.array().log();
}

Eigen::RowVectorXd col_logsumexp(const Eigen::MatrixXd& l) {
  Eigen::RowVectorXd m = l.colwise().maxCoeff();
  Eigen::RowVectorXd sums =
      (l.rowwise() - m).array().exp().matrix().colwise().sum();
  return m.array() + sums.array().log();
}

namespace {

void check_score_matrix(const Eigen::MatrixXd& s) {
  if (s.rows() == 0 || s.cols() == 0)
    throw DimensionError("empty score matrix");
  if (s.rows() != s.cols())
    throw DimensionError("score matrix must be square");
  if (!s.allFinite())
    throw NumericalError("score matrix has non-finite entries");
}

}  // namespace

SinkhornSweeps sinkhorn_log_sweeps(const Eigen::MatrixXd& s, int min_sweeps,
                                   double tol, int max_sweeps) {
  check_score_matrix(s);
  SinkhornSweeps out;
  out.log_a = s;
  out.max_dev = std::numeric_limits<double>::infinity();
  while (out.sweeps < max_sweeps) {
    Eigen::VectorXd rl = row_logsumexp(out.log_a);
    out.log_a.colwise() -= rl;
    Eigen::RowVectorXd cl = col_logsumexp(out.log_a);
    out.log_a.rowwise() -= cl;
    ++out.sweeps;
    if (out.sweeps >= min_sweeps) {
      out.max_dev = max_ds_deviation(out.log_a.array().exp());
      if (out.max_dev <= tol) break;
    }
  }
  if (!std::isfinite(out.max_dev))
    out.max_dev = max_ds_deviation(out.log_a.array().exp());
  return out;
}

SoftPermutation sinkhorn_normalize(const Eigen::MatrixXd& s, int iters) {
  if (iters < 1) throw DimensionError("sinkhorn iteration floor must be >= 1");
  const double target = 1e-13;
  auto sw = sinkhorn_log_sweeps(s, iters, target, iters + 60);

  const auto k = s.rows();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
  double dev = sw.max_dev;
  int newton = 0;

  auto scaled = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& vv) {
    Eigen::MatrixXd x = sw.log_a;
    x.colwise() += uu;
    x.rowwise() += vv.transpose();
    return Eigen::MatrixXd(x.array().exp());
  };

  Eigen::MatrixXd x = scaled(u, v);
  while (dev > target && newton < 60) {
    Eigen::VectorXd rs = x.rowwise().sum();
    Eigen::VectorXd cs = x.colwise().sum();
    Eigen::VectorXd g(2 * k);
    g.head(k) = rs.array() - 1.0;
    g.tail(k) = cs.array() - 1.0;
    double gn = g.norm();

    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    hess.topLeftCorner(k, k).diagonal() = rs;
    hess.topRightCorner(k, k) = x;
    hess.bottomLeftCorner(k, k) = x.transpose();
    hess.bottomRightCorner(k, k).diagonal() = cs;
    // the (u+c, v-c) gauge direction makes the Hessian singular
    hess.diagonal().array() += 1e-12 * rs.maxCoeff();

    Eigen::VectorXd p = hess.ldlt().solve(-g);
    double alpha = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd ut = u + alpha * p.head(k);
      Eigen::VectorXd vt = v + alpha * p.tail(k);
      Eigen::MatrixXd xt = scaled(ut, vt);
      Eigen::VectorXd gt(2 * k);
      gt.head(k) = xt.rowwise().sum().array() - 1.0;
      gt.tail(k) = xt.colwise().sum().array() - 1.0;
      if (gt.norm() <= (1.0 - 1e-4 * alpha) * gn) {
        u = ut;
        v = vt;
        x = xt;
        break;
      }
      alpha *= 0.5;
    }
    dev = max_ds_deviation(x);
    ++newton;
  }

  if (dev > 1e-8)
    throw NumericalError("sinkhorn normalization failed to converge");

  SoftPermutation out;
  out.a = x;
  out.sweeps = sw.sweeps;
  out.polish_steps = newton;
  out.max_dev = dev;
  return out;
}

Eigen::MatrixXd compose_transport(const Eigen::MatrixXd& a_cur,
                                  const Eigen::MatrixXd& p_prev) {
  if (a_cur.rows() != p_prev.rows())
    throw DimensionError("compose_transport dimension mismatch");
  return a_cur.transpose() * p_prev;
}

}  // namespace emtrack
