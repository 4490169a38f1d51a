#include "emtrack/autodiff.hpp"

#include <cmath>

#include "emtrack/errors.hpp"
#include "emtrack/gaussian.hpp"
#include "emtrack/sinkhorn.hpp"

namespace emtrack::ad {

void Tape::check(Var v) const {
  if (!v.valid() || v.idx >= static_cast<int>(nodes_.size()))
    throw DimensionError("tape variable does not belong to this tape");
}

Var Tape::push(Node n) {
  if (!n.value.allFinite())
    throw NumericalError("non-finite value on the tape");
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Eigen::MatrixXd& Tape::val(Var v) const { return nodes_[v.idx].value; }

const Eigen::MatrixXd& Tape::value(Var v) const {
  check(v);
  return nodes_[v.idx].value;
}

const Eigen::MatrixXd& Tape::adjoint(Var v) const {
  check(v);
  if (adjoints_.size() != nodes_.size() || adjoints_[v.idx].size() == 0)
    throw NumericalError("adjoint not computed; call backward first");
  return adjoints_[v.idx];
}

Eigen::MatrixXd& Tape::adj(int idx) {
  if (adjoints_[idx].size() == 0)
    adjoints_[idx] =
        Eigen::MatrixXd::Zero(nodes_[idx].value.rows(), nodes_[idx].value.cols());
  return adjoints_[idx];
}

Var Tape::leaf(const Eigen::MatrixXd& v) {
  Node n;
  n.op = Op::kLeaf;
  n.value = v;
  return push(std::move(n));
}

Var Tape::constant(const Eigen::MatrixXd& v) {
  Node n;
  n.op = Op::kConstant;
  n.value = v;
  return push(std::move(n));
}

Var Tape::constant_scalar(double s) {
  return constant(Eigen::MatrixXd::Constant(1, 1, s));
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw DimensionError("add shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a.idx;
  n.b = b.idx;
  n.value = val(a) + val(b);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw DimensionError("sub shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.a = a.idx;
  n.b = b.idx;
  n.value = val(a) - val(b);
  return push(std::move(n));
}

Var Tape::neg(Var a) {
  check(a);
  Node n;
  n.op = Op::kNeg;
  n.a = a.idx;
  n.value = -val(a);
  return push(std::move(n));
}

Var Tape::scalar_mul(Var a, double s) {
  check(a);
  Node n;
  n.op = Op::kScalarMul;
  n.a = a.idx;
  n.scalar = s;
  n.value = s * val(a);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  if (val(a).cols() != val(b).rows())
    throw DimensionError("matmul inner dimension mismatch");
  Node n;
  n.op = Op::kMatMul;
  n.a = a.idx;
  n.b = b.idx;
  n.value = val(a) * val(b);
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  check(a);
  Node n;
  n.op = Op::kTranspose;
  n.a = a.idx;
  n.value = val(a).transpose();
  return push(std::move(n));
}

Var Tape::add_colvec(Var m, Var v) {
  check(m);
  check(v);
  if (val(v).cols() != 1 || val(v).rows() != val(m).rows())
    throw DimensionError("add_colvec needs a rows(m) x 1 vector");
  Node n;
  n.op = Op::kAddColVec;
  n.a = m.idx;
  n.b = v.idx;
  n.value = val(m).colwise() + Eigen::VectorXd(val(v).col(0));
  return push(std::move(n));
}

Var Tape::sub_colvec(Var m, Var v) {
  check(m);
  check(v);
  if (val(v).cols() != 1 || val(v).rows() != val(m).rows())
    throw DimensionError("sub_colvec needs a rows(m) x 1 vector");
  Node n;
  n.op = Op::kSubColVec;
  n.a = m.idx;
  n.b = v.idx;
  n.value = val(m).colwise() - Eigen::VectorXd(val(v).col(0));
  return push(std::move(n));
}

Var Tape::sub_rowvec(Var m, Var v) {
  check(m);
  check(v);
  if (val(v).rows() != 1 || val(v).cols() != val(m).cols())
    throw DimensionError("sub_rowvec needs a 1 x cols(m) vector");
  Node n;
  n.op = Op::kSubRowVec;
  n.a = m.idx;
  n.b = v.idx;
  n.value = val(m).rowwise() - Eigen::RowVectorXd(val(v).row(0));
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  check(a);
  Node n;
  n.op = Op::kRelu;
  n.a = a.idx;
  n.value = val(a).cwiseMax(0.0);
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  check(a);
  Node n;
  n.op = Op::kExp;
  n.a = a.idx;
  n.value = val(a).array().exp().matrix();
  return push(std::move(n));
}

Var Tape::row_lse(Var a) {
  check(a);
  Node n;
  n.op = Op::kRowLse;
  n.a = a.idx;
  n.value = row_logsumexp(val(a));
  return push(std::move(n));
}

Var Tape::col_lse(Var a) {
  check(a);
  Node n;
  n.op = Op::kColLse;
  n.a = a.idx;
  n.value = col_logsumexp(val(a));
  return push(std::move(n));
}

Var Tape::kron_const(Var p, const Eigen::MatrixXd& b) {
  check(p);
  const auto& pv = val(p);
  Node n;
  n.op = Op::kKronConst;
  n.a = p.idx;
  n.attr = b;
  n.value.resize(pv.rows() * b.rows(), pv.cols() * b.cols());
  for (Eigen::Index i = 0; i < pv.rows(); ++i)
    for (Eigen::Index j = 0; j < pv.cols(); ++j)
      n.value.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          pv(i, j) * b;
  return push(std::move(n));
}

Var Tape::spd_solve(Var a, Var b) {
  check(a);
  check(b);
  if (val(a).rows() != val(b).rows())
    throw DimensionError("spd_solve dimension mismatch");
  Node n;
  n.op = Op::kSpdSolve;
  n.a = a.idx;
  n.b = b.idx;
  n.llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(spd_factor(val(a)));
  n.value = n.llt->solve(val(b));
  return push(std::move(n));
}

Var Tape::logdet_spd(Var a) {
  check(a);
  Node n;
  n.op = Op::kLogDetSpd;
  n.a = a.idx;
  n.llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(spd_factor(val(a)));
  double ld =
      2.0 * n.llt->matrixL().toDenseMatrix().diagonal().array().log().sum();
  n.value = Eigen::MatrixXd::Constant(1, 1, ld);
  return push(std::move(n));
}

Var Tape::reshape(Var a, int rows, int cols) {
  check(a);
  const auto& av = val(a);
  if (av.size() != static_cast<Eigen::Index>(rows) * cols)
    throw DimensionError("reshape element count mismatch");
  Node n;
  n.op = Op::kReshape;
  n.a = a.idx;
  n.value.resize(rows, cols);
  const auto in_cols = av.cols();
  for (Eigen::Index f = 0; f < av.size(); ++f)
    n.value(f / cols, f % cols) = av(f / in_cols, f % in_cols);
  return push(std::move(n));
}

Var Tape::mul_elem_const(Var a, const Eigen::MatrixXd& c) {
  check(a);
  if (val(a).rows() != c.rows() || val(a).cols() != c.cols())
    throw DimensionError("mul_elem_const shape mismatch");
  Node n;
  n.op = Op::kMulElemConst;
  n.a = a.idx;
  n.attr = c;
  n.value = val(a).cwiseProduct(c);
  return push(std::move(n));
}

Var Tape::sum_all(Var a) {
  check(a);
  Node n;
  n.op = Op::kSumAll;
  n.a = a.idx;
  n.value = Eigen::MatrixXd::Constant(1, 1, val(a).sum());
  return push(std::move(n));
}

Var Tape::symmetrize(Var a) {
  check(a);
  if (val(a).rows() != val(a).cols())
    throw DimensionError("symmetrize needs a square matrix");
  Node n;
  n.op = Op::kSymmetrize;
  n.a = a.idx;
  n.value = 0.5 * (val(a) + val(a).transpose());
  return push(std::move(n));
}

Var Tape::colwise_normalize(Var a) {
  check(a);
  Node n;
  n.op = Op::kColwiseNormalize;
  n.a = a.idx;
  n.value = val(a);
  for (Eigen::Index j = 0; j < n.value.cols(); ++j) {
    double norm = n.value.col(j).norm();
    if (norm == 0.0)
      throw NumericalError("colwise_normalize hit a zero column");
    n.value.col(j) /= norm;
  }
  return push(std::move(n));
}

void Tape::backward(Var root) {
  check(root);
  const Node& r = nodes_[root.idx];
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw DimensionError("backward root must be 1x1");

  adjoints_.assign(nodes_.size(), Eigen::MatrixXd());
  adj(root.idx)(0, 0) = 1.0;

  for (int i = root.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.op == Op::kLeaf || n.op == Op::kConstant) continue;
    if (adjoints_[i].size() == 0) continue;  // not on a path to the root
    const Eigen::MatrixXd& g = adjoints_[i];
    auto skip = [&](int idx) { return nodes_[idx].op == Op::kConstant; };

    switch (n.op) {
      case Op::kAdd:
        if (!skip(n.a)) adj(n.a) += g;
        if (!skip(n.b)) adj(n.b) += g;
        break;
      case Op::kSub:
        if (!skip(n.a)) adj(n.a) += g;
        if (!skip(n.b)) adj(n.b) -= g;
        break;
      case Op::kNeg:
        if (!skip(n.a)) adj(n.a) -= g;
        break;
      case Op::kScalarMul:
        if (!skip(n.a)) adj(n.a) += n.scalar * g;
        break;
      case Op::kMatMul:
        if (!skip(n.a)) adj(n.a) += g * nodes_[n.b].value.transpose();
        if (!skip(n.b)) adj(n.b) += nodes_[n.a].value.transpose() * g;
        break;
      case Op::kTranspose:
        if (!skip(n.a)) adj(n.a) += g.transpose();
        break;
      case Op::kAddColVec:
        if (!skip(n.a)) adj(n.a) += g;
        if (!skip(n.b)) adj(n.b) += g.rowwise().sum();
        break;
      case Op::kSubColVec:
        if (!skip(n.a)) adj(n.a) += g;
        if (!skip(n.b)) adj(n.b) -= g.rowwise().sum();
        break;
      case Op::kSubRowVec:
        if (!skip(n.a)) adj(n.a) += g;
        if (!skip(n.b)) adj(n.b) -= g.colwise().sum();
        break;
      case Op::kRelu:
        if (!skip(n.a))
          adj(n.a) +=
              g.cwiseProduct((nodes_[n.a].value.array() > 0.0).cast<double>().matrix());
        break;
      case Op::kExp:
        if (!skip(n.a)) adj(n.a) += g.cwiseProduct(n.value);
        break;
      case Op::kRowLse:
        if (!skip(n.a)) {
          const Eigen::MatrixXd& in = nodes_[n.a].value;
          Eigen::MatrixXd soft =
              (in.colwise() - Eigen::VectorXd(n.value.col(0))).array().exp();
          adj(n.a) += (soft.array().colwise() * g.col(0).array()).matrix();
        }
        break;
      case Op::kColLse:
        if (!skip(n.a)) {
          const Eigen::MatrixXd& in = nodes_[n.a].value;
          Eigen::MatrixXd soft =
              (in.rowwise() - Eigen::RowVectorXd(n.value.row(0))).array().exp();
          adj(n.a) += (soft.array().rowwise() * g.row(0).array()).matrix();
        }
        break;
      case Op::kKronConst:
        if (!skip(n.a)) {
          const Eigen::MatrixXd& b = n.attr;
          Eigen::MatrixXd& pa = adj(n.a);
          for (Eigen::Index bi = 0; bi < pa.rows(); ++bi)
            for (Eigen::Index bj = 0; bj < pa.cols(); ++bj)
              pa(bi, bj) +=
                  g.block(bi * b.rows(), bj * b.cols(), b.rows(), b.cols())
                      .cwiseProduct(b)
                      .sum();
        }
        break;
      case Op::kSpdSolve: {
        Eigen::MatrixXd w = n.llt->solve(g);
        if (!skip(n.b)) adj(n.b) += w;
        if (!skip(n.a)) adj(n.a) -= w * n.value.transpose();
        break;
      }
      case Op::kLogDetSpd:
        if (!skip(n.a)) {
          Eigen::Index k = nodes_[n.a].value.rows();
          adj(n.a) += g(0, 0) * n.llt->solve(Eigen::MatrixXd::Identity(k, k));
        }
        break;
      case Op::kReshape:
        if (!skip(n.a)) {
          Eigen::MatrixXd& pa = adj(n.a);
          const auto in_cols = pa.cols();
          const auto out_cols = n.value.cols();
          for (Eigen::Index f = 0; f < g.size(); ++f)
            pa(f / in_cols, f % in_cols) += g(f / out_cols, f % out_cols);
        }
        break;
      case Op::kMulElemConst:
        if (!skip(n.a)) adj(n.a) += g.cwiseProduct(n.attr);
        break;
      case Op::kSumAll:
        if (!skip(n.a))
          adj(n.a).array() += g(0, 0);
        break;
      case Op::kSymmetrize:
        if (!skip(n.a)) adj(n.a) += 0.5 * (g + g.transpose());
        break;
      case Op::kColwiseNormalize:
        if (!skip(n.a)) {
          const Eigen::MatrixXd& in = nodes_[n.a].value;
          Eigen::MatrixXd& pa = adj(n.a);
          for (Eigen::Index j = 0; j < in.cols(); ++j) {
            double norm = in.col(j).norm();
            Eigen::VectorXd y = n.value.col(j);
            pa.col(j) += (g.col(j) - y * y.dot(g.col(j))) / norm;
          }
        }
        break;
      case Op::kLeaf:
      case Op::kConstant:
        break;
    }
  }
}

}  // namespace emtrack::ad
