#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace emtrack::ad {

// Handle to a tape node; plain index, cheap to copy.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over dense matrix values. Operations compute eagerly on
// record; backward() replays adjoints in reverse order. Matrices are the
// atoms, so a training step stays at a few thousand nodes instead of millions
// of scalar ones.
class Tape {
 public:
  Var leaf(const Eigen::MatrixXd& v);      // differentiable input
  Var constant(const Eigen::MatrixXd& v);  // no gradient flows in
  Var constant_scalar(double s);           // 1x1 constant

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var scalar_mul(Var a, double s);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add_colvec(Var m, Var v);  // v is rows(m) x 1, added to every column
  Var sub_colvec(Var m, Var v);
  Var sub_rowvec(Var m, Var v);  // v is 1 x cols(m)
  Var relu(Var a);               // derivative at 0 is 0
  Var exp(Var a);
  Var row_lse(Var a);  // rows(a) x 1 log-sum-exp over each row
  Var col_lse(Var a);  // 1 x cols(a)
  Var kron_const(Var p, const Eigen::MatrixXd& b);  // p ⊗ b, b constant
  Var spd_solve(Var a, Var b);                      // a^{-1} b, a SPD
  Var logdet_spd(Var a);                            // 1x1
  Var reshape(Var a, int rows, int cols);           // row-major reinterpret
  Var mul_elem_const(Var a, const Eigen::MatrixXd& c);
  Var sum_all(Var a);  // 1x1
  Var symmetrize(Var a);
  Var colwise_normalize(Var a);  // each column scaled to unit length

  const Eigen::MatrixXd& value(Var v) const;
  const Eigen::MatrixXd& adjoint(Var v) const;

  // Seeds the (1x1) root with 1 and sweeps the tape in reverse.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kConstant,
    kAdd,
    kSub,
    kNeg,
    kScalarMul,
    kMatMul,
    kTranspose,
    kAddColVec,
    kSubColVec,
    kSubRowVec,
    kRelu,
    kExp,
    kRowLse,
    kColLse,
    kKronConst,
    kSpdSolve,
    kLogDetSpd,
    kReshape,
    kMulElemConst,
    kSumAll,
    kSymmetrize,
    kColwiseNormalize,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double scalar = 0.0;
    Eigen::MatrixXd value;
    Eigen::MatrixXd attr;
    std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> llt;
  };

  Var push(Node n);
  const Eigen::MatrixXd& val(Var v) const;
  Eigen::MatrixXd& adj(int idx);
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Eigen::MatrixXd> adjoints_;
};

}  // namespace emtrack::ad
