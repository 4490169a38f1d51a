#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "emtrack/errors.hpp"
#include "emtrack/rng.hpp"
#include "emtrack/sinkhorn.hpp"

using namespace emtrack;

TEST_CASE("2x2 fixed point has a closed form") {
  // limit is [[p, 1-p], [1-p, p]] with p = sigmoid((a + d - b - c) / 2)
  Eigen::MatrixXd s(2, 2);
  s << 1.2, -0.7, 0.4, 2.5;
  auto sp = sinkhorn_normalize(s);
  CHECK(sp.a(0, 0) == doctest::Approx(0.88079707797788231).epsilon(1e-12));
  CHECK(sp.a(1, 1) == doctest::Approx(0.88079707797788231).epsilon(1e-12));
  CHECK(sp.a(0, 1) == doctest::Approx(1.0 - 0.88079707797788231).epsilon(1e-12));
  CHECK(sp.max_dev < 1e-13);
}

TEST_CASE("3x3 fixed point matches long-run normalization") {
  Eigen::MatrixXd s(3, 3);
  s << 0.5, -1.0, 2.0, 1.5, 0.0, -0.5, -2.0, 1.0, 0.3;
  Eigen::MatrixXd want(3, 3);
  want << 0.22945093567183109, 0.059728997936431549, 0.71082006639173734,
      0.73862786806747127, 0.19227423186755377, 0.069097900064975015,
      0.031921196260697698, 0.74799677019601463, 0.22008203354328768;
  auto sp = sinkhorn_normalize(s);
  CHECK((sp.a - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("output is doubly stochastic for adversarial random scores") {
  Rng rng(99);
  for (int rep = 0; rep < 60; ++rep) {
    int k = rng.uniform_int(2, 32);
    Eigen::MatrixXd s(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) s(i, j) = rng.uniform(-20.0, 20.0);
    auto sp = sinkhorn_normalize(s);
    CHECK(sp.max_dev < 1e-6);
    CHECK(sp.a.minCoeff() >= 0.0);
    CHECK(sp.sweeps >= 20);
  }
}

TEST_CASE("sweeps respect the floor") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);  // already balanced
  auto sw = sinkhorn_log_sweeps(s, 7, 1e-14, 100);
  CHECK(sw.sweeps == 7);
  auto sp = sinkhorn_normalize(s, 5);
  CHECK(sp.sweeps >= 5);
  CHECK((sp.a - Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("single entry normalizes to one") {
  Eigen::MatrixXd s(1, 1);
  s << -7.3;
  auto sp = sinkhorn_normalize(s);
  CHECK(sp.a(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("invariant to rank-one log shifts") {
  // adding r_i + c_j to entry (i, j) is absorbed by the scaling vectors
  Rng rng(5);
  Eigen::MatrixXd s(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s(i, j) = rng.uniform(-3.0, 3.0);
  Eigen::MatrixXd shifted = s;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) shifted(i, j) += (1.5 * i - 0.3) + (0.8 * j + 2.0);
  auto a = sinkhorn_normalize(s);
  auto b = sinkhorn_normalize(shifted);
  CHECK((a.a - b.a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("repeated runs are bitwise identical") {
  Rng rng(13);
  Eigen::MatrixXd s(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) s(i, j) = rng.uniform(-10.0, 10.0);
  auto a = sinkhorn_normalize(s);
  auto b = sinkhorn_normalize(s);
  CHECK(a.sweeps == b.sweeps);
  CHECK(a.polish_steps == b.polish_steps);
  CHECK((a.a - b.a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(sinkhorn_normalize(Eigen::MatrixXd(0, 0)), DimensionError);
  CHECK_THROWS_AS(sinkhorn_normalize(Eigen::MatrixXd::Zero(2, 3)),
                  DimensionError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(sinkhorn_normalize(bad), NumericalError);
}

TEST_CASE("compose_transport flips orientation and chains") {
  // hard 2x2 swap as a soft permutation
  Eigen::MatrixXd swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  Eigen::MatrixXd p1 = Eigen::MatrixXd::Identity(2, 2);
  // after one swap, current detection 0 sits in slot 1
  Eigen::MatrixXd p2 = compose_transport(swap, p1);
  CHECK(p2(0, 1) == 1.0);
  CHECK(p2(1, 0) == 1.0);
  // swapping again restores identity
  Eigen::MatrixXd p3 = compose_transport(swap, p2);
  CHECK((p3 - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("logsumexp helpers match direct evaluation") {
  Eigen::MatrixXd l(2, 2);
  l << 1.0, 2.0, 3.0, -1000.0;
  Eigen::VectorXd r = row_logsumexp(l);
  CHECK(r(0) == doctest::Approx(std::log(std::exp(1.0) + std::exp(2.0)))
                    .epsilon(1e-14));
  CHECK(r(1) == doctest::Approx(3.0).epsilon(1e-14));
  Eigen::RowVectorXd c = col_logsumexp(l);
  CHECK(c(0) == doctest::Approx(std::log(std::exp(1.0) + std::exp(3.0)))
                    .epsilon(1e-14));
  CHECK(c(1) == doctest::Approx(2.0).epsilon(1e-14));
}
