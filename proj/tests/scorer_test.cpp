#include <doctest.h>

#include <cmath>

#include "emtrack/errors.hpp"
#include "emtrack/rng.hpp"
#include "emtrack/scorer.hpp"

using namespace emtrack;

namespace {

ScorerParams tiny_params() {
  ScorerParams p;
  p.w1.resize(2, 5);
  p.w1 << 0.1, -0.2, 0.3, 0.0, 0.5, -0.4, 0.1, 0.0, 0.2, -0.1;
  p.b1.resize(2);
  p.b1 << 0.05, -0.15;
  p.w2.resize(1, 2);
  p.w2 << 0.7, -0.6;
  p.b2.resize(1);
  p.b2 << 0.2;
  return p;
}

}  // namespace

TEST_CASE("tiny network forward value") {
  BoundingBox a{10, 20, 4, 8};
  BoundingBox b{13, 26, 5, 6};
  CHECK(score_pair(tiny_params(), a, b) ==
        doctest::Approx(0.24207990188154063).epsilon(1e-14));
}

TEST_CASE("relu clamps negative pre-activations") {
  ScorerParams p = tiny_params();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(5, 1);
  f(0, 0) = -10.0;  // drives unit 0 negative, unit 1 positive
  double h0 = std::max(0.0, p.w1.row(0).dot(f.col(0)) + p.b1(0));
  double h1 = std::max(0.0, p.w1.row(1).dot(f.col(0)) + p.b1(1));
  CHECK(scorer_forward(p, f)(0, 0) ==
        doctest::Approx(p.w2(0, 0) * h0 + p.w2(0, 1) * h1 + p.b2(0))
            .epsilon(1e-14));
  CHECK(h0 == 0.0);
}

TEST_CASE("init bounds and determinism") {
  Rng rng(42);
  auto p = init_scorer(64, rng);
  p.check();
  CHECK(p.w1.rows() == 64);
  double s1 = 1.0 / std::sqrt(5.0);
  double s2 = 1.0 / std::sqrt(64.0);
  CHECK(p.w1.cwiseAbs().maxCoeff() <= s1);
  CHECK(p.b1.cwiseAbs().maxCoeff() <= s1);
  CHECK(p.w2.cwiseAbs().maxCoeff() <= s2);
  CHECK(std::abs(p.b2(0)) <= s2);

  Rng rng2(42);
  auto q = init_scorer(64, rng2);
  CHECK((p.w1 - q.w1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.w2 - q.w2).cwiseAbs().maxCoeff() == 0.0);

  Rng rng3(43);
  auto r = init_scorer(64, rng3);
  CHECK((p.w1 - r.w1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("score matrix agrees with pairwise scoring") {
  Rng rng(7);
  auto p = init_scorer(16, rng);
  std::vector<BoundingBox> prev = {{0, 0, 10, 20}, {50, 40, 12, 24}, {100, 90, 9, 18}};
  std::vector<BoundingBox> cur = {{2, 1, 10, 21}, {52, 44, 12, 23}};
  auto s = score_matrix(p, prev, cur);
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(s(i, j) == doctest::Approx(score_pair(p, prev[i], cur[j]))
                           .epsilon(1e-14));
}

TEST_CASE("shape validation") {
  ScorerParams p = tiny_params();
  p.b1.resize(3);
  CHECK_THROWS_AS(p.check(), DimensionError);
  CHECK_THROWS_AS(score_matrix(tiny_params(), {}, {}), DimensionError);
  CHECK_THROWS_AS(scorer_forward(tiny_params(), Eigen::MatrixXd::Zero(4, 1)),
                  DimensionError);
}
