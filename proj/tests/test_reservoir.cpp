#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scalesn/reservoir.hpp"
#include "scalesn/rng.hpp"

using namespace scalesn;

namespace {

SpMat<double> diag_sparse(std::initializer_list<double> d) {
  SpMat<double> m(Index(d.size()), Index(d.size()));
  Index i = 0;
  for (double v : d) m.insert(i, i) = v, ++i;
  m.makeCompressed();
  return m;
}

Mat<double> random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-1, 1);
  Mat<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("scaling a diagonal matrix to a target spectral radius") {
  auto m = diag_sparse({0.5, 0.25});
  scale_to_spectral_radius(m, 0.84);
  CHECK(m.coeff(0, 0) == doctest::Approx(0.84).epsilon(1e-9));
  CHECK(m.coeff(1, 1) == doctest::Approx(0.42).epsilon(1e-9));
}

TEST_CASE("spectral radius: identity and nilpotent") {
  SpMat<double> eye(3, 3);
  eye.setIdentity();
  CHECK(spectral_radius(eye) == doctest::Approx(1.0).epsilon(1e-10));

  SpMat<double> nil(2, 2);
  nil.insert(0, 1) = 1.0;
  nil.makeCompressed();
  CHECK(spectral_radius(nil) == doctest::Approx(0.0));
}

TEST_CASE("spectral radius matches a dense eigensolve on random matrices") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Mat<double> m = random_matrix(8, 8, seed);
    Eigen::EigenSolver<Mat<double>> solver(m, false);
    const double oracle = solver.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(spectral_radius(m) == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("generate_weights: sparsity, determinism, spectral round trip") {
  const auto w = generate_weights<double>(1000, 1, 0.015, 0.84, 1.0, 77);
  // 3-sigma binomial band around 15000 nonzeros.
  CHECK(w.recurrent.nonZeros() >= 13500);
  CHECK(w.recurrent.nonZeros() <= 16500);
  CHECK(w.input.rows() == 1000);
  CHECK(w.bias.size() == 1000);

  const double measured = spectral_radius(w.recurrent);
  CHECK(measured >= 0.84 * (1 - 1e-5));
  CHECK(measured <= 0.84 * (1 + 1e-5));

  const auto w2 = generate_weights<double>(1000, 1, 0.015, 0.84, 1.0, 77);
  CHECK(Mat<double>(w.recurrent) == Mat<double>(w2.recurrent));
  CHECK(w.input == w2.input);
  CHECK(w.bias == w2.bias);

  const auto w3 = generate_weights<double>(1000, 1, 0.015, 0.84, 1.0, 78);
  CHECK(Mat<double>(w.recurrent) != Mat<double>(w3.recurrent));
}

TEST_CASE("generate_weights: an empty draw with rho > 0 is an error") {
  CHECK_THROWS_WITH_AS(generate_weights<double>(4, 1, 1e-12, 0.9, 1.0, 5),
                       doctest::Contains("degenerate"), std::runtime_error);
}

TEST_CASE("desn_step") {
  WeightSet<double> w;
  w.recurrent = diag_sparse({0.5});
  w.input = Mat<double>::Constant(1, 1, 1.0);
  w.bias = Vec<double>::Constant(1, 0.1);

  SUBCASE("zero state, zero input, zero bias stays at zero") {
    w.bias.setZero();
    Vec<double> zero = Vec<double>::Zero(1);
    const auto next = desn_step(zero, zero, 0.0, w, 0.75, 0.176, 1.24);
    CHECK(next[0] == 0.0);
  }

  SUBCASE("leak 1, feedback 0 is the identity") {
    Vec<double> current = Vec<double>::Constant(1, 0.3);
    Vec<double> delayed = Vec<double>::Constant(1, -0.9);
    const auto next = desn_step(current, delayed, 5.0, w, 1.0, 0.0, 1.24);
    CHECK(next[0] == 0.3);
  }

  SUBCASE("scalar network against a hand evaluation") {
    Vec<double> current = Vec<double>::Constant(1, 0.2);
    Vec<double> delayed = Vec<double>::Constant(1, 0.4);
    const auto next = desn_step(current, delayed, 0.3, w, 0.75, 0.176, 1.24);
    const double expected = 0.75 * 0.2 + 0.176 * std::tanh(0.5 * 0.4 + 1.24 * 0.3 + 0.1);
    CHECK(next[0] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("desn_step obeys the tanh bound |x'| <= leak*|x| + |feedback|") {
  const auto w = generate_weights<double>(50, 1, 0.2, 1.5, 1.0, 3);
  Rng rng(11);
  std::uniform_real_distribution<double> dist(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    Vec<double> current(50), delayed(50);
    for (Index i = 0; i < 50; ++i) current[i] = dist(rng), delayed[i] = dist(rng);
    const double input = dist(rng) * 100;
    const auto next = desn_step(current, delayed, input, w, 0.75, 0.176, 1.24);
    for (Index i = 0; i < 50; ++i)
      CHECK(std::abs(next[i]) <= 0.75 * std::abs(current[i]) + 0.176 + 1e-12);
  }
}

TEST_CASE("ridge_fit: exact recovery at lambda = 0") {
  const Mat<double> states = random_matrix(40, 6, 21);
  const Mat<double> gain = random_matrix(2, 6, 22);
  const Mat<double> targets = states * gain.transpose();
  const Mat<double> readout = ridge_fit(states, targets, 0.0);
  CHECK((readout - gain).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ridge_fit: huge lambda shrinks the readout to zero") {
  const Mat<double> states = random_matrix(40, 6, 31);
  const Mat<double> targets = random_matrix(40, 2, 32);
  const Mat<double> readout = ridge_fit(states, targets, 1e12);
  CHECK(readout.norm() < 1e-6);
}

TEST_CASE("ridge_fit agrees with the explicit normal-equations oracle") {
  const Mat<double> states = random_matrix(5, 3, 41);
  const Mat<double> targets = random_matrix(5, 2, 42);
  const double lambda = 0.37;
  // Oracle: direct inverse of (S^T S + lambda I).
  const Mat<double> gram =
      states.transpose() * states + lambda * Mat<double>::Identity(3, 3);
  const Mat<double> oracle = (gram.inverse() * states.transpose() * targets).transpose();
  const Mat<double> readout = ridge_fit(states, targets, lambda);
  CHECK((readout - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ridge_fit: singular system at lambda = 0 advises regularizing") {
  Mat<double> states = random_matrix(6, 3, 51);
  states.col(2) = states.col(1);  // rank deficient
  const Mat<double> targets = random_matrix(6, 1, 52);
  CHECK_THROWS_WITH_AS(ridge_fit(states, targets, 0.0),
                       doctest::Contains("lambda > 0"), std::runtime_error);
}

TEST_CASE("ridge_fit residual satisfies the regularized normal equations") {
  for (std::uint64_t seed = 60; seed < 66; ++seed) {
    const Mat<double> states = random_matrix(30, 8, seed);
    const Mat<double> targets = random_matrix(30, 3, seed + 100);
    const double lambda = 1e-6;
    const Mat<double> readout = ridge_fit(states, targets, lambda);
    const Mat<double> gram =
        states.transpose() * states + lambda * Mat<double>::Identity(8, 8);
    const Mat<double> lhs = gram * readout.transpose();
    const Mat<double> rhs = states.transpose() * targets;
    CHECK((lhs - rhs).norm() <= 1e-8 * rhs.norm());
  }
}

TEST_CASE("streaming accumulator matches the one-shot fit") {
  const Mat<double> states = random_matrix(64, 7, 71);
  const Mat<double> targets = random_matrix(64, 2, 72);
  RidgeAccumulator<double> acc(7, 2);
  acc.add_block(states.topRows(20), targets.topRows(20));
  acc.add_block(states.middleRows(20, 30), targets.middleRows(20, 30));
  for (Index i = 50; i < 64; ++i)
    acc.add(states.row(i).transpose(), targets.row(i).transpose());
  CHECK(acc.count() == 64);
  const Mat<double> a = acc.solve(1e-3);
  const Mat<double> b = ridge_fit(states, targets, 1e-3);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}
