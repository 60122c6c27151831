#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scalesn/rng.hpp"
#include "scalesn/types.hpp"

namespace scalesn {

/// Random recurrent weights plus input and bias vectors shared by the
/// reservoir pipelines. Immutable after construction; safe to share.
template <class Scalar>
struct WeightSet {
  SpMat<Scalar> recurrent;  ///< K x K, sparse
  Mat<Scalar> input;        ///< K x M
  Vec<Scalar> bias;         ///< K

  Index neurons() const { return recurrent.rows(); }
  Index inputs() const { return input.cols(); }
};

struct SpectralOptions {
  double tolerance = 1e-8;
  Index max_iterations = 50000;
  Index dense_fallback_size = 64;
};

namespace detail {

// Largest |eigenvalue| of the dense matrix, by full eigensolve.
template <class Scalar>
Scalar dense_spectral_radius(const Mat<Scalar>& m) {
  if (m.rows() == 0) return Scalar(0);
  Eigen::EigenSolver<Mat<Scalar>> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Restarted Arnoldi iteration: repeated power steps against an orthonormal
// Krylov basis, restarting from the dominant Ritz direction. Handles the
// complex-conjugate dominant pairs typical of random recurrent matrices.
// Breakdown (the Krylov space closes on an annihilated direction) restarts
// from a fresh random vector before concluding the radius is zero.
template <class Scalar, class Apply>
Scalar iterated_spectral_radius(const Apply& apply, Index n, const SpectralOptions& opts,
                                bool& converged) {
  using Complex = std::complex<Scalar>;
  converged = false;
  if (n == 0) return Scalar(0);
  if (n == 1) {
    Vec<Scalar> e = Vec<Scalar>::Ones(1), r(1);
    apply(e, r);
    converged = true;
    return std::abs(r[0]);
  }

  Rng rng(0x5eed5eedULL);
  std::uniform_real_distribution<Scalar> unit(Scalar(-1), Scalar(1));
  const auto random_unit = [&] {
    Vec<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v[i] = unit(rng);
    v.normalize();
    return v;
  };

  const Index m = std::min<Index>(n, 120);  // Krylov dimension per restart
  Mat<Scalar> basis(n, m + 1);
  Mat<Scalar> hess = Mat<Scalar>::Zero(m + 1, m);
  Vec<Scalar> w(n);

  Vec<Scalar> start = random_unit();
  Scalar estimate = Scalar(0), previous = Scalar(-1);
  int dead_restarts = 0;
  Index matvecs = 0;
  while (matvecs < opts.max_iterations) {
    basis.col(0) = start;
    hess.setZero();
    Index built = 0;
    for (Index j = 0; j < m; ++j) {
      apply(basis.col(j).eval(), w);
      ++matvecs;
      for (Index i = 0; i <= j; ++i) {
        hess(i, j) = basis.col(i).dot(w);
        w -= hess(i, j) * basis.col(i);
      }
      // One reorthogonalization pass keeps the basis clean.
      for (Index i = 0; i <= j; ++i) {
        const Scalar c = basis.col(i).dot(w);
        hess(i, j) += c;
        w -= c * basis.col(i);
      }
      hess(j + 1, j) = w.norm();
      built = j + 1;
      if (hess(j + 1, j) < Scalar(1e-290)) break;  // invariant subspace found
      basis.col(j + 1) = w / hess(j + 1, j);
    }

    Eigen::EigenSolver<Mat<Scalar>> ritz(hess.topLeftCorner(built, built));
    Index best = 0;
    for (Index i = 1; i < built; ++i)
      if (std::abs(ritz.eigenvalues()[i]) > std::abs(ritz.eigenvalues()[best])) best = i;
    estimate = std::abs(ritz.eigenvalues()[best]);
    const bool closed = hess(built, built - 1) < Scalar(1e-290);

    if (closed || built == n) {
      converged = true;
      return estimate;
    }
    if (estimate < Scalar(1e-290)) {
      // Everything in this Krylov space annihilates; a nilpotent-like matrix.
      if (++dead_restarts > 3) {
        converged = true;
        return Scalar(0);
      }
      start = random_unit();
      previous = Scalar(-1);
      continue;
    }
    // Residual of the dominant Ritz pair plus estimate stagnation.
    const Eigen::Matrix<Complex, Eigen::Dynamic, 1> y =
        ritz.eigenvectors().col(best);
    const Scalar residual = hess(built, built - 1) * std::abs(y[built - 1]);
    const bool value_stable =
        previous >= Scalar(0) &&
        std::abs(estimate - previous) <= Scalar(opts.tolerance) * estimate;
    if (value_stable && residual <= Scalar(10 * opts.tolerance) * estimate) {
      converged = true;
      return estimate;
    }
    previous = estimate;

    // Thick restart: combine the four largest Ritz directions so that
    // near-degenerate dominant pairs all stay represented.
    std::array<Index, 4> top{};
    std::array<Scalar, 4> mag{};
    Index kept = 0;
    for (Index i = 0; i < built; ++i) {
      const Scalar a = std::abs(ritz.eigenvalues()[i]);
      for (Index k = 0; k < 4; ++k) {
        if (k >= kept || a > mag[k]) {
          for (Index q = std::min<Index>(kept, 3); q > k; --q)
            top[q] = top[q - 1], mag[q] = mag[q - 1];
          top[k] = i;
          mag[k] = a;
          kept = std::min<Index>(kept + 1, 4);
          break;
        }
      }
    }
    Vec<Scalar> next = Vec<Scalar>::Zero(n);
    for (Index k = 0; k < kept; ++k) {
      Vec<Scalar> dir = Vec<Scalar>::Zero(n);
      const auto& yc = ritz.eigenvectors().col(top[k]);
      for (Index i = 0; i < built; ++i) dir += yc[i].real() * basis.col(i);
      if (dir.norm() < Scalar(1e-290))
        for (Index i = 0; i < built; ++i) dir += yc[i].imag() * basis.col(i);
      const Scalar dn = dir.norm();
      if (dn > Scalar(1e-290)) next += dir / dn;
    }
    const Scalar norm_next = next.norm();
    if (norm_next < Scalar(1e-290)) {
      start = random_unit();
    } else {
      start = next / norm_next;
    }
  }
  return estimate;
}

template <class Scalar, class Apply>
Scalar spectral_radius_impl(const Apply& apply, Index n, const Mat<Scalar>* dense,
                            const SpMat<Scalar>* sparse, const SpectralOptions& opts) {
  bool converged = false;
  const Scalar estimate = iterated_spectral_radius<Scalar>(apply, n, opts, converged);
  if (converged) return estimate;
  if (n <= opts.dense_fallback_size) {
    if (dense) return dense_spectral_radius(*dense);
    return dense_spectral_radius(Mat<Scalar>(*sparse));
  }
  throw std::runtime_error("spectral_radius: no convergence after " +
                           std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace detail

template <class Scalar>
Scalar spectral_radius(const SpMat<Scalar>& m, const SpectralOptions& opts = {}) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
  const auto apply = [&m](const Vec<Scalar>& x, Vec<Scalar>& out) { out.noalias() = m * x; };
  return detail::spectral_radius_impl<Scalar>(apply, m.rows(), nullptr, &m, opts);
}

template <class Scalar>
Scalar spectral_radius(const Mat<Scalar>& m, const SpectralOptions& opts = {}) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
  const auto apply = [&m](const Vec<Scalar>& x, Vec<Scalar>& out) { out.noalias() = m * x; };
  return detail::spectral_radius_impl<Scalar>(apply, m.rows(), &m, nullptr, opts);
}

/// Rescales `m` in place so its spectral radius equals `target`. Refines the
/// scale against repeated measurements until the measured radius sits within
/// 2e-7 of the target, which is what pins the generate/measure round trip.
template <class Scalar>
void scale_to_spectral_radius(SpMat<Scalar>& m, Scalar target) {
  if (target < Scalar(0)) throw std::invalid_argument("spectral radius target must be >= 0");
  if (target == Scalar(0)) {
    m.setZero();
    return;
  }
  for (int pass = 0; pass < 5; ++pass) {
    const Scalar measured = spectral_radius(m);
    if (measured <= Scalar(0))
      throw std::runtime_error("degenerate weight draw: spectral radius is zero");
    if (std::abs(measured - target) <= Scalar(2e-7) * target) return;
    m *= target / measured;
  }
}

/// Draws the full weight set: recurrent entries U[-1,1] through an
/// i.i.d. Bernoulli(sparsity) mask, rescaled to the requested spectral
/// radius; input and bias entries U[-1,1] (bias scaled by bias_scale).
/// Deterministic in `seed`.
template <class Scalar>
WeightSet<Scalar> generate_weights(Index neurons, Index inputs, Scalar sparsity,
                                   Scalar spectral_target, Scalar bias_scale,
                                   std::uint64_t seed) {
  if (neurons < 1) throw std::invalid_argument("generate_weights: neurons must be >= 1");
  if (!(sparsity > Scalar(0)) || sparsity > Scalar(1))
    throw std::invalid_argument("generate_weights: sparsity must be in (0, 1]");
  if (spectral_target < Scalar(0))
    throw std::invalid_argument("generate_weights: spectral radius must be >= 0");

  Rng rng(seed);
  std::uniform_real_distribution<Scalar> uniform01(Scalar(0), Scalar(1));
  std::uniform_real_distribution<Scalar> symmetric(Scalar(-1), Scalar(1));

  WeightSet<Scalar> w;
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(
      static_cast<double>(neurons) * static_cast<double>(neurons) * sparsity * 1.2 + 16));
  for (Index i = 0; i < neurons; ++i)
    for (Index j = 0; j < neurons; ++j)
      if (uniform01(rng) < sparsity)
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), symmetric(rng));
  w.recurrent.resize(neurons, neurons);
  w.recurrent.setFromTriplets(triplets.begin(), triplets.end());
  w.recurrent.makeCompressed();

  w.input.resize(neurons, inputs);
  for (Index i = 0; i < neurons; ++i)
    for (Index j = 0; j < inputs; ++j) w.input(i, j) = symmetric(rng);
  w.bias.resize(neurons);
  for (Index i = 0; i < neurons; ++i) w.bias[i] = bias_scale * symmetric(rng);

  scale_to_spectral_radius(w.recurrent, spectral_target);
  return w;
}

/// One reservoir update with delayed recurrence:
///   x(n+1) = leak * x(n) + feedback * tanh(W x(n-D) + input_gain * W_in s(n) + W_b).
/// Writes into `out`; no allocation when `out` has the right size.
template <class Scalar>
void desn_step(Vec<Scalar>& out, const Vec<Scalar>& current, const Vec<Scalar>& delayed,
               Scalar input, const WeightSet<Scalar>& w, Scalar leak, Scalar feedback,
               Scalar input_gain) {
  out.noalias() = w.recurrent * delayed;
  out.noalias() += (input_gain * input) * w.input.col(0);
  out += w.bias;
  out = leak * current + feedback * out.array().tanh().matrix();
}

template <class Scalar>
Vec<Scalar> desn_step(const Vec<Scalar>& current, const Vec<Scalar>& delayed, Scalar input,
                      const WeightSet<Scalar>& w, Scalar leak, Scalar feedback,
                      Scalar input_gain) {
  Vec<Scalar> out(current.size());
  desn_step(out, current, delayed, input, w, leak, feedback, input_gain);
  return out;
}

/// Solves (G + lambda I) X = B for X with G = S^T S, B = S^T Y, returning the
/// readout X^T (targets x features). One refinement pass keeps the normal
/// equations residual at rounding level.
template <class Scalar>
Mat<Scalar> ridge_solve_gram(const Mat<Scalar>& gram, const Mat<Scalar>& moment,
                             Scalar lambda) {
  if (lambda < Scalar(0)) throw std::invalid_argument("ridge: lambda must be >= 0");
  Mat<Scalar> a = gram;
  a.diagonal().array() += lambda;
  Eigen::LLT<Mat<Scalar>> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "ridge: normal equations are singular or indefinite; use lambda > 0");
  Mat<Scalar> x = llt.solve(moment);
  x += llt.solve(Mat<Scalar>(moment - a * x));
  if (!x.allFinite())
    throw std::runtime_error("ridge: solution not finite; use lambda > 0");
  return x.transpose();
}

/// Ridge regression readout: minimizes |states * W^T - targets|^2 + lambda |W|^2.
/// states is T x K, targets T x R; returns R x K.
template <class Scalar>
Mat<Scalar> ridge_fit(const Mat<Scalar>& states, const Mat<Scalar>& targets, Scalar lambda) {
  if (states.rows() != targets.rows())
    throw std::invalid_argument("ridge_fit: states and targets disagree on sample count");
  Mat<Scalar> gram = Mat<Scalar>::Zero(states.cols(), states.cols());
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(states.transpose());
  gram.template triangularView<Eigen::StrictlyUpper>() =
      gram.transpose().template triangularView<Eigen::StrictlyUpper>();
  const Mat<Scalar> moment = states.transpose() * targets;
  return ridge_solve_gram(gram, moment, lambda);
}

/// Streaming accumulator for the ridge normal equations; lets pipelines fit
/// readouts without materializing the full state matrix.
template <class Scalar>
class RidgeAccumulator {
 public:
  RidgeAccumulator(Index features, Index targets)
      : gram_(Mat<Scalar>::Zero(features, features)),
        moment_(Mat<Scalar>::Zero(features, targets)) {}

  void add(const Vec<Scalar>& state, const Vec<Scalar>& target) {
    gram_.template selfadjointView<Eigen::Lower>().rankUpdate(state);
    moment_.noalias() += state * target.transpose();
    ++count_;
  }

  /// Block form: states is B x K, targets B x R.
  void add_block(const Mat<Scalar>& states, const Mat<Scalar>& targets) {
    gram_.template selfadjointView<Eigen::Lower>().rankUpdate(states.transpose());
    moment_.noalias() += states.transpose() * targets;
    count_ += states.rows();
  }

  Index count() const { return count_; }

  Mat<Scalar> solve(Scalar lambda) const {
    Mat<Scalar> gram = gram_;
    gram.template triangularView<Eigen::StrictlyUpper>() =
        gram.transpose().template triangularView<Eigen::StrictlyUpper>();
    return ridge_solve_gram(gram, moment_, lambda);
  }

 private:
  Mat<Scalar> gram_;
  Mat<Scalar> moment_;
  Index count_ = 0;
};

}  // namespace scalesn
