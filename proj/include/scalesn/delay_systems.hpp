#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "scalesn/rng.hpp"
#include "scalesn/series.hpp"
#include "scalesn/types.hpp"

namespace scalesn {

template <class Scalar>
struct MackeyGlassParams {
  Scalar relaxation_time = Scalar(10);
  Scalar delay = Scalar(100);
  Scalar feedback_coeff = Scalar(0.2);
  Scalar exponent = Scalar(10);
  Scalar step = Scalar(0.1);       ///< internal integration step
  Scalar sample_dt = Scalar(1);    ///< spacing of recorded samples
};

template <class Scalar>
struct IkedaParams {
  Scalar relaxation_time = Scalar(10);
  Scalar delay = Scalar(100);
  Scalar feedback_gain = Scalar(0.4);
  Scalar step = Scalar(0.1);
  Scalar sample_dt = Scalar(1);
};

template <class Scalar>
struct MackeyGlassFeedback {
  Scalar coeff, exponent;
  Scalar operator()(Scalar delayed) const {
    return coeff * delayed / (Scalar(1) + std::pow(delayed, exponent));
  }
};

template <class Scalar>
struct IkedaFeedback {
  Scalar gain;
  Scalar operator()(Scalar delayed) const {
    const Scalar s = std::sin(delayed);
    return gain * s * s;
  }
};

namespace detail {

/// Rounds ratio to the nearest integer and checks it is one.
inline Eigen::Index exact_multiple(double value, double step, const char* what) {
  const double ratio = value / step;
  const auto m = static_cast<Eigen::Index>(std::llround(ratio));
  if (m < 1 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(std::string(what) + " must be an integer multiple of the step");
  return m;
}

}  // namespace detail

/// Fixed-step RK4 integrator for scalar delay systems of the form
///   s'(t) = -s(t)/T + f(s(t - tau)).
/// The delay tau must be an integer multiple of the step; delayed values at
/// RK4 substage times come from cubic Hermite interpolation on the stored
/// node values and derivatives, so the delay line stays exact at the nodes.
template <class Scalar, class Feedback>
class DelayStepper {
 public:
  /// `history` holds s on the grid t = -tau, -tau+h, ..., 0 (length m+1).
  DelayStepper(Scalar relaxation_time, Scalar delay, Scalar step, Feedback feedback,
               const Vec<Scalar>& history)
      : inv_relax_(Scalar(1) / relaxation_time),
        h_(step),
        feedback_(feedback),
        delay_steps_(detail::exact_multiple(static_cast<double>(delay),
                                            static_cast<double>(step), "delay")) {
    const Index n = delay_steps_ + 1;
    if (history.size() != n)
      throw std::invalid_argument("history length must be delay/step + 1 = " +
                                  std::to_string(n));
    if (!history.allFinite()) throw std::invalid_argument("history must be finite");
    s_ = history;
    sdot_.resize(n);
    // Node derivatives seed the Hermite interpolant; finite differences are
    // enough, the startup error is discarded with the transient.
    if (n == 1) {
      sdot_[0] = Scalar(0);
    } else {
      sdot_[0] = (s_[1] - s_[0]) / h_;
      sdot_[n - 1] = (s_[n - 1] - s_[n - 2]) / h_;
      for (Index i = 1; i < n - 1; ++i) sdot_[i] = (s_[i + 1] - s_[i - 1]) / (2 * h_);
    }
    head_ = n - 1;
  }

  Scalar rhs(Scalar s, Scalar delayed) const { return -s * inv_relax_ + feedback_(delayed); }

  /// Advances by one internal step.
  void step() {
    const Index n = s_.size();
    const Index oldest = (head_ + 1) % n;         // node t - tau
    const Index next_oldest = (oldest + 1) % n;   // node t - tau + h
    const Scalar s0 = s_[head_];
    const Scalar u0 = s_[oldest];
    const Scalar u1 = s_[next_oldest];
    // Hermite midpoint between the two oldest nodes.
    const Scalar uh = (n == 1) ? u0
                               : Scalar(0.5) * (u0 + u1) +
                                     Scalar(0.125) * h_ * (sdot_[oldest] - sdot_[next_oldest]);

    const Scalar k1 = rhs(s0, u0);
    const Scalar k2 = rhs(s0 + Scalar(0.5) * h_ * k1, uh);
    const Scalar k3 = rhs(s0 + Scalar(0.5) * h_ * k2, uh);
    const Scalar k4 = rhs(s0 + h_ * k3, u1);
    const Scalar s1 = s0 + h_ / Scalar(6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!std::isfinite(s1))
      throw DivergenceError("delay system diverged", steps_taken_ + 1);

    s_[oldest] = s1;
    sdot_[oldest] = rhs(s1, u1);
    head_ = oldest;
    ++steps_taken_;
  }

  void advance(Index n_steps) {
    for (Index i = 0; i < n_steps; ++i) step();
  }

  Scalar value() const { return s_[head_]; }
  Scalar step_size() const { return h_; }
  Index steps_taken() const { return steps_taken_; }
  Index delay_steps() const { return delay_steps_; }

  /// Euclidean distance between the full delay lines of two trajectories.
  Scalar distance_to(const DelayStepper& other) const {
    return (s_ - other.s_).norm();
  }

  /// Moves this trajectory towards `ref` so that the delay-line difference is
  /// scaled by `factor`; used by the two-trajectory exponent estimator.
  void blend_towards(const DelayStepper& ref, Scalar factor) {
    s_ = ref.s_ + factor * (s_ - ref.s_);
    sdot_ = ref.sdot_ + factor * (sdot_ - ref.sdot_);
  }

  /// Adds `eps` to the newest node only.
  void perturb(Scalar eps) { s_[head_] += eps; }

 private:
  Scalar inv_relax_, h_;
  Feedback feedback_;
  Index delay_steps_;
  Vec<Scalar> s_, sdot_;
  Index head_ = 0;
  Index steps_taken_ = 0;
};

template <class Scalar>
DelayStepper<Scalar, MackeyGlassFeedback<Scalar>> make_stepper(
    const MackeyGlassParams<Scalar>& p, const Vec<Scalar>& history) {
  return {p.relaxation_time, p.delay, p.step,
          MackeyGlassFeedback<Scalar>{p.feedback_coeff, p.exponent}, history};
}

template <class Scalar>
DelayStepper<Scalar, IkedaFeedback<Scalar>> make_stepper(const IkedaParams<Scalar>& p,
                                                         const Vec<Scalar>& history) {
  return {p.relaxation_time, p.delay, p.step, IkedaFeedback<Scalar>{p.feedback_gain},
          history};
}

template <class Scalar>
Index history_length(Scalar delay, Scalar step) {
  return detail::exact_multiple(static_cast<double>(delay), static_cast<double>(step),
                                "delay") +
         1;
}

enum class HistoryKind { ConstantPlusNoise, UniformRandom };

/// Deterministic initial history, `n` grid values.
///  - ConstantPlusNoise: base + U[-amplitude, amplitude]
///  - UniformRandom:     base + U[0, amplitude]
template <class Scalar>
Vec<Scalar> default_history(HistoryKind kind, Scalar base, Scalar amplitude, Index n,
                            std::uint64_t seed) {
  if (amplitude < Scalar(0)) throw std::invalid_argument("history amplitude must be >= 0");
  Vec<Scalar> h(n);
  Rng rng(seed);
  if (kind == HistoryKind::ConstantPlusNoise) {
    std::uniform_real_distribution<Scalar> dist(-amplitude, amplitude);
    for (Index i = 0; i < n; ++i) h[i] = base + (amplitude > Scalar(0) ? dist(rng) : Scalar(0));
  } else {
    std::uniform_real_distribution<Scalar> dist(Scalar(0), amplitude);
    for (Index i = 0; i < n; ++i) h[i] = base + (amplitude > Scalar(0) ? dist(rng) : Scalar(0));
  }
  return h;
}

namespace detail {

template <class Scalar, class Stepper>
ScalarSeries<Scalar> sample_delay_system(Stepper& stepper, Scalar sample_dt, Scalar step,
                                         Index n_transient, Index n_samples) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const Index sub = exact_multiple(static_cast<double>(sample_dt),
                                   static_cast<double>(step), "sample interval");
  stepper.advance(n_transient * sub);
  ScalarSeries<Scalar> out;
  out.dt = sample_dt;
  out.values.resize(n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    out.values[i] = stepper.value();
    if (i + 1 < n_samples) stepper.advance(sub);
  }
  return out;
}

}  // namespace detail

template <class Scalar>
ScalarSeries<Scalar> integrate_mackey_glass(const MackeyGlassParams<Scalar>& params,
                                            const Vec<Scalar>& history, Index n_transient,
                                            Index n_samples) {
  auto stepper = make_stepper(params, history);
  return detail::sample_delay_system(stepper, params.sample_dt, params.step, n_transient,
                                     n_samples);
}

template <class Scalar>
ScalarSeries<Scalar> integrate_mackey_glass(const MackeyGlassParams<Scalar>& params,
                                            Scalar constant_history, Index n_transient,
                                            Index n_samples) {
  const Vec<Scalar> h =
      Vec<Scalar>::Constant(history_length(params.delay, params.step), constant_history);
  return integrate_mackey_glass(params, h, n_transient, n_samples);
}

template <class Scalar>
ScalarSeries<Scalar> integrate_ikeda(const IkedaParams<Scalar>& params,
                                     const Vec<Scalar>& history, Index n_transient,
                                     Index n_samples) {
  auto stepper = make_stepper(params, history);
  return detail::sample_delay_system(stepper, params.sample_dt, params.step, n_transient,
                                     n_samples);
}

template <class Scalar>
ScalarSeries<Scalar> integrate_ikeda(const IkedaParams<Scalar>& params,
                                     Scalar constant_history, Index n_transient,
                                     Index n_samples) {
  const Vec<Scalar> h =
      Vec<Scalar>::Constant(history_length(params.delay, params.step), constant_history);
  return integrate_ikeda(params, h, n_transient, n_samples);
}

}  // namespace scalesn
