#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "scalesn/reservoir.hpp"
#include "scalesn/rng.hpp"
#include "scalesn/series.hpp"
#include "scalesn/types.hpp"

namespace scalesn {

template <class Scalar>
struct DesnParams {
  Index neurons = 1000;
  Index delay = 100;               ///< delay of the recurrent connections, in samples
  Scalar leak = Scalar(0.75);
  Scalar feedback_gain = Scalar(0.176);
  Scalar input_gain = Scalar(1.24);
  Scalar spectral_radius = Scalar(0.84);
  Scalar sparsity = Scalar(0.015);
  Scalar bias_scale = Scalar(1);
  Scalar noise_std = Scalar(1e-3);      ///< input noise during training
  Scalar ridge_lambda = Scalar(1e-6);
  Index washout_steps = 5000;
  Index train_steps = 25000;
  std::uint64_t seed = 1;

  void validate() const {
    if (neurons < 1) throw std::invalid_argument("desn: neurons must be >= 1");
    if (delay < 1) throw std::invalid_argument("desn: delay must be >= 1");
    if (!(leak >= Scalar(0)) || !(leak <= Scalar(1)))
      throw std::invalid_argument("desn: leak must be in [0, 1]");
    if (!std::isfinite(feedback_gain) || !std::isfinite(input_gain))
      throw std::invalid_argument("desn: gains must be finite");
    if (noise_std < Scalar(0)) throw std::invalid_argument("desn: noise_std must be >= 0");
  }
};

/// Hyperparameters tuned for continuing the Mackey-Glass system.
inline DesnParams<double> mackey_glass_preset() { return {}; }

/// Hyperparameters tuned for continuing the Ikeda delay system; the optimal
/// leak here is zero, the update keeps no direct memory of the last state.
inline DesnParams<double> ikeda_preset() {
  DesnParams<double> p;
  p.leak = 0.0;
  p.feedback_gain = 0.1;
  p.input_gain = 1.71429;
  p.spectral_radius = 0.6975;
  p.washout_steps = 1000;
  p.train_steps = 20000;
  return p;
}

/// A trained delayed reservoir. Values are immutable by convention: running
/// or rescaling never mutates the source model, so copies stay independent.
template <class Scalar>
struct DelayedReservoir {
  WeightSet<Scalar> weights;
  Vec<Scalar> readout;          ///< length K, independent of the delay
  DesnParams<Scalar> params;    ///< params.delay is the delay used in training
  Index delay = 0;              ///< current delay-line length
  Mat<Scalar> history;          ///< K x (delay+1) ring of past states
  Index head = 0;               ///< column holding the newest state
  Scalar sample_dt = Scalar(1);

  Index neurons() const { return weights.neurons(); }
};

namespace detail {

// Advances the ring by one update, overwriting the oldest column.
// x(n+1) = leak*x(n) + feedback*tanh(W x(n-D) + input_gain*W_in s + W_b)
template <class Scalar>
void advance_ring(Mat<Scalar>& ring, Index& head, Vec<Scalar>& scratch, Scalar input,
                  const WeightSet<Scalar>& w, const DesnParams<Scalar>& p) {
  const Index oldest = (head + 1) % ring.cols();
  scratch.noalias() = w.recurrent * ring.col(oldest);
  scratch.noalias() += (p.input_gain * input) * w.input.col(0);
  scratch += w.bias;
  ring.col(oldest) =
      p.leak * ring.col(head) + p.feedback_gain * scratch.array().tanh().matrix();
  head = oldest;
}

}  // namespace detail

/// Teacher-forced training: drive with the series plus Gaussian input noise,
/// discard the washout, then fit the readout to predict the next sample.
/// The final delay-line state is kept so the loop can be closed seamlessly.
template <class Scalar>
DelayedReservoir<Scalar> train_desn(const ScalarSeries<Scalar>& series,
                                    const DesnParams<Scalar>& params) {
  params.validate();
  series.validate();
  const Index needed = params.washout_steps + params.train_steps + 1;
  if (series.size() < needed)
    throw std::invalid_argument("train_desn: series too short, need at least " +
                                std::to_string(needed) + " samples");

  DelayedReservoir<Scalar> model;
  model.weights = generate_weights<Scalar>(params.neurons, 1, params.sparsity,
                                           params.spectral_radius, params.bias_scale,
                                           derive_seed(params.seed, 0));
  model.params = params;
  model.delay = params.delay;
  model.sample_dt = series.dt;
  model.history = Mat<Scalar>::Zero(params.neurons, params.delay + 1);
  model.head = params.delay;

  Rng noise_rng(derive_seed(params.seed, 1));
  std::normal_distribution<Scalar> noise(Scalar(0), Scalar(1));

  RidgeAccumulator<Scalar> acc(params.neurons, 1);
  const Index block_size = 512;
  Mat<Scalar> states(block_size, params.neurons);
  Mat<Scalar> targets(block_size, 1);
  Index filled = 0;
  Vec<Scalar> scratch(params.neurons);

  const Index total = params.washout_steps + params.train_steps;
  for (Index n = 0; n < total; ++n) {
    Scalar input = series[n];
    if (params.noise_std > Scalar(0)) input += params.noise_std * noise(noise_rng);
    detail::advance_ring(model.history, model.head, scratch, input, model.weights,
                         params);
    if (n >= params.washout_steps) {
      states.row(filled) = model.history.col(model.head).transpose();
      targets(filled, 0) = series[n + 1];
      if (++filled == block_size) {
        acc.add_block(states, targets);
        filled = 0;
      }
    }
  }
  if (filled > 0) acc.add_block(states.topRows(filled), targets.topRows(filled));

  model.readout = acc.solve(params.ridge_lambda).row(0).transpose();
  return model;
}

/// Rescaled copy with a delay line of length new_delay + 1. The weights,
/// readout, and gains are exactly those of the input model; the fresh ring is
/// filled by replicating the most recent state, so callers should discard a
/// closed-loop transient before analysing the output.
template <class Scalar>
DelayedReservoir<Scalar> set_delay(const DelayedReservoir<Scalar>& model, Index new_delay) {
  if (new_delay < 1) throw std::invalid_argument("set_delay: delay must be >= 1");
  DelayedReservoir<Scalar> out;
  out.weights = model.weights;
  out.readout = model.readout;
  out.params = model.params;
  out.sample_dt = model.sample_dt;
  out.delay = new_delay;
  out.history = model.history.col(model.head).replicate(1, new_delay + 1);
  out.head = new_delay;
  return out;
}

/// Copy of the model with the whole delay line pinned to `state`; used to
/// probe coexisting attractors from fresh initial conditions.
template <class Scalar>
DelayedReservoir<Scalar> with_state(const DelayedReservoir<Scalar>& model,
                                    const Vec<Scalar>& state) {
  if (state.size() != model.neurons())
    throw std::invalid_argument("with_state: state has wrong dimension");
  DelayedReservoir<Scalar> out = model;
  out.history = state.replicate(1, model.delay + 1);
  out.head = model.delay;
  return out;
}

/// Uniform random reservoir state, the census initial-condition draw.
template <class Scalar>
Vec<Scalar> random_state(Index neurons, Scalar amplitude, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<Scalar> dist(-amplitude, amplitude);
  Vec<Scalar> v(neurons);
  for (Index i = 0; i < neurons; ++i) v[i] = dist(rng);
  return v;
}

/// Autonomous continuation: the readout output is fed back as the input.
/// Returns n_steps samples after discarding n_discard.
template <class Scalar>
ScalarSeries<Scalar> run_closed_loop(const DelayedReservoir<Scalar>& model, Index n_steps,
                                     Index n_discard) {
  if (model.readout.size() != model.neurons())
    throw std::invalid_argument("run_closed_loop: model has no trained readout");
  Mat<Scalar> ring = model.history;
  Index head = model.head;
  Vec<Scalar> scratch(model.neurons());
  ScalarSeries<Scalar> out;
  out.dt = model.sample_dt;
  out.values.resize(n_steps);
  const Index total = n_discard + n_steps;
  for (Index n = 0; n < total; ++n) {
    const Scalar prediction = model.readout.dot(ring.col(head));
    if (!(std::abs(prediction) <= Scalar(1e6)))
      throw DivergenceError("closed loop diverged", n);
    if (n >= n_discard) out.values[n - n_discard] = prediction;
    detail::advance_ring(ring, head, scratch, prediction, model.weights, model.params);
  }
  return out;
}

/// Drives the model with the given samples (no noise) and returns the copy
/// with its delay line synchronized to the driven trajectory.
template <class Scalar>
DelayedReservoir<Scalar> drive(const DelayedReservoir<Scalar>& model,
                               const ScalarSeries<Scalar>& series) {
  DelayedReservoir<Scalar> out = model;
  Vec<Scalar> scratch(model.neurons());
  for (Index n = 0; n < series.size(); ++n)
    detail::advance_ring(out.history, out.head, scratch, series[n], out.weights,
                         out.params);
  return out;
}

/// Teacher-forced one-step predictions. Feeds series[n_skip + i] for
/// i = 0..n_steps-1 and records the readout after each update, so entry i
/// estimates series[n_skip + i + 1].
template <class Scalar>
ScalarSeries<Scalar> run_open_loop(const DelayedReservoir<Scalar>& model,
                                   const ScalarSeries<Scalar>& series, Index n_steps,
                                   Index n_skip = 0) {
  if (series.size() < n_skip + n_steps)
    throw std::invalid_argument("run_open_loop: series shorter than requested drive");
  Mat<Scalar> ring = model.history;
  Index head = model.head;
  Vec<Scalar> scratch(model.neurons());
  for (Index n = 0; n < n_skip; ++n)
    detail::advance_ring(ring, head, scratch, series[n], model.weights, model.params);
  ScalarSeries<Scalar> out;
  out.dt = model.sample_dt;
  out.values.resize(n_steps);
  for (Index i = 0; i < n_steps; ++i) {
    detail::advance_ring(ring, head, scratch, series[n_skip + i], model.weights,
                         model.params);
    out.values[i] = model.readout.dot(ring.col(head));
  }
  return out;
}

}  // namespace scalesn
