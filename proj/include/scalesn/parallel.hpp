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
struct ParallelParams {
  Index subnets = 10;               ///< G
  Index neurons = 1000;             ///< per subnetwork
  Index section = 10;               ///< outputs per subnetwork
  Index overlap = 3;                ///< neighbor inputs taken from each side
  Scalar input_gain = Scalar(0.001);
  Scalar spectral_radius = Scalar(1.3);
  Scalar bias_gain = Scalar(0.2);
  Scalar sparsity = Scalar(0.015);
  Scalar noise_std = Scalar(1e-4);
  Scalar ridge_lambda = Scalar(1e-6);
  Index washout_steps = 1000;
  Index train_steps = 20000;
  std::uint64_t seed = 1;

  Index inputs() const { return section + 2 * overlap; }

  void validate() const {
    if (subnets < 2) throw std::invalid_argument("parallel: need at least 2 subnetworks");
    if (neurons < 1) throw std::invalid_argument("parallel: neurons must be >= 1");
    if (section < 1 || overlap < 0)
      throw std::invalid_argument("parallel: bad section/overlap");
    if (noise_std < Scalar(0))
      throw std::invalid_argument("parallel: noise_std must be >= 0");
  }
};

/// Identical subnetworks with one shared weight set and one shared readout;
/// only the per-subnetwork states differ. Changing the subnetwork count
/// rescales the covered domain without touching any learned value.
template <class Scalar>
struct ParallelReservoir {
  WeightSet<Scalar> weights;     ///< input matrix is K x (section + 2*overlap)
  Mat<Scalar> readout;           ///< section x K, shared by all subnetworks
  Mat<Scalar> states;            ///< K x G
  ParallelParams<Scalar> params; ///< params.subnets tracks the current G
  Scalar section_length = Scalar(0);  ///< spatial extent covered by one section
  Scalar sample_dt = Scalar(1);

  Index subnets() const { return states.cols(); }
  Index output_dim() const { return params.section * subnets(); }
  Scalar domain_length() const { return section_length * Scalar(subnets()); }
};

/// The 16 inputs of subnetwork g: the three samples left of its section, the
/// section itself, and the three samples right of it, periodic wraparound.
template <class Scalar>
Vec<Scalar> assemble_inputs(const Vec<Scalar>& column, Index g,
                            const ParallelParams<Scalar>& params) {
  const Index q = column.size();
  if (q != params.section * params.subnets)
    throw std::invalid_argument("assemble_inputs: column size " + std::to_string(q) +
                                " does not match section * subnets");
  if (g < 0 || g >= params.subnets)
    throw std::invalid_argument("assemble_inputs: subnetwork index out of range");
  const Index m = params.inputs();
  Vec<Scalar> u(m);
  const Index start = g * params.section - params.overlap;
  for (Index i = 0; i < m; ++i) u[i] = column[((start + i) % q + q) % q];
  return u;
}

namespace detail {

// One synchronous update of every subnetwork from the full field column:
// x_g(n+1) = tanh(W x_g(n) + input_gain * W_in u_g(n) + bias_gain * W_b)
template <class Scalar>
void advance_subnets(Mat<Scalar>& states, const Vec<Scalar>& column,
                     const WeightSet<Scalar>& w, const ParallelParams<Scalar>& p,
                     Vec<Scalar>& scratch) {
  const Index g_count = states.cols();
  for (Index g = 0; g < g_count; ++g) {
    const Vec<Scalar> u = assemble_inputs(column, g, p);
    scratch.noalias() = w.recurrent * states.col(g);
    scratch.noalias() += p.input_gain * (w.input * u);
    scratch.noalias() += p.bias_gain * w.bias;
    states.col(g) = scratch.array().tanh();
  }
}

template <class Scalar>
Vec<Scalar> predict_column(const ParallelReservoir<Scalar>& model,
                           const Mat<Scalar>& states) {
  Vec<Scalar> column(model.params.section * states.cols());
  for (Index g = 0; g < states.cols(); ++g)
    column.segment(g * model.params.section, model.params.section).noalias() =
        model.readout * states.col(g);
  return column;
}

}  // namespace detail

/// Trains the shared readout: all subnetworks are driven in lockstep by the
/// field (with input noise), and every (state, own-section next sample) pair
/// feeds one pooled ridge regression.
template <class Scalar>
ParallelReservoir<Scalar> train_parallel(const SpatioTemporalField<Scalar>& field,
                                         ParallelParams<Scalar> params) {
  params.validate();
  field.validate();
  const Index q = params.section * params.subnets;
  if (field.space_points() != q)
    throw std::invalid_argument("train_parallel: field must have section * subnets = " +
                                std::to_string(q) + " rows");
  const Index needed = params.washout_steps + params.train_steps + 1;
  if (field.samples() < needed)
    throw std::invalid_argument("train_parallel: field too short, need at least " +
                                std::to_string(needed) + " samples");

  ParallelReservoir<Scalar> model;
  model.weights = generate_weights<Scalar>(params.neurons, params.inputs(),
                                           params.sparsity, params.spectral_radius,
                                           Scalar(1), derive_seed(params.seed, 0));
  model.params = params;
  model.states = Mat<Scalar>::Zero(params.neurons, params.subnets);
  model.section_length = field.domain_length / Scalar(params.subnets);
  model.sample_dt = field.dt;

  Rng noise_rng(derive_seed(params.seed, 1));
  std::normal_distribution<Scalar> noise(Scalar(0), Scalar(1));

  RidgeAccumulator<Scalar> acc(params.neurons, params.section);
  Vec<Scalar> scratch(params.neurons);
  Vec<Scalar> column(q);
  const Index total = params.washout_steps + params.train_steps;
  for (Index n = 0; n < total; ++n) {
    column = field.grid.col(n);
    if (params.noise_std > Scalar(0))
      for (Index i = 0; i < q; ++i) column[i] += params.noise_std * noise(noise_rng);
    detail::advance_subnets(model.states, column, model.weights, params, scratch);
    if (n >= params.washout_steps) {
      for (Index g = 0; g < params.subnets; ++g)
        acc.add(model.states.col(g),
                field.grid.col(n + 1).segment(g * params.section, params.section));
    }
  }
  model.readout = acc.solve(params.ridge_lambda);
  return model;
}

/// Autonomous prediction: reassemble the full column from every section,
/// redistribute it through the overlaps, and iterate.
template <class Scalar>
SpatioTemporalField<Scalar> run_closed_loop_parallel(const ParallelReservoir<Scalar>& model,
                                                     Index n_steps, Index n_discard) {
  if (model.readout.rows() != model.params.section)
    throw std::invalid_argument("run_closed_loop_parallel: model has no trained readout");
  Mat<Scalar> states = model.states;
  ParallelParams<Scalar> p = model.params;
  p.subnets = states.cols();
  Vec<Scalar> scratch(p.neurons);
  SpatioTemporalField<Scalar> out;
  out.domain_length = model.domain_length();
  out.dt = model.sample_dt;
  out.grid.resize(p.section * p.subnets, n_steps);
  const Index total = n_discard + n_steps;
  for (Index n = 0; n < total; ++n) {
    const Vec<Scalar> column = detail::predict_column(model, states);
    if (!(column.cwiseAbs().maxCoeff() <= Scalar(1e6)))
      throw DivergenceError("parallel closed loop diverged", n);
    if (n >= n_discard) out.grid.col(n - n_discard) = column;
    detail::advance_subnets(states, column, model.weights, p, scratch);
  }
  return out;
}

/// Teacher-forces the subnetworks with the given field columns and returns
/// the synchronized copy; used to start inference from new initial data.
template <class Scalar>
ParallelReservoir<Scalar> drive_parallel(const ParallelReservoir<Scalar>& model,
                                         const SpatioTemporalField<Scalar>& field) {
  ParallelReservoir<Scalar> out = model;
  ParallelParams<Scalar> p = model.params;
  p.subnets = out.states.cols();
  if (field.space_points() != p.section * p.subnets)
    throw std::invalid_argument("drive_parallel: field width does not match the model");
  Vec<Scalar> scratch(p.neurons);
  for (Index n = 0; n < field.samples(); ++n)
    detail::advance_subnets(out.states, field.grid.col(n), out.weights, p, scratch);
  return out;
}

/// Teacher-forced one-step predictions over the field; entry column i
/// estimates field column n_skip + i + 1.
template <class Scalar>
SpatioTemporalField<Scalar> run_open_loop_parallel(const ParallelReservoir<Scalar>& model,
                                                   const SpatioTemporalField<Scalar>& field,
                                                   Index n_steps, Index n_skip = 0) {
  if (field.samples() < n_skip + n_steps)
    throw std::invalid_argument("run_open_loop_parallel: field shorter than drive");
  ParallelReservoir<Scalar> p = model;
  ParallelParams<Scalar> pp = model.params;
  pp.subnets = p.states.cols();
  Vec<Scalar> scratch(pp.neurons);
  SpatioTemporalField<Scalar> out;
  out.domain_length = model.domain_length();
  out.dt = model.sample_dt;
  out.grid.resize(pp.section * pp.subnets, n_steps);
  for (Index n = 0; n < n_skip; ++n)
    detail::advance_subnets(p.states, field.grid.col(n), p.weights, pp, scratch);
  for (Index i = 0; i < n_steps; ++i) {
    detail::advance_subnets(p.states, field.grid.col(n_skip + i), p.weights, pp, scratch);
    out.grid.col(i) = detail::predict_column(p, p.states);
  }
  return out;
}

/// Copy with new_subnets subnetworks sharing the identical weights and
/// readout. New states are copies of existing ones (cyclically); the covered
/// domain becomes new_subnets * section_length.
template <class Scalar>
ParallelReservoir<Scalar> scale_parallel(const ParallelReservoir<Scalar>& model,
                                         Index new_subnets) {
  if (new_subnets < 2)
    throw std::invalid_argument("scale_parallel: need at least 2 subnetworks");
  ParallelReservoir<Scalar> out = model;
  const Index old_subnets = model.states.cols();
  out.states.resize(model.params.neurons, new_subnets);
  for (Index g = 0; g < new_subnets; ++g)
    out.states.col(g) = model.states.col(g % old_subnets);
  out.params.subnets = new_subnets;
  return out;
}

}  // namespace scalesn
