#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "scalesn/series.hpp"
#include "scalesn/types.hpp"

namespace scalesn {

/// Root mean square error normalized by the target's standard deviation.
/// Accepts vectors or whole fields of matching shape.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar nrmse(const Eigen::MatrixBase<DerivedA>& prediction,
                                const Eigen::MatrixBase<DerivedB>& target) {
  using Scalar = typename DerivedA::Scalar;
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw std::invalid_argument("nrmse: shape mismatch");
  if (target.size() == 0) throw std::invalid_argument("nrmse: empty input");
  const Scalar mean = target.mean();
  const Scalar var = (target.array() - mean).square().mean();
  if (!(var > Scalar(0))) throw std::invalid_argument("nrmse: target has zero variance");
  const Scalar mse =
      (prediction - target).array().square().sum() / Scalar(target.size());
  return std::sqrt(mse / var);
}

template <class Scalar>
Scalar nrmse(const ScalarSeries<Scalar>& prediction, const ScalarSeries<Scalar>& target) {
  return nrmse(prediction.values, target.values);
}

/// Autocorrelation with the biased normalization (sums divided by N), so
/// acf[0] == 1 and estimates shrink linearly towards zero at large lags.
template <class Derived>
Vec<typename Derived::Scalar> acf(const Eigen::MatrixBase<Derived>& series, Index max_lag) {
  using Scalar = typename Derived::Scalar;
  const Index n = series.size();
  if (n <= max_lag)
    throw std::invalid_argument("acf: series must be longer than max_lag");
  const Vec<Scalar> x = series;
  if (x.maxCoeff() == x.minCoeff())
    throw std::invalid_argument("acf: undefined for a constant series");
  const Vec<Scalar> c = x.array() - x.mean();
  const Scalar denom = c.squaredNorm();
  Vec<Scalar> out(max_lag + 1);
  for (Index lag = 0; lag <= max_lag; ++lag)
    out[lag] = c.head(n - lag).dot(c.tail(n - lag)) / denom;
  return out;
}

template <class Scalar>
Vec<Scalar> acf(const ScalarSeries<Scalar>& s, Index max_lag) {
  return acf(s.values, max_lag);
}

/// True when the series sits at a fixed point for classification purposes.
template <class Derived>
bool effectively_constant(const Eigen::MatrixBase<Derived>& x,
                          typename Derived::Scalar range_tol =
                              typename Derived::Scalar(1e-4)) {
  using Scalar = typename Derived::Scalar;
  const Scalar range = x.maxCoeff() - x.minCoeff();
  return range < range_tol * std::max(Scalar(1), std::abs(x.mean()));
}

/// Summed absolute autocorrelation difference over lags 0..max_lag. A series
/// pinned at a fixed point has no autocorrelation; such inputs score the
/// maximal mismatch (max_lag + 1) instead of raising.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar delta_acf(const Eigen::MatrixBase<DerivedA>& a,
                                    const Eigen::MatrixBase<DerivedB>& b,
                                    Index max_lag = 1100) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() <= max_lag || b.size() <= max_lag)
    throw std::invalid_argument("delta_acf: series must be longer than max_lag");
  if (effectively_constant(a) || effectively_constant(b))
    return Scalar(max_lag + 1);
  const Vec<Scalar> fa = acf(a, max_lag);
  const Vec<Scalar> fb = acf(b, max_lag);
  return (fa - fb).template lpNorm<1>();
}

template <class Scalar>
Scalar delta_acf(const ScalarSeries<Scalar>& a, const ScalarSeries<Scalar>& b,
                 Index max_lag = 1100) {
  return delta_acf(a.values, b.values, max_lag);
}

/// Values of strict local maxima after discarding `n_discard` samples.
/// Plateau peaks count once; a series with no interior maximum (a settled
/// fixed point or a monotone tail) yields its final value.
template <class Derived>
std::vector<typename Derived::Scalar> extract_extrema(
    const Eigen::MatrixBase<Derived>& series, Index n_discard) {
  using Scalar = typename Derived::Scalar;
  const Index n = series.size() - n_discard;
  if (n < 3) throw std::invalid_argument("extract_extrema: need at least 3 samples");
  const Vec<Scalar> tail = series.tail(n);
  const Scalar* s = tail.data();
  std::vector<Scalar> out;
  for (Index i = 1; i + 1 < n; ++i) {
    if (!(s[i] > s[i - 1])) continue;
    Index j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    if (j + 1 < n && s[j + 1] < s[i]) out.push_back(s[i]);
    i = j;
  }
  if (out.empty()) out.push_back(s[n - 1]);
  return out;
}

template <class Scalar>
std::vector<Scalar> extract_extrema(const ScalarSeries<Scalar>& s, Index n_discard) {
  return extract_extrema(s.values, n_discard);
}

enum class AttractorKind { FixedPoint, LimitCycle, Chaotic };

inline const char* to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::FixedPoint: return "fixed-point";
    case AttractorKind::LimitCycle: return "limit-cycle";
    case AttractorKind::Chaotic: return "chaotic";
  }
  return "?";
}

template <class Scalar>
struct AttractorClass {
  AttractorKind kind = AttractorKind::Chaotic;
  Scalar range = Scalar(0);       ///< max - min of the series
  Index period = 0;               ///< lag of the dominant autocorrelation peak
  Scalar peak = Scalar(0);        ///< value of that peak
};

struct ClassifierOptions {
  double peak_threshold = 0.99;    ///< periodicity requires acf above this
  Index lag_tolerance = 2;         ///< recurrence window around multiples
  double fixed_point_range_tol = 1e-4;
  Index min_lag = 10;
  Index max_lag = 1100;
  Index max_multiples = 4;         ///< recurrence checked for m = 2..this
};

/// Labels a post-transient series as fixed point, limit cycle, or chaotic.
/// Fixed point: relative range below fixed_point_range_tol. Limit cycle: the
/// dominant autocorrelation peak in [min_lag, max_lag] exceeds peak_threshold
/// and local peaks recur within lag_tolerance of its integer multiples (peak
/// values compared after undoing the biased-normalization shrinkage).
/// Everything else is chaotic.
template <class Derived>
AttractorClass<typename Derived::Scalar> classify_attractor(
    const Eigen::MatrixBase<Derived>& input, const ClassifierOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  if (input.size() < 4096)
    throw std::invalid_argument("classify_attractor: need at least 4096 samples");
  const Vec<Scalar> series = input;
  AttractorClass<Scalar> result;
  result.range = series.maxCoeff() - series.minCoeff();
  if (effectively_constant(series, Scalar(opts.fixed_point_range_tol))) {
    result.kind = AttractorKind::FixedPoint;
    return result;
  }

  const Index n = series.size();
  const Vec<Scalar> a = acf(series, opts.max_lag);
  Index peak_lag = opts.min_lag;
  for (Index lag = opts.min_lag; lag <= opts.max_lag; ++lag)
    if (a[lag] > a[peak_lag]) peak_lag = lag;
  result.period = peak_lag;
  result.peak = a[peak_lag];

  if (!(result.peak > Scalar(opts.peak_threshold))) {
    result.kind = AttractorKind::Chaotic;
    return result;
  }

  // Recurrence at integer multiples of the dominant lag. The biased acf
  // shrinks by (1 - lag/n); compare against the threshold after undoing it.
  bool recurs = true;
  for (Index m = 2; m <= opts.max_multiples; ++m) {
    const Index center = m * peak_lag;
    if (center > opts.max_lag) break;
    const Index lo = std::max<Index>(1, center - opts.lag_tolerance);
    const Index hi = std::min<Index>(opts.max_lag - 1, center + opts.lag_tolerance);
    bool found = false;
    for (Index lag = lo; lag <= hi && !found; ++lag) {
      const bool local_max = a[lag] >= a[lag - 1] && a[lag] >= a[lag + 1];
      const Scalar unbiased = a[lag] * Scalar(n) / Scalar(n - lag);
      found = local_max && unbiased > Scalar(opts.peak_threshold);
    }
    if (!found) {
      recurs = false;
      break;
    }
  }
  result.kind = recurs ? AttractorKind::LimitCycle : AttractorKind::Chaotic;
  return result;
}

template <class Scalar>
AttractorClass<Scalar> classify_attractor(const ScalarSeries<Scalar>& s,
                                          const ClassifierOptions& opts = {}) {
  return classify_attractor(s.values, opts);
}

}  // namespace scalesn
