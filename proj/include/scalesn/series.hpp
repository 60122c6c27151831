#pragma once

#include <cmath>
#include <stdexcept>

#include "scalesn/types.hpp"

namespace scalesn {

/// Uniformly sampled scalar time series.
template <class Scalar>
struct ScalarSeries {
  Vec<Scalar> values;
  Scalar dt = Scalar(1);

  Index size() const { return values.size(); }
  Scalar operator[](Index i) const { return values[i]; }

  void validate() const {
    if (!(dt > Scalar(0))) throw std::invalid_argument("series: dt must be > 0");
    if (values.size() < 1) throw std::invalid_argument("series: length must be >= 1");
    if (!values.allFinite()) throw std::invalid_argument("series: non-finite value");
  }
};

/// Scalar field sampled on a periodic spatial domain: grid is
/// space x time (Q rows, one column per sample).
template <class Scalar>
struct SpatioTemporalField {
  Mat<Scalar> grid;
  Scalar domain_length = Scalar(0);
  Scalar dt = Scalar(1);

  Index space_points() const { return grid.rows(); }
  Index samples() const { return grid.cols(); }

  void validate() const {
    if (!(dt > Scalar(0))) throw std::invalid_argument("field: dt must be > 0");
    if (!(domain_length > Scalar(0)))
      throw std::invalid_argument("field: domain length must be > 0");
    if (!grid.allFinite()) throw std::invalid_argument("field: non-finite value");
  }
};

}  // namespace scalesn
