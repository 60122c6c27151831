#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace scalesn {

using Index = Eigen::Index;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using SpMat = Eigen::SparseMatrix<Scalar>;

/// Thrown when a trajectory leaves the finite range; carries the step at
/// which the blow-up was detected.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, Index step)
      : std::runtime_error(what + " at step " + std::to_string(step)),
        step_(step) {}
  Index step() const noexcept { return step_; }

 private:
  Index step_;
};

}  // namespace scalesn
