#pragma once

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "scalesn/rng.hpp"
#include "scalesn/series.hpp"
#include "scalesn/types.hpp"

namespace scalesn {

template <class Scalar>
struct KsParams {
  Scalar domain_length = Scalar(10) * std::numbers::pi_v<Scalar>;
  Index grid_points = 100;          ///< must equal 10 * (L / pi)
  Scalar sample_dt = Scalar(0.25);
  Scalar internal_dt = Scalar(0.25);

  /// Domain of n*pi with the matching 10-points-per-pi grid.
  static KsParams from_pi_units(Index n) {
    KsParams p;
    p.domain_length = Scalar(n) * std::numbers::pi_v<Scalar>;
    p.grid_points = 10 * n;
    return p;
  }

  void validate() const {
    if (grid_points < 4) throw std::invalid_argument("ks: need at least 4 grid points");
    const double units = static_cast<double>(domain_length) / std::numbers::pi;
    const auto n = static_cast<Index>(std::llround(units));
    if (n < 1 || std::abs(units - static_cast<double>(n)) > 1e-9)
      throw std::invalid_argument("ks: domain length must be an integer multiple of pi");
    if (grid_points != 10 * n)
      throw std::invalid_argument("ks: grid points must equal 10 * (L / pi)");
    if (!(internal_dt > Scalar(0)) || internal_dt > sample_dt)
      throw std::invalid_argument("ks: internal step must be in (0, sample_dt]");
    const double sub = static_cast<double>(sample_dt / internal_dt);
    if (std::abs(sub - std::llround(sub)) > 1e-9 * sub)
      throw std::invalid_argument("ks: sample_dt must be a multiple of internal_dt");
  }
};

/// Pseudospectral integrator for y_t = -y*y_x - y_xx - y_xxxx on a periodic
/// domain. Linear part handled exactly in Fourier space, nonlinear term
/// -(y^2)_x/2 dealiased by the 2/3 rule, time stepping by fourth-order
/// exponential time differencing with contour-averaged phi coefficients
/// (stable down to k -> 0 where the direct formulas cancel).
template <class Scalar>
class KsIntegrator {
  using Complex = std::complex<Scalar>;
  using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

 public:
  explicit KsIntegrator(const KsParams<Scalar>& params) : params_(params) {
    params_.validate();
    const Index q = params_.grid_points;
    const Scalar h = params_.internal_dt;
    const Scalar two_pi_over_l =
        Scalar(2) * std::numbers::pi_v<Scalar> / params_.domain_length;
    steps_per_sample_ = static_cast<Index>(
        std::llround(static_cast<double>(params_.sample_dt / params_.internal_dt)));

    Vec<Scalar> lin(q);
    for (Index j = 0; j < q; ++j) {
      const Index freq = (j <= q / 2) ? j : j - q;
      const Scalar k = two_pi_over_l * Scalar(freq);
      lin[j] = k * k - k * k * k * k;
    }

    // Dealias mask: zero every mode above 2/3 of the resolved band. Applied
    // to the nonlinear term, it also kills the Nyquist derivative.
    const Index cutoff = q / 3;
    deriv_.resize(q);
    for (Index j = 0; j < q; ++j) {
      const Index freq = (j <= q / 2) ? j : j - q;
      const Scalar k = two_pi_over_l * Scalar(freq);
      const bool keep = std::abs(freq) <= cutoff;
      deriv_[j] = keep ? Complex(Scalar(0), Scalar(-0.5) * k) : Complex(0, 0);
    }

    exp_full_.resize(q);
    exp_half_.resize(q);
    coef_q_.resize(q);
    coef_f1_.resize(q);
    coef_f2_.resize(q);
    coef_f3_.resize(q);
    constexpr int contour_points = 64;
    for (Index j = 0; j < q; ++j) {
      const Scalar hl = h * lin[j];
      exp_full_[j] = Complex(std::exp(hl), Scalar(0));
      exp_half_[j] = Complex(std::exp(hl / Scalar(2)), Scalar(0));
      std::complex<double> cq = 0, c1 = 0, c2 = 0, c3 = 0;
      for (int m = 0; m < contour_points; ++m) {
        const double theta = std::numbers::pi * (m + 0.5) / contour_points;
        const std::complex<double> z =
            static_cast<double>(hl) + std::polar(1.0, theta);
        const std::complex<double> ez = std::exp(z);
        cq += (std::exp(z / 2.0) - 1.0) / z;
        c1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / (z * z * z);
        c2 += (2.0 + z + ez * (-2.0 + z)) / (z * z * z);
        c3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / (z * z * z);
      }
      // The contour is symmetric about the real axis, so the mean over the
      // upper half carries the full real part.
      const double inv = 1.0 / contour_points;
      const double hd = static_cast<double>(h);
      coef_q_[j] = Complex(static_cast<Scalar>(hd * cq.real() * inv), 0);
      coef_f1_[j] = Complex(static_cast<Scalar>(hd * c1.real() * inv), 0);
      coef_f2_[j] = Complex(static_cast<Scalar>(hd * c2.real() * inv), 0);
      coef_f3_[j] = Complex(static_cast<Scalar>(hd * c3.real() * inv), 0);
    }

    spectrum_ = CVec::Zero(q);
  }

  const KsParams<Scalar>& params() const { return params_; }

  void set_state(const Vec<Scalar>& field) {
    if (field.size() != params_.grid_points)
      throw std::invalid_argument("ks: initial field has wrong grid size");
    if (!field.allFinite()) throw std::invalid_argument("ks: initial field not finite");
    CVec tmp = field.template cast<Complex>();
    fft_.fwd(spectrum_, tmp);
  }

  Vec<Scalar> field() const {
    CVec tmp;
    fft_.inv(tmp, spectrum_);
    return tmp.real();
  }

  /// One ETDRK4 step of length internal_dt.
  void step() {
    const CVec n_v = nonlinear(spectrum_);
    const CVec a = exp_half_.cwiseProduct(spectrum_) + coef_q_.cwiseProduct(n_v);
    const CVec n_a = nonlinear(a);
    const CVec b = exp_half_.cwiseProduct(spectrum_) + coef_q_.cwiseProduct(n_a);
    const CVec n_b = nonlinear(b);
    const CVec c =
        exp_half_.cwiseProduct(a) + coef_q_.cwiseProduct((Scalar(2) * n_b - n_v).eval());
    const CVec n_c = nonlinear(c);
    spectrum_ = exp_full_.cwiseProduct(spectrum_) + coef_f1_.cwiseProduct(n_v) +
                Scalar(2) * coef_f2_.cwiseProduct(n_a + n_b) + coef_f3_.cwiseProduct(n_c);
    enforce_real_field();
    ++steps_taken_;
  }

  /// Advances by one sample interval and checks for blow-up.
  void advance_sample() {
    for (Index i = 0; i < steps_per_sample_; ++i) step();
    if (!spectrum_.allFinite())
      throw DivergenceError("kuramoto-sivashinsky field diverged", steps_taken_);
  }

  Index steps_taken() const { return steps_taken_; }

 private:
  // Pins the spectrum to conjugate symmetry after every step. The nonlinear
  // term only sees the real field, so rounding noise in the anti-Hermitian
  // subspace would otherwise grow at the full linear rate, unchecked by the
  // nonlinear saturation, and overflow after a few hundred time units.
  void enforce_real_field() {
    const Index q = spectrum_.size();
    spectrum_[0] = Complex(spectrum_[0].real(), Scalar(0));
    for (Index j = 1; j <= q / 2; ++j) {
      const Complex mean = Scalar(0.5) * (spectrum_[j] + std::conj(spectrum_[q - j]));
      spectrum_[j] = mean;
      spectrum_[q - j] = std::conj(mean);
    }
    if (q % 2 == 0)
      spectrum_[q / 2] = Complex(spectrum_[q / 2].real(), Scalar(0));
  }

  CVec nonlinear(const CVec& v) const {
    CVec phys;
    fft_.inv(phys, v);
    CVec sq(phys.size());
    for (Index i = 0; i < phys.size(); ++i) {
      const Scalar y = phys[i].real();
      sq[i] = Complex(y * y, Scalar(0));
    }
    CVec out;
    fft_.fwd(out, sq);
    return deriv_.cwiseProduct(out);
  }

  KsParams<Scalar> params_;
  Index steps_per_sample_ = 1;
  CVec deriv_;
  CVec exp_full_, exp_half_, coef_q_, coef_f1_, coef_f2_, coef_f3_;
  CVec spectrum_;
  mutable Eigen::FFT<Scalar> fft_;
  Index steps_taken_ = 0;
};

/// Mean-zero random initial field: the four lowest nonzero Fourier pairs with
/// standard-normal amplitudes, rescaled to max |y| = amplitude.
template <class Scalar>
Vec<Scalar> lowpass_random_field(const KsParams<Scalar>& params, std::uint64_t seed,
                                 Scalar amplitude = Scalar(0.5)) {
  params.validate();
  const Index q = params.grid_points;
  Rng rng(seed);
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Vec<Scalar> y = Vec<Scalar>::Zero(q);
  for (int mode = 1; mode <= 4; ++mode) {
    const Scalar a = normal(rng);
    const Scalar b = normal(rng);
    for (Index i = 0; i < q; ++i) {
      const Scalar x = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(mode) * Scalar(i) /
                       Scalar(q);
      y[i] += a * std::cos(x) + b * std::sin(x);
    }
  }
  const Scalar peak = y.cwiseAbs().maxCoeff();
  if (peak > Scalar(0)) y *= amplitude / peak;
  return y;
}

template <class Scalar, class Derived>
SpatioTemporalField<Scalar> integrate_ks(const KsParams<Scalar>& params,
                                         const Eigen::MatrixBase<Derived>& init,
                                         Index n_transient, Index n_samples) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  KsIntegrator<Scalar> integrator(params);
  integrator.set_state(init.eval());
  for (Index i = 0; i < n_transient; ++i) integrator.advance_sample();
  SpatioTemporalField<Scalar> out;
  out.domain_length = params.domain_length;
  out.dt = params.sample_dt;
  out.grid.resize(params.grid_points, n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    out.grid.col(i) = integrator.field();
    if (i + 1 < n_samples) integrator.advance_sample();
  }
  return out;
}

template <class Scalar>
SpatioTemporalField<Scalar> integrate_ks(const KsParams<Scalar>& params, std::uint64_t seed,
                                         Index n_transient, Index n_samples) {
  return integrate_ks(params, lowpass_random_field(params, seed), n_transient, n_samples);
}

}  // namespace scalesn
