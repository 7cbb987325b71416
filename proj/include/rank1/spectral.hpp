#pragma once

// Spectral measures from autocorrelations.
//
//   c(t) = <U(t) f, f> = int exp(2 pi i lambda t) d sigma_f(lambda)
//
// is inverted on a uniform grid with a tapered discrete Fourier sum.
// Estimates live on uniform frequency grids; dilation rescales the grid
// itself, so it is exact and forms a group.

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rank1/koopman.hpp"

namespace rank1 {

struct AutocorrCurve {
  double dt = 0.0;
  double t_max = 0.0;
  std::vector<double> times;   // -M dt .. M dt
  std::vector<Complex> values;
  std::vector<double> bounds;

  std::size_t half() const { return times.size() / 2; }  // index of t = 0

  // Samples an analytic autocorrelation (tests, calibration).
  static AutocorrCurve from_function(const std::function<Complex(double)>& c, double dt, double t_max);
};

// c(i dt) for i >= 0 via correlate; negative times by Hermitian symmetry.
AutocorrCurve autocorr_curve(const Schedule& schedule, const StepFunction& f, const Scalar& dt, const Scalar& t_max,
                             const CorrelateOptions& options = {}, std::size_t threads = 0);

struct SpectralEstimate {
  double lambda_min = 0.0;
  double step = 0.0;
  std::vector<double> density;
  double mass = 0.0;
  std::string taper = "gaussian-rolloff";
  double taper_width = 0.0;
  double clipped = 0.0;  // negative mass removed before renormalization

  double lambda(std::size_t i) const { return lambda_min + step * static_cast<double>(i); }
  std::size_t size() const { return density.size(); }
  // Mass of the density over [a, b] (whole cells whose centre lies inside).
  double mass_in(double a, double b) const;
};

// Taper: 1 on |t| <= T_max - W, Gaussian roll-off exp(-(|t| - T_max + W)^2 / (2 (W/3)^2)) beyond.
double taper_weight(double t, double t_max, double width);

// density(lambda) = dt sum_i w(t_i) c(t_i) exp(-2 pi i lambda t_i) on
// grid_size points spanning [-Lambda, Lambda]; negatives clipped, then
// rescaled so that sum density * step = c(0).
SpectralEstimate bochner_density(const AutocorrCurve& curve, double Lambda, std::size_t grid_size, double taper_width);

// sigma_t(A) = sigma(t A): density'(lambda) = t density(t lambda).
SpectralEstimate dilate(const SpectralEstimate& est, double t);

// Hellinger affinity sum sqrt(p_i q_i) of the mass-normalized estimates.
double affinity(const SpectralEstimate& a, const SpectralEstimate& b);

// sum_j 2^{-j} est_j (j = 1..J) on a common grid.
SpectralEstimate aggregate(const std::vector<SpectralEstimate>& parts);

// Resamples onto a grid by linear interpolation (zero outside the source range).
SpectralEstimate regrid(const SpectralEstimate& est, double lambda_min, double step, std::size_t size);

std::string to_csv(const SpectralEstimate& est);

}  // namespace rank1
