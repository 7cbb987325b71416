#pragma once

// Step functions on a tower: X_k-measurable functions are functions of the
// height y in [0, h_k) only, so they are stored as piecewise-constant
// complex values over exact breakpoints.

#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "rank1/scalar.hpp"
#include "rank1/schedule.hpp"

namespace rank1 {

using Complex = std::complex<double>;

class StepFunction {
 public:
  StepFunction() = default;
  // breakpoints 0 = b_0 < ... < b_m, one value per [b_{i-1}, b_i).
  StepFunction(std::size_t stage, std::vector<Scalar> breakpoints, std::vector<Complex> values);

  static StepFunction constant(std::size_t stage, const Scalar& height, Complex value);
  // value on [a, b), zero elsewhere in [0, height).
  static StepFunction indicator(std::size_t stage, const Scalar& height, const Scalar& a, const Scalar& b,
                                Complex value = 1.0);

  std::size_t stage() const { return stage_; }
  const Scalar& height() const { return breakpoints_.back(); }
  const std::vector<Scalar>& breakpoints() const { return breakpoints_; }
  const std::vector<Complex>& values() const { return values_; }
  std::size_t pieces() const { return values_.size(); }

  double sup_norm() const;
  // Total variation of the function extended by zero outside [0, h).
  double total_variation() const;
  // Value at height y; zero outside [0, h).
  Complex operator()(const Scalar& y) const;

  // Lebesgue integrals over [0, h) (no tower width factor).
  Complex integral() const;
  double abs_integral() const;
  double square_integral() const;

  StepFunction merged() const;
  StepFunction conj() const;
  StepFunction abs() const;
  StepFunction scaled(Complex c) const;
  StepFunction operator+(const StepFunction& o) const;

 private:
  std::size_t stage_ = 1;
  std::vector<Scalar> breakpoints_;
  std::vector<Complex> values_;
};

// The function on stage N that equals f on every copy of X_k and 0 on all
// spacer levels. Explicit: only used for small depths (oracle, audits).
StepFunction lift(const Schedule& schedule, const StepFunction& f, std::size_t N, std::size_t guard = 1000000);

// (reflect f)(y) = f(h_k - y).
StepFunction reflect(const StepFunction& f);

// <f, g> = w_k * integral f conj(g) over [0, h_k).
Complex inner_product(const Schedule& schedule, const StepFunction& f, const StepFunction& g);
double norm2(const Schedule& schedule, const StepFunction& f);

// integral over R of prod_i fs[i](z - shifts[i]) dz, each function taken
// as zero outside [0, h). Exact up to double rounding of the breakpoints.
Complex shifted_product_integral(const std::vector<const StepFunction*>& fs, const std::vector<double>& shifts);

// Random test functions. Breakpoints are multiples of h / grid; values are
// multiples of 1/4 in [-1, 1] (real unless `complex_values`).
struct RandomStepOptions {
  std::size_t grid = 64;
  std::size_t max_pieces = 6;
  bool complex_values = false;
  bool mean_zero = false;
};

StepFunction random_step_function(std::mt19937_64& rng, std::size_t stage, const Scalar& height,
                                  const RandomStepOptions& options = {});

// Indicator of a union of grid cells [i h/grid, (i+1) h/grid): a level set.
StepFunction random_level_set(std::mt19937_64& rng, std::size_t stage, const Scalar& height, std::size_t grid,
                              std::size_t min_cells = 1);

// Uniform integer in [0, n) from raw generator output (portable across
// standard libraries).
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

}  // namespace rank1
