#pragma once

// Koopman matrix coefficients of a rank-one flow.
//
// Convention: (U(t) f)(x) = f(T_{-t} x) and T_t moves points up, so in
// tower coordinates (U(t) f)(y) = f(y - t). For f, g on stage k and a
// stage N >= k,
//
//   <U(t) f, g> ~ w_N A_N(t),   A_n(tau) = int F_n(z - tau) conj(G_n(z)) dz,
//
// where F_n, G_n are the lifts to stage n. The lifts satisfy
// A_{n+1}(tau) = sum over copy pairs (j, j') of A_n(tau + o_{n,j'} - o_{n,j}),
// and only |argument| < h_n contributes. Starting from {t: 1} at stage N
// the engine pushes an exact table of shifts with integer path counts down
// to stage k and finishes with closed-form shifted integrals.

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rank1/schedule.hpp"
#include "rank1/step_function.hpp"

namespace rank1 {

struct CorrelationResult {
  Complex value;
  double error_bound = 0.0;
  std::size_t stage_used = 0;
  std::size_t shifts_used = 0;  // largest memo table during the push-down
};

struct CorrelateOptions {
  // Use exactly this stage N instead of the automatic choice.
  std::optional<std::size_t> stage;
  std::size_t min_stage = 0;
  // Automatic choice: smallest N with h_N >= margin * (h_k + |t|).
  double margin = 4.0;
  // When > 0, keep deepening N until error_bound <= bound_tolerance.
  double bound_tolerance = 0.0;
  std::size_t scan_limit = 256;
  std::size_t max_shifts = 1000000;
};

CorrelationResult correlate(const Schedule& schedule, const StepFunction& f, const StepFunction& g, const Scalar& t,
                            const CorrelateOptions& options = {});

// integral of prod_i f_i(T_{-t_i} x) dmu(x); times[0] must be 0.
CorrelationResult m_correlate(const Schedule& schedule, const std::vector<StepFunction>& fs,
                              const std::vector<Scalar>& times, const CorrelateOptions& options = {});

// alpha I + beta U(shift).
struct WeakLimitTarget {
  Complex alpha = 1.0;
  Complex beta = 0.0;
  Scalar shift{0};

  static WeakLimitTarget identity() { return {1.0, 0.0, Scalar(0)}; }
  static WeakLimitTarget zero() { return {0.0, 0.0, Scalar(0)}; }
  static WeakLimitTarget scaled_identity(Complex a) { return {a, 0.0, Scalar(0)}; }
  static WeakLimitTarget combination(Complex a, Complex b, Scalar s) { return {a, b, std::move(s)}; }
};

struct WeakLimitTerm {
  std::size_t j = 0;
  Scalar time;
  double residual = 0.0;
  double bound = 0.0;
  std::size_t stage_used = 0;
};

struct WeakLimitReport {
  std::vector<WeakLimitTerm> terms;
  double threshold = 0.0;
  double final_residual = 0.0;
  bool passed = false;  // final residual below threshold
};

using TestPair = std::pair<StepFunction, StepFunction>;

WeakLimitReport weak_limit_probe(const Schedule& schedule, const std::function<Scalar(std::size_t)>& times,
                                 const WeakLimitTarget& target, const std::vector<TestPair>& family, std::size_t J,
                                 double threshold, const CorrelateOptions& options = {});

// One factor of a Cartesian product flow: the flow T o c (time scaled by c).
struct ProductFactor {
  const Schedule* schedule;
  Scalar scale;
  StepFunction f;
  StepFunction g;
};

CorrelationResult product_correlate(const std::vector<ProductFactor>& factors, const Scalar& t,
                                    const CorrelateOptions& options = {});

// Koopman direct sum over s in S_fin of U_{T o s}; f[s] / g[s] may be absent.
struct DirectSumComponent {
  Scalar scale;
  std::optional<StepFunction> f;
  std::optional<StepFunction> g;
};

CorrelationResult direct_sum_correlate(const Schedule& schedule, const std::vector<DirectSumComponent>& components,
                                       const Scalar& t, const CorrelateOptions& options = {});

// O^{n_1..n_k}_{s_1..s_k} with test vector (x)_l f_l^{(.) n_l}.
struct FockComponent {
  std::vector<Scalar> shifts;
  std::vector<std::size_t> multiplicities;
  std::vector<StepFunction> functions;
};

CorrelationResult component_correlate(const Schedule& schedule, const FockComponent& component, const Scalar& t,
                                      const CorrelateOptions& options = {});

// Rigorous bound for a product of uncertain factors:
// prod(|v_i| + b_i) - prod |v_i|.
double product_error_bound(const std::vector<CorrelationResult>& factors);

}  // namespace rank1
