#pragma once

// Cutting-and-stacking schedules and the exact tower geometry they define.
//
// Stage n is a tower X_n of height h_n and width w_n. It is cut into r_n
// columns; column j receives a spacer s_n(j) on top; the columns are
// stacked left to right, optionally above a bottom spacer b_n:
//
//   o_{n,1}   = b_n
//   o_{n,j+1} = o_{n,j} + h_n + s_n(j)
//   h_{n+1}   = b_n + r_n h_n + sum_j s_n(j),   w_{n+1} = w_n / r_n
//
// o_{n,j} is the position of copy j of X_n inside X_{n+1}.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rank1/scalar.hpp"
#include "rank1/spacer.hpp"

namespace rank1 {

struct StageParams {
  std::size_t r = 2;
  SpacerMap spacers;
  // Construction class of this stage ("flat", "staircase", "L2[s=2,q=2]", ...).
  std::string label;
  // Probe time attached by the construction.
  std::optional<Scalar> time;
  // 1-based occurrence index of this stage within its class.
  std::size_t occurrence = 0;
};

struct TowerStage {
  std::size_t n = 0;
  Scalar height;
  Scalar width;
  StageParams params;

  std::vector<Scalar> spacers;  // s(1..r) at index 0..r-1
  Scalar bottom_spacer;
  std::vector<Scalar> offsets;         // o_{n,1..r} at index 0..r-1
  std::vector<double> offsets_approx;  // filter only, never used for decisions
  Scalar next_height;
  Scalar next_width;
  Scalar tower_measure;      // h_n * w_n
  Scalar spacer_total;       // b_n + sum_j s_n(j)
  Scalar spacer_mass_added;  // w_{n+1} * spacer_total

  // Offsets form an arithmetic progression with difference `pitch`
  // (s(1) = ... = s(r-1)).
  bool arithmetic = false;
  Scalar pitch;

  std::size_t r() const { return params.r; }
  // 1-based accessor j -> o_{n,j}.
  const Scalar& offset(std::size_t j) const { return offsets.at(j - 1); }
};

class Schedule {
 public:
  // Stage parameters may depend on the current tower height (the scale-set
  // layout picks its time scale from h_n); generators must be pure.
  using Generator = std::function<StageParams(std::size_t n, const Scalar& height)>;

  struct Options {
    ScalarMode mode = ScalarMode::Rational;
    std::size_t digit_budget = 100000;
    // Number of parameterised stages; nullopt for unbounded generators.
    std::optional<std::size_t> stage_count;
    // JSON text describing how to rebuild this schedule (may be empty).
    std::string descriptor;
  };

  Schedule(Scalar h1, Scalar w1, Generator generator, Options options);

  static Schedule from_stages(Scalar h1, Scalar w1, std::vector<StageParams> stages,
                              ScalarMode mode = ScalarMode::Rational);

  // Geometry of stage n >= 1 (cached; thread-safe).
  std::shared_ptr<const TowerStage> stage(std::size_t n) const;

  // h_n, w_n, mu(X_n) = h_n w_n; valid up to stage_count + 1.
  Scalar height(std::size_t n) const;
  Scalar width(std::size_t n) const;
  Scalar measure(std::size_t n) const;

  ScalarMode mode() const;
  std::optional<std::size_t> stage_count() const;
  const std::string& descriptor() const;
  std::size_t digit_budget() const;

  // Converts a scalar to this schedule's arithmetic mode, throwing
  // ModeError for sqrt(2) values in rational mode.
  Scalar coerce(const Scalar& value, const std::string& what) const;

  // Smallest n >= from with h_n >= bound, scanning at most `limit` stages.
  std::optional<std::size_t> first_stage_with_height(const Scalar& bound, std::size_t from,
                                                     std::size_t limit) const;

  // Generator access for derived constructions (symmetrization).
  StageParams raw_params(std::size_t n, const Scalar& height) const;

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

// Ordering for shift-keyed tables. Exact scalars use the coefficient order;
// float scalars are compared after quantization to multiples of `quantum`.
struct ShiftLess {
  double quantum = 0.0;
  bool operator()(const Scalar& x, const Scalar& y) const;
};

struct OverlapPair {
  Scalar delta;
  std::size_t multiplicity;
};

// Calls visit(delta, count) for the pairs (j, j') with
// |shift + o_{n,j'} - o_{n,j}| < h_n; a delta may be reported more than once.
void visit_overlaps(const TowerStage& stage, const Scalar& shift,
                    const std::function<void(const Scalar&, std::size_t)>& visit);

// All distinct delta = shift + o_{n,j'} - o_{n,j} with |delta| < h_n over
// ordered pairs (j, j'), grouped with their pair counts, sorted ascending.
std::vector<OverlapPair> overlap_pairs(const TowerStage& stage, const Scalar& shift,
                                       std::size_t guard = 1000000);

struct FinitenessVerdict {
  enum class Kind { FiniteSoFar, Diverged, Inconclusive };
  Kind kind = Kind::FiniteSoFar;
  Scalar partial_sum;
  std::vector<Scalar> partial_sums;  // after stages 1..horizon
};

std::string to_string(FinitenessVerdict::Kind kind);

// Partial sums of sum_n (b_n + sum_j s_n(j)) / (h_n r_n), the series whose
// convergence is equivalent to mu(X) < infinity.
FinitenessVerdict finiteness_test(const Schedule& schedule, std::size_t horizon, const Scalar& budget);

}  // namespace rank1
