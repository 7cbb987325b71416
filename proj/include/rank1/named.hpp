#pragma once

// Named constructions. Each builder returns a deterministic Schedule whose
// descriptor records the parameters, so it can be serialized and rebuilt.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rank1/schedule.hpp"

namespace rank1 {

// r_n = min(r * r_growth^(n-1), r_cap), every spacer equal to `spacer`.
struct FlatParams {
  std::size_t r = 2;
  std::size_t r_growth = 1;
  std::size_t r_cap = 4096;
  Scalar spacer{0};
  Scalar h1{1};
  Scalar w1{1};
  std::optional<std::size_t> stages;
};

// r_n = min(r_base^n, r_cap). Stages n_k = period * k carry the staircase
// s(j) = (j-1) u_k with u_k = 1 / floor(sqrt(r_{n_k})); all other stages
// are spacer-free.
struct Staircase34Params {
  std::size_t r_base = 4;
  std::size_t r_cap = 4096;
  std::size_t period = 2;
  Scalar h1{1};
  Scalar w1{1};
  std::optional<std::size_t> stages;
};

// Odd stages l_i = 2i-1: r = 5, spacers (0,1,1,2,2).
// Even stages l_i + 1: r = min(r_start * growth^(i-1), r_cap), no spacers.
struct Asym49Params {
  std::size_t r_start = 4;
  std::size_t growth = 2;
  std::size_t r_cap = 64;
  Scalar h1{1};
  Scalar w1{1};
  std::optional<std::size_t> stages;
};

// Stage classes of the scale-set construction.
struct Thm44Class {
  enum class Kind { L1, L2, M };
  Kind kind;
  Scalar s;                     // L1 / L2
  long q = 0;                   // L1 / L2
  std::vector<Scalar> tuple;    // M: s_1 < ... < s_k
  std::size_t l0 = 0;           // M: 1-based
  std::string label() const;
};

struct Thm44Params {
  std::vector<Scalar> scales;   // finite part of S, positive
  long q_max = 2;
  std::size_t k_max = 1;
  std::size_t r_cap = 4096;
  Scalar growth{10};            // G
  std::size_t horizon = 24;     // every class must occur within this many stages
  Scalar h1{1};
  Scalar w1{1};
  std::optional<std::size_t> stages;
};

Schedule flat_schedule(const FlatParams& p);
Schedule staircase34_schedule(const Staircase34Params& p);
Schedule asym49_schedule(const Asym49Params& p);
Schedule thm44_schedule(const Thm44Params& p);

// Class list of a thm44 schedule in round-robin order: stage n belongs to
// classes[(n-1) % size] and is its ((n-1)/size + 1)-th occurrence.
std::vector<Thm44Class> thm44_classes(const Thm44Params& p);

// Stages 1..limit whose label equals `label`, ascending.
std::vector<std::size_t> stages_with_label(const Schedule& s, const std::string& label, std::size_t limit);

// Palindromic respacing: r' = 2r - 1 copies, bottom spacer s(r), spacers
// s(r-1), ..., s(1) above copies 1..r-1 and s(1), ..., s(r) above copies
// r..2r-1. Stage parameters are read from the input schedule.
Schedule symmetrize(const Schedule& s);

}  // namespace rank1
