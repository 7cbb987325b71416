#pragma once

// Spacer maps: the heights s(1..r) of the spacer rectangles put on top of
// the r subcolumns when a tower is cut and restacked. Indices are 1-based
// throughout; an optional bottom spacer sits underneath the whole stack.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rank1/scalar.hpp"

namespace rank1 {

class SpacerMap {
 public:
  struct ExplicitList {
    std::vector<Scalar> values;
  };
  struct Constant {
    Scalar c;
  };
  // s(j) = (j - 1) * u
  struct Staircase {
    Scalar u;
  };
  // s(j) = 0 for j <= ceil(r/q), s otherwise
  struct FractionSplit {
    long q;
    Scalar s;
  };
  // r = 2k copies in k pairs: gap g_i above copy 2i-1, separator a_i above
  // copy 2i (a_k is the top spacer).
  struct PairedGaps {
    std::vector<Scalar> gaps;
    std::vector<Scalar> separators;
  };
  // Palindromic respacing of an inner map with inner_r copies; the result
  // has 2*inner_r - 1 copies and bottom spacer inner(inner_r).
  struct Symmetrized {
    std::shared_ptr<const SpacerMap> inner;
    std::size_t inner_r;
  };

  using Variant = std::variant<ExplicitList, Constant, Staircase, FractionSplit, PairedGaps, Symmetrized>;

  SpacerMap() : variant_(Constant{Scalar(0)}) {}
  explicit SpacerMap(Variant v, std::optional<Scalar> bottom = std::nullopt);

  static SpacerMap zero() { return SpacerMap(Constant{Scalar(0)}); }
  static SpacerMap symmetrized(const SpacerMap& inner, std::size_t inner_r);

  const Variant& variant() const { return variant_; }
  std::string variant_name() const;

  // s(j) for 1 <= j <= r.
  Scalar at(std::size_t j, std::size_t r) const;
  Scalar bottom() const;
  bool has_bottom() const { return bottom_.has_value() || std::holds_alternative<Symmetrized>(variant_); }
  const std::optional<Scalar>& explicit_bottom() const { return bottom_; }

  // All spacer values for a stage with r copies (index 0 holds s(1)).
  std::vector<Scalar> values(std::size_t r) const;

  // Checks that the map is usable with r copies: non-negative values,
  // list lengths matching r, PairedGaps with r = 2k.
  void validate(std::size_t r) const;

  // True when every spacer s(1..r) takes the same value.
  bool is_constant() const;

 private:
  Variant variant_;
  std::optional<Scalar> bottom_;
};

}  // namespace rank1
