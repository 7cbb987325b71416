#include "rank1/spacer.hpp"

#include <string>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

SpacerMap::SpacerMap(Variant v, std::optional<Scalar> bottom) : variant_(std::move(v)), bottom_(std::move(bottom)) {
  if (bottom_ && bottom_->sign() < 0) throw ConfigError("bottom spacer must be >= 0");
  if (auto* fs = std::get_if<FractionSplit>(&variant_); fs && fs->q < 1) {
    throw ConfigError("FractionSplit needs q >= 1");
  }
  if (auto* pg = std::get_if<PairedGaps>(&variant_); pg && pg->gaps.size() != pg->separators.size()) {
    throw ConfigError("PairedGaps needs as many separators as gaps");
  }
  if (auto* sym = std::get_if<Symmetrized>(&variant_); sym && (!sym->inner || sym->inner_r < 2)) {
    throw ConfigError("Symmetrized needs an inner map with at least 2 copies");
  }
}

SpacerMap SpacerMap::symmetrized(const SpacerMap& inner, std::size_t inner_r) {
  return SpacerMap(Symmetrized{std::make_shared<const SpacerMap>(inner), inner_r});
}

std::string SpacerMap::variant_name() const {
  return std::visit(overloaded{
                        [](const ExplicitList&) { return std::string("explicit"); },
                        [](const Constant&) { return std::string("constant"); },
                        [](const Staircase&) { return std::string("staircase"); },
                        [](const FractionSplit&) { return std::string("fraction_split"); },
                        [](const PairedGaps&) { return std::string("paired_gaps"); },
                        [](const Symmetrized&) { return std::string("symmetrized"); },
                    },
                    variant_);
}

Scalar SpacerMap::at(std::size_t j, std::size_t r) const {
  if (j < 1 || j > r) throw RangeError("spacer index " + std::to_string(j) + " outside 1.." + std::to_string(r));
  return std::visit(overloaded{
                        [&](const ExplicitList& e) {
                          if (e.values.size() != r) throw ConfigError("explicit spacer list length != r");
                          return e.values[j - 1];
                        },
                        [&](const Constant& c) { return c.c; },
                        [&](const Staircase& s) { return Scalar(static_cast<long>(j - 1)) * s.u; },
                        [&](const FractionSplit& f) {
                          return j <= ceil_div(r, static_cast<std::size_t>(f.q)) ? Scalar(0) : f.s;
                        },
                        [&](const PairedGaps& p) {
                          if (r != 2 * p.gaps.size()) throw ConfigError("PairedGaps needs r = 2k");
                          std::size_t i = (j + 1) / 2;
                          return j % 2 == 1 ? p.gaps[i - 1] : p.separators[i - 1];
                        },
                        [&](const Symmetrized& s) {
                          if (r != 2 * s.inner_r - 1) throw ConfigError("Symmetrized needs r = 2*inner_r - 1");
                          return j <= s.inner_r - 1 ? s.inner->at(s.inner_r - j, s.inner_r)
                                                    : s.inner->at(j - s.inner_r + 1, s.inner_r);
                        },
                    },
                    variant_);
}

Scalar SpacerMap::bottom() const {
  if (auto* s = std::get_if<Symmetrized>(&variant_)) {
    Scalar b = s->inner->at(s->inner_r, s->inner_r);
    // An inner bottom spacer would break the palindrome; it is not supported.
    if (s->inner->has_bottom()) throw ConfigError("cannot symmetrize a map that has a bottom spacer");
    return b;
  }
  return bottom_.value_or(Scalar(0));
}

std::vector<Scalar> SpacerMap::values(std::size_t r) const {
  std::vector<Scalar> out;
  out.reserve(r);
  for (std::size_t j = 1; j <= r; ++j) out.push_back(at(j, r));
  return out;
}

void SpacerMap::validate(std::size_t r) const {
  if (r < 2) throw ConfigError("cut number r must be > 1");
  if (auto* e = std::get_if<ExplicitList>(&variant_); e && e->values.size() != r) {
    throw ConfigError("explicit spacer list has " + std::to_string(e->values.size()) + " entries, r = " +
                      std::to_string(r));
  }
  if (auto* p = std::get_if<PairedGaps>(&variant_); p && r != 2 * p->gaps.size()) {
    throw ConfigError("PairedGaps with k = " + std::to_string(p->gaps.size()) + " needs r = 2k");
  }
  if (auto* s = std::get_if<Symmetrized>(&variant_); s && r != 2 * s->inner_r - 1) {
    throw ConfigError("Symmetrized map needs r = 2*inner_r - 1");
  }
  for (std::size_t j = 1; j <= r; ++j) {
    if (at(j, r).sign() < 0) throw ConfigError("negative spacer at index " + std::to_string(j));
  }
  if (bottom().sign() < 0) throw ConfigError("negative bottom spacer");
}

bool SpacerMap::is_constant() const {
  if (std::holds_alternative<Constant>(variant_)) return true;
  if (auto* s = std::get_if<Staircase>(&variant_)) return s->u.is_zero();
  return false;
}

}  // namespace rank1
