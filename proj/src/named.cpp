#include "rank1/named.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

using nlohmann::json;

std::size_t capped_power(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (v >= cap / std::max<std::size_t>(base, 1) + 1) return cap;
    v *= base;
  }
  return std::min(v, cap);
}

std::size_t capped_factorial(std::size_t n, std::size_t cap) {
  std::size_t v = 1;
  for (std::size_t i = 2; i <= n; ++i) {
    if (v > cap / i) return cap;
    v *= i;
  }
  return std::min(v, cap);
}

json scalar_json(const Scalar& s) { return s.str(); }

json scalars_json(const std::vector<Scalar>& v) {
  json a = json::array();
  for (const auto& s : v) a.push_back(s.str());
  return a;
}

void put_stages(json& params, const std::optional<std::size_t>& stages) {
  if (stages) params["stages"] = *stages;
}

json named_doc(const std::string& kind, json params, ScalarMode mode) {
  return json{{"mode", to_string(mode)}, {"named", {{"kind", kind}, {"params", std::move(params)}}}};
}

ScalarMode mode_for(std::initializer_list<const Scalar*> values) {
  bool quad = false;
  for (const Scalar* v : values) {
    if (v->is_float()) return ScalarMode::Float;
    quad = quad || v->has_sqrt2();
  }
  return quad ? ScalarMode::Quadratic : ScalarMode::Rational;
}

}  // namespace

Schedule flat_schedule(const FlatParams& p) {
  if (p.r < 2) throw ConfigError("flat: r must be > 1");
  if (p.r_growth < 1) throw ConfigError("flat: r_growth must be >= 1");
  if (p.r_cap < 2) throw ConfigError("flat: r_cap must be > 1");
  if (p.spacer.sign() < 0) throw ConfigError("flat: spacer must be >= 0");
  json params{{"r", p.r},          {"r_growth", p.r_growth}, {"r_cap", p.r_cap},
              {"spacer", scalar_json(p.spacer)}, {"h1", scalar_json(p.h1)}, {"w1", scalar_json(p.w1)}};
  put_stages(params, p.stages);
  Schedule::Options opts;
  opts.mode = mode_for({&p.spacer, &p.h1, &p.w1});
  opts.stage_count = p.stages;
  opts.descriptor = named_doc("flat", params, opts.mode).dump();
  FlatParams q = p;
  return Schedule(p.h1, p.w1,
                  [q](std::size_t n, const Scalar&) {
                    StageParams sp;
                    std::size_t r = q.r;
                    for (std::size_t i = 1; i < n && r < q.r_cap; ++i) r = r > q.r_cap / q.r_growth ? q.r_cap : r * q.r_growth;
                    sp.r = std::min(r, q.r_cap);
                    sp.spacers = SpacerMap(SpacerMap::Constant{q.spacer});
                    sp.label = "flat";
                    sp.occurrence = n;
                    return sp;
                  },
                  std::move(opts));
}

Schedule staircase34_schedule(const Staircase34Params& p) {
  if (p.r_base < 2) throw ConfigError("staircase34: r_base must be > 1");
  if (p.r_cap < 2) throw ConfigError("staircase34: r_cap must be > 1");
  if (p.period < 2) throw ConfigError("staircase34: period must be >= 2 (the stage before a staircase is flat)");
  json params{{"r_base", p.r_base}, {"r_cap", p.r_cap}, {"period", p.period},
              {"h1", scalar_json(p.h1)}, {"w1", scalar_json(p.w1)}};
  put_stages(params, p.stages);
  Schedule::Options opts;
  opts.mode = mode_for({&p.h1, &p.w1});
  opts.stage_count = p.stages;
  opts.descriptor = named_doc("staircase34", params, opts.mode).dump();
  Staircase34Params q = p;
  return Schedule(p.h1, p.w1,
                  [q](std::size_t n, const Scalar&) {
                    StageParams sp;
                    sp.r = capped_power(q.r_base, n, q.r_cap);
                    if (n % q.period == 0) {
                      mpz_class root;
                      mpz_class rz(static_cast<unsigned long>(sp.r));
                      mpz_sqrt(root.get_mpz_t(), rz.get_mpz_t());
                      sp.spacers = SpacerMap(SpacerMap::Staircase{Scalar(mpq_class(mpz_class(1), root))});
                      sp.label = "staircase";
                      sp.occurrence = n / q.period;
                    } else {
                      sp.spacers = SpacerMap::zero();
                      sp.label = "flat";
                      sp.occurrence = n - n / q.period;
                    }
                    return sp;
                  },
                  std::move(opts));
}

Schedule asym49_schedule(const Asym49Params& p) {
  if (p.r_start < 2) throw ConfigError("asym49: r_start must be > 1");
  if (p.growth < 1) throw ConfigError("asym49: growth must be >= 1");
  if (p.r_cap < 2) throw ConfigError("asym49: r_cap must be > 1");
  json params{{"r_start", p.r_start}, {"growth", p.growth}, {"r_cap", p.r_cap},
              {"h1", scalar_json(p.h1)}, {"w1", scalar_json(p.w1)}};
  put_stages(params, p.stages);
  Schedule::Options opts;
  opts.mode = mode_for({&p.h1, &p.w1});
  opts.stage_count = p.stages;
  opts.descriptor = named_doc("asym49", params, opts.mode).dump();
  Asym49Params q = p;
  return Schedule(p.h1, p.w1,
                  [q](std::size_t n, const Scalar&) {
                    StageParams sp;
                    std::size_t i = (n + 1) / 2;
                    sp.occurrence = i;
                    if (n % 2 == 1) {
                      sp.r = 5;
                      sp.spacers = SpacerMap(SpacerMap::ExplicitList{{0, 1, 1, 2, 2}});
                      sp.label = "asym";
                    } else {
                      std::size_t r = q.r_start;
                      for (std::size_t k = 1; k < i && r < q.r_cap; ++k) {
                        r = r > q.r_cap / q.growth ? q.r_cap : r * q.growth;
                      }
                      sp.r = std::min(r, q.r_cap);
                      sp.spacers = SpacerMap::zero();
                      sp.label = "mixing";
                    }
                    return sp;
                  },
                  std::move(opts));
}

std::string Thm44Class::label() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::L1:
      os << "L1[s=" << s.str() << ",q=" << q << "]";
      break;
    case Kind::L2:
      os << "L2[s=" << s.str() << ",q=" << q << "]";
      break;
    case Kind::M:
      os << "M[";
      for (std::size_t i = 0; i < tuple.size(); ++i) os << (i ? "," : "") << tuple[i].str();
      os << ";l0=" << l0 << "]";
      break;
  }
  return os.str();
}

std::vector<Thm44Class> thm44_classes(const Thm44Params& p) {
  if (p.scales.empty()) throw ConfigError("thm44: the generating set S is empty");
  if (p.q_max < 2) throw ConfigError("thm44: q_max must be >= 2");
  if (p.k_max < 1) throw ConfigError("thm44: k_max must be >= 1");
  std::vector<Scalar> S = p.scales;
  for (const auto& s : S) {
    if (s.sign() <= 0) throw ConfigError("thm44: scales must be positive, got " + s.str());
  }
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());

  std::vector<Thm44Class> out;
  for (const auto& s : S) {
    for (long q = 2; q <= p.q_max; ++q) {
      out.push_back({Thm44Class::Kind::L1, s, q, {}, 0});
      out.push_back({Thm44Class::Kind::L2, s, q, {}, 0});
    }
  }
  // Increasing k-subsets of S in lexicographic order.
  for (std::size_t k = 1; k <= std::min(p.k_max, S.size()); ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::vector<Scalar> tuple;
      for (auto i : idx) tuple.push_back(S[i]);
      for (std::size_t l0 = 1; l0 <= k; ++l0) out.push_back({Thm44Class::Kind::M, Scalar(0), 0, tuple, l0});
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == S.size() - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  if (out.size() > p.horizon) {
    std::string missing;
    for (std::size_t i = p.horizon; i < out.size(); ++i) missing += (missing.empty() ? "" : ", ") + out[i].label();
    throw ConfigError("thm44: " + std::to_string(out.size()) + " classes do not fit in horizon " +
                      std::to_string(p.horizon) + "; unreachable: " + missing);
  }
  return out;
}

Schedule thm44_schedule(const Thm44Params& p) {
  auto classes = std::make_shared<const std::vector<Thm44Class>>(thm44_classes(p));
  if (p.r_cap < 2) throw ConfigError("thm44: r_cap must be > 1");
  if (p.growth <= Scalar(1)) throw ConfigError("thm44: growth factor G must be > 1");

  json params{{"scales", scalars_json(p.scales)}, {"q_max", p.q_max},  {"k_max", p.k_max},
              {"r_cap", p.r_cap},                 {"growth", scalar_json(p.growth)}, {"horizon", p.horizon},
              {"h1", scalar_json(p.h1)},          {"w1", scalar_json(p.w1)}};
  put_stages(params, p.stages);
  Schedule::Options opts;
  // L1 spacers are sqrt(2) s, so the construction always needs Q(sqrt 2).
  opts.mode = ScalarMode::Quadratic;
  for (const auto& s : p.scales) {
    if (s.is_float()) throw ConfigError("thm44: scales must be exact");
  }
  opts.stage_count = p.stages;
  opts.descriptor = named_doc("thm44", params, opts.mode).dump();
  Thm44Params q = p;
  return Schedule(p.h1, p.w1,
                  [q, classes](std::size_t n, const Scalar& h) {
                    const std::size_t C = classes->size();
                    const Thm44Class& cls = (*classes)[(n - 1) % C];
                    const std::size_t j = (n - 1) / C + 1;
                    StageParams sp;
                    sp.label = cls.label();
                    sp.occurrence = j;
                    if (cls.kind != Thm44Class::Kind::M) {
                      sp.r = std::max<std::size_t>(2, capped_factorial(n, q.r_cap));
                      if (cls.kind == Thm44Class::Kind::L1) {
                        sp.spacers = SpacerMap(SpacerMap::Constant{Scalar::sqrt2() * cls.s});
                      } else {
                        sp.spacers = SpacerMap(SpacerMap::FractionSplit{cls.q, cls.s});
                      }
                      sp.time = -h;
                      return sp;
                    }
                    const auto& s = cls.tuple;
                    const std::size_t k = s.size();
                    const Scalar& s_max = s.back();
                    Scalar delta = s.front();
                    for (std::size_t i = 1; i < k; ++i) delta = min(delta, s[i] - s[i - 1]);
                    // t_j: smallest power of two >= 2^j with t_j * delta >= G (h_n + s_max).
                    Scalar t(1);
                    for (std::size_t i = 0; i < j; ++i) t *= Scalar(2);
                    const Scalar need = q.growth * (h + s_max);
                    while (t * delta < need) t *= Scalar(2);
                    std::vector<Scalar> gaps, seps;
                    Scalar g_pow = q.growth;
                    for (std::size_t i = 1; i <= k; ++i) {
                      Scalar g = t * s[i - 1] - h;
                      if (i == cls.l0) g -= s[i - 1];
                      gaps.push_back(g);
                      seps.push_back(Scalar(static_cast<unsigned long>(j)) * t * s_max * g_pow);
                      g_pow *= q.growth;
                    }
                    sp.r = 2 * k;
                    sp.spacers = SpacerMap(SpacerMap::PairedGaps{std::move(gaps), std::move(seps)});
                    sp.time = t;
                    return sp;
                  },
                  std::move(opts));
}

std::vector<std::size_t> stages_with_label(const Schedule& s, const std::string& label, std::size_t limit) {
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n <= limit; ++n) {
    if (s.stage_count() && n > *s.stage_count()) break;
    if (s.stage(n)->params.label == label) out.push_back(n);
  }
  return out;
}

Schedule symmetrize(const Schedule& s) {
  Schedule::Options opts;
  opts.mode = s.mode();
  opts.stage_count = s.stage_count();
  opts.digit_budget = s.digit_budget();
  if (!s.descriptor().empty()) {
    json inner = json::parse(s.descriptor());
    opts.descriptor = json{{"mode", to_string(s.mode())}, {"symmetrized", inner}}.dump();
  }
  Schedule src = s;
  return Schedule(s.height(1), s.width(1),
                  [src](std::size_t n, const Scalar&) {
                    auto st = src.stage(n);
                    if (st->params.spacers.has_bottom() && !st->bottom_spacer.is_zero()) {
                      throw ConfigError("symmetrize: stage " + std::to_string(n) + " already has a bottom spacer");
                    }
                    StageParams sp;
                    const std::size_t r = st->r();
                    sp.r = 2 * r - 1;
                    sp.spacers = SpacerMap::symmetrized(SpacerMap(SpacerMap::ExplicitList{st->spacers}), r);
                    sp.label = st->params.label;
                    sp.occurrence = st->params.occurrence;
                    return sp;
                  },
                  std::move(opts));
}

}  // namespace rank1
