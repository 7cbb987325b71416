#include "rank1/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <unordered_map>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

constexpr double kBoundSlack = 1e-12;
constexpr double kRoundingAllowance = 1e-13;

double quantum_for(const Schedule& s, std::size_t n) {
  return s.mode() == ScalarMode::Float ? 1e-12 * s.height(n).to_double() : 0.0;
}

void check_height(const Schedule& s, const StepFunction& f, const char* what) {
  if (!(f.height() == s.height(f.stage()))) {
    throw ConfigError(std::string(what) + ": breakpoints end at " + f.height().str() + " but h_" +
                      std::to_string(f.stage()) + " = " + s.height(f.stage()).str());
  }
}

// Lifts every function to the deepest stage among them.
std::vector<StepFunction> common_stage(const Schedule& s, std::vector<StepFunction> fs) {
  std::size_t k = 1;
  for (const auto& f : fs) {
    check_height(s, f, "test function");
    k = std::max(k, f.stage());
  }
  for (auto& f : fs) {
    if (f.stage() < k) f = lift(s, f, k);
  }
  return fs;
}

// Integral of |F_N| over [0, x) and over [x, h_N) for the lift F_N of f
// (stage k) to stage N, by descending through the copy structure.
class MassProfile {
 public:
  MassProfile(const Schedule& s, const StepFunction& f, std::size_t N) : s_(s), abs_(f.abs()), N_(N) {
    const std::size_t k = f.stage();
    copy_mass_.assign(N - k + 1, 0.0);
    copy_mass_[0] = abs_.abs_integral();
    for (std::size_t n = k; n < N; ++n) {
      copy_mass_[n - k + 1] = copy_mass_[n - k] * static_cast<double>(s.stage(n)->r());
    }
  }

  double total() const { return copy_mass_.back(); }

  double below(Scalar x) const {
    const std::size_t k = abs_.stage();
    if (x.sign() <= 0) return 0.0;
    if (x >= s_.height(N_)) return total();
    double acc = 0.0;
    for (std::size_t n = N_; n-- > k;) {
      auto st = s_.stage(n);
      const Scalar& h = st->height;
      // copies entirely below x
      auto it = std::partition_point(st->offsets.begin(), st->offsets.end(),
                                     [&](const Scalar& o) { return o + h <= x; });
      std::size_t full = static_cast<std::size_t>(it - st->offsets.begin());
      acc += static_cast<double>(full) * copy_mass_[n - k];
      if (full == st->r() || x < st->offsets[full]) return acc;
      x -= st->offsets[full];
    }
    return acc + partial_integral(x);
  }

  double above(Scalar x) const {
    const std::size_t k = abs_.stage();
    if (x.sign() <= 0) return total();
    if (x >= s_.height(N_)) return 0.0;
    double acc = 0.0;
    for (std::size_t n = N_; n-- > k;) {
      auto st = s_.stage(n);
      const Scalar& h = st->height;
      // copies entirely at or above x
      auto it = std::partition_point(st->offsets.begin(), st->offsets.end(), [&](const Scalar& o) { return o < x; });
      std::size_t first_above = static_cast<std::size_t>(it - st->offsets.begin());
      acc += static_cast<double>(st->r() - first_above) * copy_mass_[n - k];
      if (first_above == 0) return acc;
      const Scalar& o = st->offsets[first_above - 1];
      if (o + h <= x) return acc;
      x -= o;
    }
    return acc + copy_mass_[0] - partial_integral(x);
  }

 private:
  double partial_integral(const Scalar& x) const {
    double s = 0.0;
    const auto& bp = abs_.breakpoints();
    for (std::size_t i = 0; i < abs_.pieces(); ++i) {
      if (!(bp[i] < x)) break;
      Scalar end = min(bp[i + 1], x);
      s += abs_.values()[i].real() * (end - bp[i]).to_double();
    }
    return s;
  }

  const Schedule& s_;
  StepFunction abs_;
  std::size_t N_;
  std::vector<double> copy_mass_;
};

double correlate_bound(const Schedule& s, const StepFunction& f, const StepFunction& g, const Scalar& t,
                       std::size_t N) {
  if (t.is_zero()) return 0.0;
  const double wN = s.width(N).to_double();
  const double fs = f.sup_norm();
  const double gs = g.sup_norm();
  const Scalar hN = s.height(N);
  double bound = fs * gs * t.abs().to_double() * wN;
  MassProfile mg(s, g, N);
  MassProfile mf(s, f, N);
  double g_side = t.sign() > 0 ? mg.below(t) : mg.above(hN + t);
  double f_side = t.sign() > 0 ? mf.above(hN - t) : mf.below(-t);
  bound = std::min({bound, fs * wN * g_side, gs * wN * f_side});
  return bound * (1.0 + kBoundSlack);
}

std::size_t pick_stage(const Schedule& s, std::size_t k, const Scalar& spread, const CorrelateOptions& o,
                       const std::function<double(std::size_t)>& bound_at) {
  if (o.stage) {
    if (*o.stage < k) {
      throw RangeError("requested stage " + std::to_string(*o.stage) + " is below the test-function stage " +
                       std::to_string(k));
    }
    if (s.stage_count() && *o.stage > *s.stage_count() + 1) {
      throw RangeError("requested stage " + std::to_string(*o.stage) + " is beyond the schedule");
    }
    return *o.stage;
  }
  Scalar need = Scalar::floating(o.margin) * (s.height(k) + spread);
  if (s.mode() != ScalarMode::Float) {
    // margin is a small decimal; keep the comparison exact.
    mpq_class m;
    m = o.margin;
    need = Scalar(m) * (s.height(k) + spread);
  }
  auto found = s.first_stage_with_height(need, std::max(k, o.min_stage), o.scan_limit);
  if (!found) {
    throw RangeError("no computable stage has height >= " + std::to_string(need.to_double()) + " (time spread " +
                     spread.str() + ")");
  }
  std::size_t N = *found;
  if (o.bound_tolerance > 0) {
    std::size_t tries = 0;
    while (bound_at(N) > o.bound_tolerance && tries++ < o.scan_limit) {
      if (s.stage_count() && N + 1 > *s.stage_count() + 1) break;
      ++N;
    }
  }
  return N;
}

using Table = std::map<Scalar, mpz_class, ShiftLess>;

struct VecLess {
  ShiftLess less;
  bool operator()(const std::vector<Scalar>& a, const std::vector<Scalar>& b) const {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (less(a[i], b[i])) return true;
      if (less(b[i], a[i])) return false;
    }
    return false;
  }
};

using VecTable = std::map<std::vector<Scalar>, mpz_class, VecLess>;

void guard(std::size_t size, std::size_t limit, std::size_t n) {
  if (size > limit) {
    throw ResourceError("correlation memo exceeded " + std::to_string(limit) + " distinct shifts at stage " +
                        std::to_string(n));
  }
}


using i128 = __int128;
using u128 = unsigned __int128;

struct I128Hash {
  std::size_t operator()(i128 x) const {
    const auto u = static_cast<u128>(x);
    const auto lo = static_cast<std::uint64_t>(u);
    const auto hi = static_cast<std::uint64_t>(u >> 64);
    return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9E3779B97F4A7C15ULL));
  }
};

i128 to_i128(const mpz_class& z) {
  mpz_class a = abs(z);
  mpz_class hi = a >> 64;
  mpz_class lo = a - (hi << 64);
  u128 v = (static_cast<u128>(hi.get_ui()) << 64) | static_cast<u128>(lo.get_ui());
  return z < 0 ? -static_cast<i128>(v) : static_cast<i128>(v);
}

mpz_class from_u128(u128 v) {
  mpz_class hi(static_cast<unsigned long>(v >> 64));
  hi <<= 64;
  return hi + mpz_class(static_cast<unsigned long>(static_cast<std::uint64_t>(v)));
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

// The push-down of correlate on the lattice (1/D)Z, D the common
// denominator of t and the stage geometry. Rational schedules only, and
// only while every quantity fits in 128 bits.
std::optional<Table> lattice_push(const Schedule& s, const Scalar& t, std::size_t k, std::size_t N,
                                  std::size_t max_shifts, std::size_t& peak) {
  if (s.mode() != ScalarMode::Rational || t.is_float()) return std::nullopt;
  mpz_class D = t.rational_part().get_den();
  double log_paths = 0.0;
  for (std::size_t n = k; n < N; ++n) {
    auto st = s.stage(n);
    mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), st->height.rational_part().get_den_mpz_t());
    mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), st->bottom_spacer.rational_part().get_den_mpz_t());
    for (const auto& v : st->spacers) mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), v.rational_part().get_den_mpz_t());
    log_paths += std::log2(static_cast<double>(st->r()));
  }
  if (log_paths > 120.0) return std::nullopt;
  const mpq_class reach = (abs(t.rational_part()) + 4 * s.height(N).rational_part()) * D;
  if (mpz_sizeinbase(reach.get_num_mpz_t(), 2) > 120) return std::nullopt;

  auto lattice = [&](const Scalar& x) {
    mpq_class q = x.rational_part() * D;
    return to_i128(q.get_num());
  };
  std::unordered_map<i128, u128, I128Hash> table;
  table.emplace(lattice(t), 1);
  std::vector<i128> O;
  for (std::size_t n = N; n-- > k;) {
    auto st = s.stage(n);
    const i128 H = lattice(st->height);
    const long r = static_cast<long>(st->r());
    std::unordered_map<i128, u128, I128Hash> next;
    next.reserve(table.size() * 4);
    auto add = [&](i128 d, u128 c) {
      if (d < H && -d < H) next[d] += c;
    };
    if (st->arithmetic) {
      const i128 P = lattice(st->pitch);
      for (const auto& [tau, c] : table) {
        const i128 m0 = floor_div(-tau, P);
        for (i128 m = m0 - 1; m <= m0 + 2; ++m) {
          if (m <= -r || m >= r) continue;
          add(tau + m * P, c * static_cast<u128>(r - (m < 0 ? -m : m)));
        }
        if (next.size() > max_shifts) break;
      }
    } else {
      O.clear();
      for (const auto& o : st->offsets) O.push_back(lattice(o));
      for (const auto& [tau, c] : table) {
        std::size_t lo = 0;
        for (std::size_t j = 0; j < O.size(); ++j) {
          const i128 a = O[j] - tau - H;  // need a < O[j'] < b
          const i128 b = O[j] - tau + H;
          while (lo < O.size() && O[lo] <= a) ++lo;
          for (std::size_t jp = lo; jp < O.size() && O[jp] < b; ++jp) add(tau + O[jp] - O[j], c);
        }
        if (next.size() > max_shifts) break;
      }
    }
    guard(next.size(), max_shifts, n);
    table.swap(next);
    peak = std::max(peak, table.size());
  }
  Table out(ShiftLess{0.0});
  for (const auto& [tau, c] : table) {
    mpz_class num;
    const bool neg = tau < 0;
    num = from_u128(static_cast<u128>(neg ? -tau : tau));
    if (neg) num = -num;
    out.emplace(Scalar(mpq_class(num, D)), from_u128(c));
  }
  return out;
}
}  // namespace

CorrelationResult correlate(const Schedule& schedule, const StepFunction& f_in, const StepFunction& g_in,
                            const Scalar& t_in, const CorrelateOptions& options) {
  auto fg = common_stage(schedule, {f_in, g_in});
  const StepFunction& f = fg[0];
  const StepFunction& g = fg[1];
  const std::size_t k = f.stage();
  const Scalar t = schedule.coerce(t_in, "correlation time");

  auto bound_at = [&](std::size_t N) { return correlate_bound(schedule, f, g, t, N); };
  const std::size_t N = pick_stage(schedule, k, t.abs(), options, bound_at);

  CorrelationResult res;
  res.stage_used = N;
  Table table(ShiftLess{quantum_for(schedule, N)});
  table.emplace(t, mpz_class(1));
  res.shifts_used = 1;
  if (auto fast = lattice_push(schedule, t, k, N, options.max_shifts, res.shifts_used)) {
    table.swap(*fast);
  } else {
    for (std::size_t n = N; n-- > k;) {
      auto st = schedule.stage(n);
      Table next(ShiftLess{quantum_for(schedule, n)});
      for (const auto& [tau, count] : table) {
        const mpz_class& c = count;
        visit_overlaps(*st, tau, [&](const Scalar& d, std::size_t m) {
          auto [it, inserted] = next.try_emplace(d);
          mpz_addmul_ui(it->second.get_mpz_t(), c.get_mpz_t(), static_cast<unsigned long>(m));
        });
        guard(next.size(), options.max_shifts, n);
      }
      table.swap(next);
      res.shifts_used = std::max(res.shifts_used, table.size());
    }
  }

  const StepFunction gc = g.conj();
  const Scalar wN = schedule.width(N);
  Complex value = 0.0;
  double weight_total = 0.0;
  for (const auto& [tau, count] : table) {
    double w = (Scalar(count) * wN).to_double();
    value += w * shifted_product_integral({&gc, &f}, {0.0, tau.to_double()});
    weight_total += w;
  }
  res.value = value;
  res.error_bound = bound_at(N) + kRoundingAllowance * weight_total * f.sup_norm() * g.sup_norm() *
                                      schedule.height(k).to_double();
  return res;
}

CorrelationResult m_correlate(const Schedule& schedule, const std::vector<StepFunction>& fs_in,
                              const std::vector<Scalar>& times_in, const CorrelateOptions& options) {
  const std::size_t m = fs_in.size();
  if (m < 2) throw ConfigError("m_correlate needs at least two functions");
  if (times_in.size() != m) throw ConfigError("m_correlate needs one time per function");
  if (!times_in[0].is_zero()) throw ConfigError("m_correlate: the first time must be 0");
  auto fs = common_stage(schedule, fs_in);
  const std::size_t k = fs[0].stage();
  std::vector<Scalar> times;
  for (const auto& t : times_in) times.push_back(schedule.coerce(t, "correlation time"));

  Scalar t_max(0), t_min(0), spread(0);
  for (const auto& t : times) {
    t_max = max(t_max, t);
    t_min = min(t_min, t);
    spread = max(spread, t.abs());
  }
  double sup_rest = 1.0;
  double sup_all = fs[0].sup_norm();
  for (std::size_t i = 1; i < m; ++i) {
    sup_rest *= fs[i].sup_norm();
    sup_all *= fs[i].sup_norm();
  }
  auto bound_at = [&](std::size_t N) {
    if (spread.is_zero()) return 0.0;
    const double wN = schedule.width(N).to_double();
    double b = sup_all * spread.to_double() * wN * static_cast<double>(m);
    MassProfile m0(schedule, fs[0], N);
    double region = m0.below(t_max) + m0.above(schedule.height(N) + t_min);
    return std::min(b, sup_rest * wN * region) * (1.0 + kBoundSlack);
  };
  const std::size_t N = pick_stage(schedule, k, spread, options, bound_at);

  CorrelationResult res;
  res.stage_used = N;
  VecTable table(VecLess{ShiftLess{quantum_for(schedule, N)}});
  table.emplace(std::vector<Scalar>(times.begin() + 1, times.end()), mpz_class(1));
  res.shifts_used = 1;
  std::vector<std::vector<std::pair<std::size_t, Scalar>>> cand(m - 1);
  std::vector<std::size_t> pick(m - 1);
  for (std::size_t n = N; n-- > k;) {
    auto st = schedule.stage(n);
    const Scalar& h = st->height;
    const double hd = h.to_double();
    const auto& od = st->offsets_approx;
    const std::size_t r = st->r();
    VecTable next(VecLess{ShiftLess{quantum_for(schedule, n)}});
    for (const auto& [tau, count] : table) {
      for (std::size_t j0 = 0; j0 < r; ++j0) {
        bool empty = false;
        for (std::size_t i = 0; i + 1 < m && !empty; ++i) {
          cand[i].clear();
          const double td = tau[i].to_double();
          const double margin = 1e-9 * (std::fabs(td) + st->next_height.to_double()) + 1e-300;
          const double lo = od[j0] - td - hd - margin;
          const double hi = od[j0] - td + hd + margin;
          auto it = std::upper_bound(od.begin(), od.end(), lo);
          for (; it != od.end() && *it < hi; ++it) {
            std::size_t j = static_cast<std::size_t>(it - od.begin());
            Scalar d = j == j0 ? tau[i] : tau[i] + st->offsets[j] - st->offsets[j0];
            if (d < h && -d < h) cand[i].emplace_back(j, std::move(d));
          }
          empty = cand[i].empty();
        }
        if (empty) continue;
        // Cartesian product of the candidate lists.
        std::fill(pick.begin(), pick.end(), 0);
        while (true) {
          Scalar hi_s(0), lo_s(0);
          std::vector<Scalar> key;
          key.reserve(m - 1);
          for (std::size_t i = 0; i + 1 < m; ++i) {
            const Scalar& d = cand[i][pick[i]].second;
            key.push_back(d);
            hi_s = max(hi_s, d);
            lo_s = min(lo_s, d);
          }
          // the shifted copies [d_i, d_i + h) must share a point with [0, h)
          if (hi_s - lo_s < h) {
            auto [slot, inserted] = next.try_emplace(std::move(key));
            slot->second += count;
          }
          std::size_t i = 0;
          while (i + 1 < m && ++pick[i] == cand[i].size()) pick[i++] = 0;
          if (i + 1 == m) break;
        }
      }
      guard(next.size(), options.max_shifts, n);
    }
    table.swap(next);
    res.shifts_used = std::max(res.shifts_used, table.size());
  }

  std::vector<const StepFunction*> ptrs;
  for (const auto& f : fs) ptrs.push_back(&f);
  const Scalar wN = schedule.width(N);
  Complex value = 0.0;
  double weight_total = 0.0;
  std::vector<double> shifts(m, 0.0);
  for (const auto& [tau, count] : table) {
    for (std::size_t i = 1; i < m; ++i) shifts[i] = tau[i - 1].to_double();
    double w = (Scalar(count) * wN).to_double();
    value += w * shifted_product_integral(ptrs, shifts);
    weight_total += w;
  }
  res.value = value;
  res.error_bound =
      bound_at(N) + kRoundingAllowance * weight_total * sup_all * schedule.height(k).to_double();
  return res;
}

WeakLimitReport weak_limit_probe(const Schedule& schedule, const std::function<Scalar(std::size_t)>& times,
                                 const WeakLimitTarget& target, const std::vector<TestPair>& family, std::size_t J,
                                 double threshold, const CorrelateOptions& options) {
  if (family.empty()) throw ConfigError("weak_limit_probe needs at least one test pair");
  WeakLimitReport rep;
  rep.threshold = threshold;
  struct Base {
    Complex value;
    double bound;
  };
  std::vector<Base> bases;
  for (const auto& [f, g] : family) {
    Base b{target.alpha * inner_product(schedule, f.stage() >= g.stage() ? f : lift(schedule, f, g.stage()),
                                        g.stage() >= f.stage() ? g : lift(schedule, g, f.stage())),
           0.0};
    if (target.beta != Complex(0.0)) {
      auto c = correlate(schedule, f, g, target.shift, options);
      b.value += target.beta * c.value;
      b.bound += std::abs(target.beta) * c.error_bound;
    }
    bases.push_back(b);
  }
  for (std::size_t j = 1; j <= J; ++j) {
    WeakLimitTerm term;
    term.j = j;
    term.time = times(j);
    for (std::size_t p = 0; p < family.size(); ++p) {
      auto c = correlate(schedule, family[p].first, family[p].second, term.time, options);
      double r = std::abs(c.value - bases[p].value);
      if (p == 0 || r > term.residual) term.residual = r;
      term.bound = std::max(term.bound, c.error_bound + bases[p].bound);
      term.stage_used = std::max(term.stage_used, c.stage_used);
    }
    rep.terms.push_back(std::move(term));
  }
  rep.final_residual = rep.terms.empty() ? 0.0 : rep.terms.back().residual;
  rep.passed = rep.final_residual == 0.0 || rep.final_residual < threshold;
  return rep;
}

double product_error_bound(const std::vector<CorrelationResult>& factors) {
  double with = 1.0;
  double without = 1.0;
  for (const auto& c : factors) {
    with *= std::abs(c.value) + c.error_bound;
    without *= std::abs(c.value);
  }
  return std::max(0.0, with - without) * (1.0 + kBoundSlack);
}

CorrelationResult product_correlate(const std::vector<ProductFactor>& factors, const Scalar& t,
                                    const CorrelateOptions& options) {
  if (factors.empty()) throw ConfigError("product_correlate needs at least one factor");
  std::vector<CorrelationResult> parts;
  CorrelationResult res;
  res.value = 1.0;
  for (const auto& fac : factors) {
    if (!fac.schedule) throw ConfigError("product factor without a schedule");
    if (fac.scale.sign() <= 0) throw ConfigError("product factor scales must be positive");
    auto c = correlate(*fac.schedule, fac.f, fac.g, fac.scale * t, options);
    res.value *= c.value;
    res.stage_used = std::max(res.stage_used, c.stage_used);
    res.shifts_used = std::max(res.shifts_used, c.shifts_used);
    parts.push_back(c);
  }
  res.error_bound = product_error_bound(parts);
  return res;
}

CorrelationResult direct_sum_correlate(const Schedule& schedule, const std::vector<DirectSumComponent>& components,
                                       const Scalar& t, const CorrelateOptions& options) {
  CorrelationResult res;
  res.value = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (components[i].scale == components[j].scale) throw ConfigError("direct sum scales must be distinct");
    }
  }
  for (const auto& comp : components) {
    if (comp.scale.sign() <= 0) throw ConfigError("direct sum scales must be positive");
    if (!comp.f || !comp.g) continue;  // orthogonal blocks
    auto c = correlate(schedule, *comp.f, *comp.g, comp.scale * t, options);
    res.value += c.value;
    res.error_bound += c.error_bound;
    res.stage_used = std::max(res.stage_used, c.stage_used);
    res.shifts_used = std::max(res.shifts_used, c.shifts_used);
  }
  return res;
}

CorrelationResult component_correlate(const Schedule& schedule, const FockComponent& comp, const Scalar& t,
                                      const CorrelateOptions& options) {
  const std::size_t k = comp.shifts.size();
  if (k == 0 || comp.multiplicities.size() != k || comp.functions.size() != k) {
    throw ConfigError("Fock component needs matching shifts, multiplicities and functions");
  }
  for (std::size_t l = 0; l < k; ++l) {
    if (comp.multiplicities[l] < 1) throw ConfigError("Fock multiplicities must be >= 1");
    if (l > 0 && !(comp.shifts[l - 1] < comp.shifts[l])) throw ConfigError("Fock shifts must increase strictly");
  }
  CorrelationResult res;
  res.value = 1.0;
  std::vector<CorrelationResult> parts;
  for (std::size_t l = 0; l < k; ++l) {
    auto c = correlate(schedule, comp.functions[l], comp.functions[l], comp.shifts[l] * t, options);
    for (std::size_t p = 0; p < comp.multiplicities[l]; ++p) {
      res.value *= c.value;
      parts.push_back(c);
    }
    res.stage_used = std::max(res.stage_used, c.stage_used);
    res.shifts_used = std::max(res.shifts_used, c.shifts_used);
  }
  res.error_bound = product_error_bound(parts);
  return res;
}

}  // namespace rank1
