#include "rank1/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "rank1/errors.hpp"
#include "rank1/tensor.hpp"

namespace rank1 {

namespace {

namespace fs = std::filesystem;

// Field access with diagnostics naming the offending path. Every key read
// is recorded so that unread (misspelled) keys can be reported afterwards.
class Params {
 public:
  struct Usage {
    std::set<std::string> opened;    // objects whose fields were read one by one
    std::set<std::string> consumed;  // values taken whole
  };

  Params(const Json& j, std::string path, std::shared_ptr<Usage> usage = std::make_shared<Usage>())
      : j_(j), path_(std::move(path)), usage_(std::move(usage)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    usage_->opened.insert(path_);
  }

  bool has(const char* key) const {
    use(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const Json& raw(const char* key) const {
    if (!has(key)) throw ConfigError(where(key) + ": missing");
    return j_.at(key);
  }
  std::string where(const char* key) const { return path_ + "." + key; }
  Params sub(const char* key) const { return Params(has(key) ? j_.at(key) : empty(), where(key), usage_); }

  // Throws for the first key below this object that nothing has read.
  void reject_unread() const { walk(j_, path_); }

  std::size_t size(const char* key, std::optional<std::size_t> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": missing");
    }
    const Json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where(key) + ": expected a non-negative integer");
    return v.get<std::size_t>();
  }
  double number(const char* key, std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": missing");
    }
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }
  double positive(const char* key, std::optional<double> def = std::nullopt) const {
    double v = number(key, def);
    if (!(v > 0)) throw ConfigError(where(key) + ": must be positive");
    return v;
  }
  Scalar scalar(const char* key, std::optional<Scalar> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": missing");
    }
    try {
      return scalar_from_json(j_.at(key));
    } catch (const Error& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }
  std::vector<Scalar> scalars(const char* key) const {
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    std::vector<Scalar> out;
    for (const auto& x : v) {
      try {
        out.push_back(scalar_from_json(x));
      } catch (const Error& e) {
        throw ConfigError(where(key) + ": " + e.what());
      }
    }
    return out;
  }
  bool flag(const char* key, bool def) const {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const char* key, std::optional<std::string> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": missing");
    }
    if (!j_.at(key).is_string()) throw ConfigError(where(key) + ": expected a string");
    return j_.at(key).get<std::string>();
  }
  Complex complex(const char* key, Complex def) const {
    if (!has(key)) return def;
    try {
      return complex_from_json(j_.at(key));
    } catch (const Error& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

 private:
  void use(const char* key) const { usage_->consumed.insert(where(key)); }

  void walk(const Json& j, const std::string& path) const {
    if (!usage_->opened.count(path)) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string child = path + "." + it.key();
      if (!usage_->consumed.count(child)) throw ConfigError(child + ": unknown field");
      if (it->is_object()) walk(*it, child);
    }
  }

  static const Json& empty() {
    static const Json e = Json::object();
    return e;
  }
  const Json& j_;
  std::string path_;
  std::shared_ptr<Usage> usage_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json result_json(const CorrelationResult& c) { return to_json(c); }

CorrelateOptions correlate_options(const Params& p) {
  CorrelateOptions o;
  Params q = p.sub("correlate");
  o.margin = q.positive("margin", o.margin);
  o.bound_tolerance = q.number("bound_tolerance", o.bound_tolerance);
  o.max_shifts = q.size("max_shifts", o.max_shifts);
  o.scan_limit = q.size("scan_limit", o.scan_limit);
  if (q.has("stage")) o.stage = q.size("stage");
  return o;
}

// Seeded test functions at a declared stage.
struct FamilySpec {
  std::size_t stage = 1;
  std::size_t count = 1;
  std::string kind = "random";  // random | level-set | explicit
  RandomStepOptions random;
  std::size_t grid = 8;
  std::vector<StepFunction> items;
};

FamilySpec family_spec(const Schedule& s, const Params& p) {
  FamilySpec f;
  f.kind = p.string("kind", "random");
  if (f.kind == "explicit") {
    const Json& items = p.raw("items");
    if (!items.is_array() || items.empty()) throw ConfigError(p.where("items") + ": expected a non-empty array");
    for (const auto& it : items) f.items.push_back(step_function_from_json(it));
    f.stage = f.items.front().stage();
    f.count = f.items.size();
    for (const auto& it : f.items) {
      if (it.height() != s.height(it.stage())) {
        throw ConfigError(p.where("items") + ": function height does not match h_" + std::to_string(it.stage()));
      }
    }
    return f;
  }
  f.stage = p.size("stage", 1);
  if (f.stage < 1) throw ConfigError(p.where("stage") + ": must be >= 1");
  f.count = p.size("count", 1);
  if (f.count < 1) throw ConfigError(p.where("count") + ": must be >= 1");
  if (f.kind == "random") {
    f.random.grid = p.size("grid", f.random.grid);
    f.random.max_pieces = p.size("max_pieces", f.random.max_pieces);
    f.random.complex_values = p.flag("complex", false);
    f.random.mean_zero = p.flag("mean_zero", false);
  } else if (f.kind == "level-set") {
    f.grid = p.size("grid", 8);
  } else {
    throw ConfigError(p.where("kind") + ": expected random, level-set or explicit");
  }
  return f;
}

std::vector<StepFunction> make_family(const Schedule& s, const FamilySpec& spec, std::mt19937_64& rng) {
  if (spec.kind == "explicit") return spec.items;
  std::vector<StepFunction> out;
  const Scalar h = s.height(spec.stage);
  for (std::size_t i = 0; i < spec.count; ++i) {
    if (spec.kind == "random") {
      out.push_back(random_step_function(rng, spec.stage, h, spec.random));
    } else {
      out.push_back(random_level_set(rng, spec.stage, h, spec.grid));
    }
  }
  return out;
}

Json functions_json(const std::vector<StepFunction>& fs) {
  Json a = Json::array();
  for (const auto& f : fs) a.push_back(to_json(f));
  return a;
}

Scalar round_half_up(const Scalar& x) { return Scalar((x + Scalar::rational(1, 2)).floor()); }

// Stages n >= from carrying `label`, at most `count` of them.
std::vector<std::size_t> labelled_stages(const Schedule& s, const std::string& label, std::size_t from,
                                         std::size_t count, std::size_t max_stage) {
  std::vector<std::size_t> out;
  for (std::size_t n = std::max<std::size_t>(from, 1); n <= max_stage && out.size() < count; ++n) {
    if (s.stage_count() && n > *s.stage_count()) break;
    if (label.empty() || s.stage(n)->params.label == label) out.push_back(n);
  }
  if (out.size() < count) {
    throw RangeError("only " + std::to_string(out.size()) + " stage(s) labelled '" + label + "' between " +
                     std::to_string(from) + " and " + std::to_string(max_stage));
  }
  return out;
}

// A weak-limit time sequence; `scales` > 1 means a sup over a family of
// sequences j -> t_j(c).
struct TimeSequence {
  std::vector<std::size_t> stages;            // stage n_j (0 when not stage-based)
  std::vector<std::vector<Scalar>> times;     // [scale][j]
  std::vector<Scalar> scales;
  Json describe = Json::object();
};

TimeSequence time_sequence(const Schedule& s, const Params& p, std::size_t from) {
  TimeSequence ts;
  const std::string kind = p.string("kind");
  ts.describe["kind"] = kind;
  if (kind == "zero") {
    std::size_t J = p.size("J", 1);
    ts.scales = {Scalar(0)};
    ts.times.assign(1, std::vector<Scalar>(J, Scalar(0)));
    ts.stages.assign(J, 0);
    return ts;
  }
  if (kind == "explicit") {
    auto v = p.scalars("values");
    if (v.empty()) throw ConfigError(p.where("values") + ": empty");
    ts.scales = {Scalar(1)};
    ts.times = {v};
    ts.stages.assign(v.size(), 0);
    return ts;
  }
  const std::size_t J = p.size("J");
  if (J == 0) throw ConfigError(p.where("J") + ": must be >= 1");
  const std::string label = p.string("label");
  const std::size_t min_stage = p.size("min_stage", from);
  const std::size_t max_stage = p.size("max_stage", 64);
  ts.stages = labelled_stages(s, label, min_stage, J, max_stage);
  if (kind == "label") {
    Scalar factor = p.scalar("factor", Scalar(1));
    ts.scales = {factor};
    std::vector<Scalar> t;
    for (auto n : ts.stages) {
      auto st = s.stage(n);
      if (!st->params.time) throw ConfigError(p.where("label") + ": stage " + std::to_string(n) + " has no time");
      t.push_back(*st->params.time * factor);
    }
    ts.times = {t};
    return ts;
  }
  if (kind == "height") {
    if (p.has("scale")) {
      ts.scales = {p.scalar("scale")};
    } else {
      Params g = p.sub("scale_grid");
      Scalar a = g.scalar("from"), b = g.scalar("to");
      std::size_t m = g.size("points");
      if (m < 1) throw ConfigError(g.where("points") + ": must be >= 1");
      for (std::size_t i = 0; i < m; ++i) {
        ts.scales.push_back(m == 1 ? a : a + (b - a) * Scalar(static_cast<unsigned long>(i)) / Scalar(static_cast<unsigned long>(m - 1)));
      }
    }
    const bool align = p.flag("align_previous", false);
    for (const auto& c : ts.scales) {
      std::vector<Scalar> t;
      for (auto n : ts.stages) {
        if (align) {
          if (n < 2) throw ConfigError(p.where("align_previous") + ": needs stages >= 2");
          auto prev = s.stage(n - 1);
          Scalar m = round_half_up(c.abs() * Scalar(static_cast<unsigned long>(prev->r())));
          t.push_back((c.sign() < 0 ? -m : m) * prev->height);
        } else {
          t.push_back(c * s.height(n));
        }
      }
      ts.times.push_back(std::move(t));
    }
    return ts;
  }
  throw ConfigError(p.where("kind") + ": expected zero, explicit, label or height");
}

struct Outcome {
  Json results = Json::object();
  bool passed = true;
  std::optional<PlotData> plot;
};

// ---------------------------------------------------------------- experiments

Outcome stage_audit(const Schedule& s, const Params& p) {
  const std::size_t depth = p.size("depth", 12);
  Outcome out;
  Json items = Json::array();
  PlotData plot{"n: stage; r: cut number; height, width, measure: tower X_n (decimal approximations)",
                {"n", "r", "height", "width", "measure"},
                {}};
  bool ok = true;
  for (std::size_t n = 1; n <= depth; ++n) {
    if (s.stage_count() && n > *s.stage_count()) break;
    auto st = s.stage(n);
    std::vector<std::string> failures;
    if (st->offset(1) != st->bottom_spacer) failures.push_back("o_1 != b");
    for (std::size_t j = 1; j < st->r(); ++j) {
      if (st->offset(j + 1) != st->offset(j) + st->height + st->spacers[j - 1]) {
        failures.push_back("o_" + std::to_string(j + 1));
        break;
      }
    }
    Scalar sum(0);
    for (const auto& v : st->spacers) sum += v;
    const Scalar r(static_cast<unsigned long>(st->r()));
    if (st->next_height != st->bottom_spacer + r * st->height + sum) failures.push_back("h_{n+1}");
    if (st->next_height != st->offset(st->r()) + st->height + st->spacers.back()) failures.push_back("top");
    if (st->next_width * r != st->width) failures.push_back("w_{n+1}");
    if (st->tower_measure != st->height * st->width) failures.push_back("mu(X_n)");
    if (s.measure(n + 1) != st->tower_measure + st->spacer_mass_added) failures.push_back("mu(X_{n+1})");
    for (const auto& v : st->spacers) {
      if (v.sign() < 0) failures.push_back("negative spacer");
    }
    ok = ok && failures.empty();
    Json item{{"n", n},
              {"r", st->r()},
              {"label", st->params.label},
              {"height", to_json(st->height)},
              {"width", to_json(st->width)},
              {"measure", to_json(st->tower_measure)},
              {"next_height", to_json(st->next_height)},
              {"next_measure", to_json(s.measure(n + 1))},
              {"spacer_total", to_json(st->spacer_total)},
              {"invariants", failures.empty() ? Json("ok") : Json(failures)}};
    if (st->r() <= 16) {
      Json offs = Json::array();
      for (const auto& o : st->offsets) offs.push_back(to_json(o));
      item["offsets"] = offs;
    }
    if (st->params.time) item["time"] = to_json(*st->params.time);
    items.push_back(item);
    plot.rows.push_back({std::to_string(n), std::to_string(st->r()), fmt(st->height.to_double()),
                         fmt(st->width.to_double()), fmt(st->tower_measure.to_double())});
  }
  out.results["stages"] = items;
  Params fin = p.sub("finiteness");
  const std::size_t horizon = fin.size("horizon", std::min<std::size_t>(depth, s.stage_count().value_or(depth)));
  auto verdict = finiteness_test(s, horizon, fin.scalar("budget", Scalar(1000000)));
  Json partial = Json::array();
  for (const auto& v : verdict.partial_sums) partial.push_back(fmt(v.to_double()));
  out.results["finiteness"] = {{"verdict", to_string(verdict.kind)},
                               {"horizon", horizon},
                               {"partial_sum", to_json(verdict.partial_sum)},
                               {"partial_sums", partial}};
  out.passed = ok;
  out.plot = std::move(plot);
  return out;
}

Outcome correlate_experiment(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  const auto opts = correlate_options(p);
  Outcome out;
  std::vector<std::tuple<StepFunction, StepFunction, Scalar>> queries;
  if (p.has("f")) {
    StepFunction f = step_function_from_json(p.raw("f"));
    StepFunction g = p.has("g") ? step_function_from_json(p.raw("g")) : f;
    for (const auto& t : p.scalars("times")) queries.emplace_back(f, g, t);
  } else {
    Params r = p.sub("random");
    FamilySpec fam = family_spec(s, r);
    const Scalar t_max = r.scalar("t_max", s.height(fam.stage));
    const std::size_t grid = r.size("time_grid", 64);
    if (grid == 0) throw ConfigError(r.where("time_grid") + ": must be >= 1");
    for (std::size_t i = 0; i < fam.count; ++i) {
      FamilySpec one = fam;
      one.count = 2;
      auto fg = make_family(s, one, rng);
      // t uniform on the grid {k t_max / grid : |k| <= grid}.
      long k = static_cast<long>(uniform_index(rng, 2 * grid + 1)) - static_cast<long>(grid);
      queries.emplace_back(fg[0], fg[1], t_max * Scalar(k) / Scalar(static_cast<unsigned long>(grid)));
    }
  }
  const bool has_expect = p.has("expect");
  const Complex expect = p.complex("expect", 0.0);
  const double tol = p.number("tolerance", 0.0);
  Json items = Json::array();
  PlotData plot{"index: query; t: time; re, im: <U(t) f, g>; bound: rigorous error bound",
                {"index", "t", "re", "im", "bound"},
                {}};
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& [f, g, t] = queries[i];
    auto c = correlate(s, f, g, t, opts);
    Json item = result_json(c);
    item["index"] = i;
    item["t"] = to_json(t);
    if (!p.has("f")) {
      item["f"] = to_json(f);
      item["g"] = to_json(g);
    }
    if (has_expect) {
      bool ok = std::abs(c.value - expect) <= c.error_bound + tol;
      item["within_expectation"] = ok;
      out.passed = out.passed && ok;
    }
    items.push_back(item);
    plot.rows.push_back({std::to_string(i), fmt(t.to_double()), fmt(c.value.real()), fmt(c.value.imag()),
                         fmt(c.error_bound)});
  }
  out.results["items"] = items;
  out.plot = std::move(plot);
  return out;
}

WeakLimitTarget target_from(const Params& p) {
  WeakLimitTarget t;
  t.alpha = p.complex("alpha", 1.0);
  t.beta = p.complex("beta", 0.0);
  t.shift = p.scalar("shift", Scalar(0));
  return t;
}

Outcome weak_limit_experiment(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  const auto opts = correlate_options(p);
  FamilySpec fam = family_spec(s, p.sub("functions"));
  auto fs = make_family(s, fam, rng);
  const bool diagonal = p.sub("functions").flag("diagonal", true);
  std::vector<StepFunction> gs = diagonal ? fs : make_family(s, fam, rng);
  const bool normalize = p.flag("normalize", false);
  std::vector<TestPair> family;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    StepFunction f = fs[i], g = gs[i];
    if (normalize) {
      double nf = norm2(s, f), ng = norm2(s, g);
      if (!(nf > 0) || !(ng > 0)) throw DegenerateInputError("weak-limit: a test function has zero norm");
      f = f.scaled(1.0 / nf);
      g = g.scaled(1.0 / ng);
    }
    family.emplace_back(f, g);
  }
  const WeakLimitTarget target = target_from(p.sub("target"));
  const double threshold = p.positive("threshold", 0.05);
  TimeSequence ts = time_sequence(s, p.sub("times"), fam.stage);
  const std::size_t J = ts.times.front().size();

  std::vector<WeakLimitTerm> terms(J);
  std::vector<std::size_t> worst_scale(J, 0);
  for (std::size_t c = 0; c < ts.scales.size(); ++c) {
    const auto& times = ts.times[c];
    auto rep = weak_limit_probe(s, [&](std::size_t j) { return times[j - 1]; }, target, family, J, threshold, opts);
    for (std::size_t j = 0; j < J; ++j) {
      const auto& t = rep.terms[j];
      if (c == 0 || t.residual + t.bound > terms[j].residual + terms[j].bound) {
        terms[j] = t;
        worst_scale[j] = c;
      }
    }
  }
  Outcome out;
  Json items = Json::array();
  PlotData plot{"j: term; t_j: probe time (worst scale); residual: max over test pairs and scales; bound: error bound",
                {"j", "t_j", "residual", "bound"},
                {}};
  for (std::size_t j = 0; j < J; ++j) {
    const auto& t = terms[j];
    Json item{{"j", j + 1},
              {"time", to_json(t.time)},
              {"residual", t.residual},
              {"bound", t.bound},
              {"stage_used", t.stage_used}};
    if (ts.stages[j]) item["stage"] = ts.stages[j];
    if (ts.scales.size() > 1) item["scale"] = to_json(ts.scales[worst_scale[j]]);
    items.push_back(item);
    plot.rows.push_back({std::to_string(j + 1), fmt(t.time.to_double()), fmt(t.residual), fmt(t.bound)});
  }
  const auto& last = terms.back();
  out.passed = last.residual + last.bound < threshold || (last.residual == 0.0 && last.bound == 0.0);
  out.results = {{"terms", items},
                 {"final_residual", last.residual},
                 {"final_bound", last.bound},
                 {"threshold", threshold},
                 {"normalized", normalize},
                 {"functions", functions_json(fs)}};
  if (!diagonal) out.results["partners"] = functions_json(gs);
  out.plot = std::move(plot);
  return out;
}

Outcome triple_asymmetry(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  const auto opts = correlate_options(p);
  const std::string label = p.string("label", "asym");
  const std::size_t i_max = p.size("i_max", 4);
  if (i_max == 0) throw ConfigError(p.where("i_max") + ": must be >= 1");
  auto ls = labelled_stages(s, label, 1, i_max, p.size("max_stage", 64));
  std::vector<Scalar> n_i;
  for (auto l : ls) n_i.push_back(s.height(l) + Scalar(1));

  Params fw = p.sub("forward");
  FamilySpec fwd;
  fwd.kind = "level-set";
  fwd.stage = fw.size("stage", 1);
  fwd.count = fw.size("count", 5);
  fwd.grid = fw.size("grid", 8);
  const double fwd_thr = fw.positive("threshold", 0.19);
  auto sets = make_family(s, fwd, rng);

  auto triple = [&](const StepFunction& A, const Scalar& n, int sign) {
    Scalar a = sign > 0 ? n : -n;
    return m_correlate(s, {A, A, A}, {Scalar(0), a, Scalar(3) * a}, opts);
  };
  auto measure = [&](const StepFunction& A) { return A.integral().real() * s.width(A.stage()).to_double(); };

  Outcome out;
  Json forward = Json::array();
  PlotData plot{"i: index of the asymmetric stage l_i; n_i = h_{l_i} + 1; forward_min: min over tested sets of "
                "mu(A & T_n A & T_3n A) / mu(A); backward_witness: mu(A' & T_-n A' & T_-3n A') / mu(A')",
                {"i", "n_i", "forward_min", "forward_bound", "backward_witness", "backward_bound"},
                {}};
  std::vector<double> fmin(ls.size(), 1e300), fbound(ls.size(), 0.0);
  bool fwd_ok = true;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    const double mu = measure(sets[a]);
    if (!(mu > 0)) throw DegenerateInputError("triple-asymmetry: empty level set");
    Json seq = Json::array();
    for (std::size_t i = 0; i < ls.size(); ++i) {
      auto c = triple(sets[a], n_i[i], +1);
      double ratio = c.value.real() / mu, b = c.error_bound / mu;
      seq.push_back({{"i", i + 1}, {"n", to_json(n_i[i])}, {"ratio", ratio}, {"bound", b}, {"stage_used", c.stage_used}});
      if (ratio < fmin[i]) {
        fmin[i] = ratio;
        fbound[i] = b;
      }
      if (i + 1 == ls.size()) fwd_ok = fwd_ok && ratio - b >= fwd_thr;
    }
    forward.push_back({{"set", to_json(sets[a])}, {"measure", mu}, {"sequence", seq}});
  }

  Params bw = p.sub("backward");
  const std::size_t bstage = bw.size("stage", 2);
  const std::size_t trials = bw.size("trials", 200);
  const mpz_class hfloor = s.height(bstage).floor();
  const std::size_t bgrid = bw.size("grid", std::max<std::size_t>(1, hfloor.fits_ulong_p() ? hfloor.get_ui() : 1));
  const double bwd_thr = bw.positive("threshold", 0.1);
  const Scalar n_last = n_i.back();
  std::optional<StepFunction> best;
  double best_ratio = 1e300, best_bound = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    StepFunction A = random_level_set(rng, bstage, s.height(bstage), bgrid);
    const double mu = measure(A);
    auto c = triple(A, n_last, -1);
    double ratio = c.value.real() / mu;
    if (ratio + c.error_bound / mu < best_ratio + best_bound) {
      best_ratio = ratio;
      best_bound = c.error_bound / mu;
      best = A;
    }
  }
  if (!best) throw ConfigError(bw.where("trials") + ": must be >= 1");
  Json witness_seq = Json::array();
  const double wmu = measure(*best);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    auto b = triple(*best, n_i[i], -1);
    auto f = triple(*best, n_i[i], +1);
    witness_seq.push_back({{"i", i + 1},
                           {"backward_ratio", b.value.real() / wmu},
                           {"backward_bound", b.error_bound / wmu},
                           {"forward_ratio", f.value.real() / wmu}});
    plot.rows.push_back({std::to_string(i + 1), fmt(n_i[i].to_double()), fmt(fmin[i]), fmt(fbound[i]),
                         fmt(b.value.real() / wmu), fmt(b.error_bound / wmu)});
  }
  const bool bwd_ok = best_ratio + best_bound <= bwd_thr;
  out.passed = fwd_ok && bwd_ok;
  out.results = {{"stages", ls},
                 {"forward", forward},
                 {"forward_liminf_estimate", fmin.back()},
                 {"forward_threshold", fwd_thr},
                 {"forward_passed", fwd_ok},
                 {"backward_witness",
                  {{"set", to_json(*best)},
                   {"measure", wmu},
                   {"ratio", best_ratio},
                   {"bound", best_bound},
                   {"trials", trials},
                   {"sequence", witness_seq}}},
                 {"backward_threshold", bwd_thr},
                 {"backward_passed", bwd_ok}};
  out.plot = std::move(plot);
  return out;
}

Outcome fock_claims(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  const auto opts = correlate_options(p);
  const auto tuple = p.scalars("tuple");
  const std::size_t k = tuple.size();
  if (k == 0) throw ConfigError(p.where("tuple") + ": empty");
  const std::size_t l0 = p.size("l0", 1);
  if (l0 < 1 || l0 > k) throw ConfigError(p.where("l0") + ": must be in 1..k");
  std::vector<std::size_t> mult(k, 1);
  if (p.has("multiplicities")) {
    const Json& m = p.raw("multiplicities");
    if (!m.is_array() || m.size() != k) throw ConfigError(p.where("multiplicities") + ": expected k integers");
    for (std::size_t i = 0; i < k; ++i) mult[i] = m[i].get<std::size_t>();
  }
  Thm44Class cls{Thm44Class::Kind::M, Scalar(0), 0, tuple, l0};
  FamilySpec fam = family_spec(s, p.sub("functions"));
  FamilySpec one = fam;
  one.count = k;
  auto fs = make_family(s, one, rng);
  const std::size_t J = p.size("J", 1);
  auto stages = labelled_stages(s, cls.label(), std::max<std::size_t>(fam.stage, 1), J, p.size("max_stage", 64));
  const Scalar b = p.scalar("b", Scalar(3));
  for (const auto& x : tuple) {
    if (x == b) throw ConfigError(p.where("b") + ": must not belong to the tuple");
  }
  const double factor_thr = p.positive("factor_threshold", 0.1);
  const double decay_thr = p.positive("decay_threshold", 0.05);

  const double inv2k = 1.0 / static_cast<double>(2 * k);
  std::vector<double> sq(k);
  std::vector<CorrelationResult> at_s(k);
  for (std::size_t l = 0; l < k; ++l) {
    sq[l] = std::pow(norm2(s, fs[l]), 2);
    if (!(sq[l] > 0)) throw DegenerateInputError("fock-claims: zero test function");
    at_s[l] = correlate(s, fs[l], fs[l], tuple[l], opts);
  }
  Outcome out;
  Json items = Json::array();
  PlotData plot{"j: occurrence of the M class; t_j: stage time; factor_residual: max_l |<U(t_j s_l) f_l, f_l> - "
                "predicted| / |f_l|^2; component and predicted: product coefficient; decay: max_l "
                "|<U(t_j b) f_l, f_l>| / |f_l|^2",
                {"j", "t_j", "factor_residual", "factor_bound", "component", "predicted", "decay", "decay_bound"},
                {}};
  double last_factor = 0, last_factor_b = 0, last_decay = 0, last_decay_b = 0;
  for (std::size_t j = 0; j < stages.size(); ++j) {
    auto st = s.stage(stages[j]);
    const Scalar t = *st->params.time;
    double fres = 0, fb = 0, dec = 0, db = 0;
    Complex predicted = 1.0;
    Json factors = Json::array();
    for (std::size_t l = 0; l < k; ++l) {
      auto c = correlate(s, fs[l], fs[l], tuple[l] * t, opts);
      Complex pred = inv2k * (l + 1 == l0 ? at_s[l].value : Complex(sq[l]));
      double pb = l + 1 == l0 ? inv2k * at_s[l].error_bound : 0.0;
      double r = std::abs(c.value - pred) / sq[l];
      double rb = (c.error_bound + pb) / sq[l];
      if (r + rb > fres + fb) {
        fres = r;
        fb = rb;
      }
      auto d = correlate(s, fs[l], fs[l], b * tuple[l] * t, opts);
      if (std::abs(d.value) / sq[l] + d.error_bound / sq[l] > dec + db) {
        dec = std::abs(d.value) / sq[l];
        db = d.error_bound / sq[l];
      }
      for (std::size_t m = 0; m < mult[l]; ++m) predicted *= pred;
      factors.push_back({{"value", complex_json(c.value)}, {"bound", c.error_bound}, {"predicted", complex_json(pred)}});
    }
    FockComponent comp{tuple, mult, fs};
    auto cc = component_correlate(s, comp, t, opts);
    items.push_back({{"j", j + 1},
                     {"stage", stages[j]},
                     {"time", to_json(t)},
                     {"factors", factors},
                     {"factor_residual", fres},
                     {"factor_bound", fb},
                     {"component", result_json(cc)},
                     {"predicted", complex_json(predicted)},
                     {"decay", dec},
                     {"decay_bound", db}});
    plot.rows.push_back({std::to_string(j + 1), fmt(t.to_double()), fmt(fres), fmt(fb), fmt(std::abs(cc.value)),
                         fmt(std::abs(predicted)), fmt(dec), fmt(db)});
    last_factor = fres;
    last_factor_b = fb;
    last_decay = dec;
    last_decay_b = db;
  }
  out.passed = last_factor + last_factor_b < factor_thr && last_decay + last_decay_b < decay_thr;
  out.results = {{"class", cls.label()},
                 {"b", to_json(b)},
                 {"terms", items},
                 {"functions", functions_json(fs)},
                 {"final_factor_residual", last_factor},
                 {"final_factor_bound", last_factor_b},
                 {"final_decay", last_decay},
                 {"final_decay_bound", last_decay_b},
                 {"factor_threshold", factor_thr},
                 {"decay_threshold", decay_thr}};
  out.plot = std::move(plot);
  return out;
}

struct SpectrumRun {
  SpectralEstimate estimate;
  std::vector<double> c0;
  Json functions = Json::array();
};

SpectrumRun spectrum_of(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  const auto opts = correlate_options(p);
  FamilySpec fam = family_spec(s, p.sub("functions"));
  auto fs = make_family(s, fam, rng);
  const Scalar dt = p.scalar("dt");
  const Scalar t_max = p.scalar("t_max");
  const double Lambda = p.positive("lambda_max");
  const std::size_t grid = p.size("grid", 513);
  const double width = p.positive("taper_width", t_max.to_double() / 4);
  const std::size_t threads = p.size("threads", 0);
  SpectrumRun run;
  std::vector<SpectralEstimate> parts;
  for (const auto& f : fs) {
    auto curve = autocorr_curve(s, f, dt, t_max, opts, threads);
    run.c0.push_back(curve.values[curve.half()].real());
    parts.push_back(bochner_density(curve, Lambda, grid, width));
    run.functions.push_back(to_json(f));
  }
  run.estimate = parts.size() == 1 ? parts[0] : aggregate(parts);
  return run;
}

double estimate_mass(const SpectralEstimate& e) {
  double m = 0;
  for (double d : e.density) m += d * e.step;
  return m;
}

Outcome spectrum_experiment(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  auto run = spectrum_of(s, p, rng);
  const auto& e = run.estimate;
  const double expected = e.mass;
  const double mass = estimate_mass(e);
  bool nonneg = true;
  for (double d : e.density) nonneg = nonneg && d >= 0;
  Outcome out;
  out.passed = nonneg && std::abs(mass - expected) <= 1e-9 * std::max(1.0, expected);
  out.results = {{"estimate", to_json(e)},
                 {"mass", mass},
                 {"expected_mass", expected},
                 {"c0", run.c0},
                 {"functions", run.functions}};
  PlotData plot{"lambda: frequency; density: estimated spectral density", {"lambda", "density"}, {}};
  for (std::size_t i = 0; i < e.size(); ++i) plot.rows.push_back({fmt(e.lambda(i)), fmt(e.density[i])});
  out.plot = std::move(plot);
  return out;
}

Outcome disjointness(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  auto run = spectrum_of(s, p, rng);
  const auto& e = run.estimate;
  auto dil = p.has("dilations") ? p.scalars("dilations") : std::vector<Scalar>{Scalar(2)};
  const bool has_thr = p.has("threshold");
  const double thr = has_thr ? p.positive("threshold") : 0.0;
  Outcome out;
  const double self = affinity(e, e);
  Json items = Json::array();
  PlotData plot{"t: dilation factor; affinity: Hellinger affinity of sigma and sigma_t", {"t", "affinity"}, {}};
  bool ok = std::abs(self - 1.0) <= 1e-12;
  for (const auto& t : dil) {
    if (t.sign() <= 0) throw ConfigError(p.where("dilations") + ": factors must be positive");
    double a = affinity(e, dilate(e, t.to_double()));
    items.push_back({{"t", to_json(t)}, {"affinity", a}});
    plot.rows.push_back({fmt(t.to_double()), fmt(a)});
    if (has_thr) ok = ok && a < thr;
  }
  out.passed = ok;
  out.results = {{"self_affinity", self}, {"dilations", items}, {"functions", run.functions}};
  if (has_thr) out.results["threshold"] = thr;
  out.plot = std::move(plot);
  return out;
}

// <U(t) f, g> = <U(-t) Rf, Rg> for order 2; for order 3 the triple
// correlation with times (0, t1, t2) against (0, -t1, -t2).
Outcome reflection_check(const Schedule& s, const Params& p, std::mt19937_64& rng) {
  const auto opts = correlate_options(p);
  FamilySpec fam = family_spec(s, p.sub("functions"));
  const std::size_t count = p.size("count", 50);
  const std::size_t order = p.size("order", 2);
  if (order != 2 && order != 3) throw ConfigError(p.where("order") + ": expected 2 or 3");
  const Scalar t_max = p.scalar("t_max", s.height(fam.stage));
  const std::size_t grid = p.size("time_grid", 64);
  if (grid == 0) throw ConfigError(p.where("time_grid") + ": must be >= 1");
  const std::string expect = p.string("expect", "holds");
  if (expect != "holds" && expect != "fails") throw ConfigError(p.where("expect") + ": expected holds or fails");
  const double factor = p.positive("factor", 10.0);
  Outcome out;
  Json items = Json::array();
  PlotData plot{order == 2 ? "index: case; t: time; residual: |<U(t)f,g> - <U(-t)Rf,Rg>|; bound: summed error bounds"
                           : "index: case; t1, t2: times; residual: |C(f; 0,t1,t2) - C(Rf; 0,-t1,-t2)| for the triple "
                             "correlation C; bound: summed error bounds",
                order == 2 ? std::vector<std::string>{"index", "t", "residual", "bound"}
                           : std::vector<std::string>{"index", "t1", "t2", "residual", "bound"},
                {}};
  bool all_hold = true, some_fail = false;
  std::size_t worst = 0;
  double worst_ratio = -1.0;
  FamilySpec many = fam;
  many.count = order;
  auto draw_time = [&] {
    long kk = static_cast<long>(uniform_index(rng, 2 * grid + 1)) - static_cast<long>(grid);
    return t_max * Scalar(kk) / Scalar(static_cast<unsigned long>(grid));
  };
  for (std::size_t i = 0; i < count; ++i) {
    auto fs = make_family(s, many, rng);
    std::vector<StepFunction> rs;
    for (const auto& f : fs) rs.push_back(reflect(f));
    CorrelationResult a, b;
    Json item{{"index", i}};
    std::vector<std::string> row{std::to_string(i)};
    if (order == 2) {
      Scalar t = draw_time();
      a = correlate(s, fs[0], fs[1], t, opts);
      b = correlate(s, rs[0], rs[1], -t, opts);
      item["t"] = to_json(t);
      row.push_back(fmt(t.to_double()));
    } else {
      Scalar t1 = draw_time(), t2 = draw_time();
      a = m_correlate(s, fs, {Scalar(0), t1, t2}, opts);
      b = m_correlate(s, rs, {Scalar(0), -t1, -t2}, opts);
      item["times"] = Json::array({to_json(t1), to_json(t2)});
      row.push_back(fmt(t1.to_double()));
      row.push_back(fmt(t2.to_double()));
    }
    double res = std::abs(a.value - b.value), bound = a.error_bound + b.error_bound;
    bool holds = res <= bound;
    bool fails = res > factor * bound;
    all_hold = all_hold && holds;
    some_fail = some_fail || fails;
    double ratio = bound > 0 ? res / bound : (res > 0 ? 1e300 : 0.0);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = i;
    }
    item["forward"] = result_json(a);
    item["reflected"] = result_json(b);
    item["residual"] = res;
    item["bound"] = bound;
    items.push_back(item);
    row.push_back(fmt(res));
    row.push_back(fmt(bound));
    plot.rows.push_back(row);
  }
  out.passed = expect == "holds" ? all_hold : some_fail;
  out.results = {{"order", order},       {"cases", items},         {"expect", expect},
                 {"all_hold", all_hold}, {"some_fail", some_fail}, {"worst_case", worst}};
  out.plot = std::move(plot);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + ": invalid JSON: " + e.what());
  }
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"stage-audit",  "correlate",      "weak-limit",   "triple-asymmetry",
                                              "fock-claims",  "spectrum",       "disjointness", "reflection-check"};
  return kinds;
}

ExperimentSpec ExperimentSpec::from_json(const Json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("spec: expected a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::set<std::string> ok{"experiment", "schedule", "schedule_file", "params", "seed", "output"};
    if (!ok.count(it.key())) throw ConfigError("spec: unknown field '" + it.key() + "'");
  }
  ExperimentSpec spec;
  spec.source = doc;
  if (!doc.contains("experiment") || !doc.at("experiment").is_string()) {
    throw ConfigError("spec.experiment: expected one of the experiment kinds");
  }
  spec.kind = doc.at("experiment").get<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), spec.kind) == kinds.end()) {
    throw ConfigError("spec.experiment: unknown kind '" + spec.kind + "'");
  }
  if (doc.contains("schedule") == doc.contains("schedule_file")) {
    throw ConfigError("spec: give exactly one of 'schedule' and 'schedule_file'");
  }
  if (doc.contains("schedule")) {
    spec.schedule = doc.at("schedule");
  } else {
    if (!doc.at("schedule_file").is_string()) throw ConfigError("spec.schedule_file: expected a path");
    fs::path file = doc.at("schedule_file").get<std::string>();
    if (file.is_relative()) file = fs::path(base_dir) / file;
    if (!fs::exists(file)) throw ConfigError("spec.schedule_file: '" + file.string() + "' does not exist");
    spec.schedule = parse_json(read_file(file.string()), "spec.schedule_file");
  }
  if (doc.contains("params")) {
    if (!doc.at("params").is_object()) throw ConfigError("spec.params: expected an object");
    spec.params = doc.at("params");
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !(doc.at("seed").is_number_integer() && doc.at("seed").get<long long>() >= 0)) {
      throw ConfigError("spec.seed: expected a non-negative integer");
    }
    spec.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    Params o(doc.at("output"), "spec.output");
    spec.report_path = o.string("report", spec.report_path);
    if (o.has("plot")) spec.plot_path = o.string("plot");
    o.reject_unread();
  }
  // Thresholds must be positive wherever they appear.
  std::function<void(const Json&, const std::string&)> check = [&](const Json& j, const std::string& path) {
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key.find("threshold") != std::string::npos) {
        if (!it->is_number() || !(it->get<double>() > 0)) throw ConfigError(path + "." + key + ": must be positive");
      }
      check(*it, path + "." + key);
    }
  };
  check(spec.params, "spec.params");
  return spec;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
  Json doc = parse_json(read_file(path), path);
  return from_json(doc, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

Report run(const ExperimentSpec& spec, bool timing) {
  const auto start = std::chrono::steady_clock::now();
  Schedule schedule = schedule_from_json(spec.schedule);
  std::mt19937_64 rng(spec.seed);
  Params p(spec.params, "spec.params");
  Outcome out;
  if (spec.kind == "stage-audit") {
    out = stage_audit(schedule, p);
  } else if (spec.kind == "correlate") {
    out = correlate_experiment(schedule, p, rng);
  } else if (spec.kind == "weak-limit") {
    out = weak_limit_experiment(schedule, p, rng);
  } else if (spec.kind == "triple-asymmetry") {
    out = triple_asymmetry(schedule, p, rng);
  } else if (spec.kind == "fock-claims") {
    out = fock_claims(schedule, p, rng);
  } else if (spec.kind == "spectrum") {
    out = spectrum_experiment(schedule, p, rng);
  } else if (spec.kind == "disjointness") {
    out = disjointness(schedule, p, rng);
  } else if (spec.kind == "reflection-check") {
    out = reflection_check(schedule, p, rng);
  } else {
    throw ConfigError("spec.experiment: unknown kind '" + spec.kind + "'");
  }
  p.reject_unread();
  Report rep;
  rep.passed = out.passed;
  rep.plot = std::move(out.plot);
  rep.doc = {{"schema", kReportSchema},
             {"version", kVersion},
             {"experiment", spec.kind},
             {"spec", spec.source},
             {"schedule", to_json(schedule)},
             {"seed", spec.seed},
             {"results", out.results},
             {"passed", out.passed}};
  if (timing) {
    rep.doc["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rep;
}

std::string plot_csv(const PlotData& data) {
  std::string out;
  std::istringstream lines(data.comment);
  for (std::string line; std::getline(lines, line);) out += "# " + line + "\n";
  for (std::size_t i = 0; i < data.columns.size(); ++i) out += (i ? "," : "") + data.columns[i];
  out += "\n";
  for (const auto& row : data.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += "\n";
  }
  return out;
}

void export_plotdata(const PlotData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << plot_csv(data);
  if (!out) throw Error("cannot write '" + path + "'");
}

int run_to_files(const ExperimentSpec& spec, const std::string& out_dir, bool timing, std::string* message) {
  try {
    Report rep = run(spec, timing);
    auto place = [&](const std::string& p) {
      fs::path path = p;
      if (path.is_relative()) path = fs::path(out_dir.empty() ? "." : out_dir) / path;
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      return path.string();
    };
    const std::string report = place(spec.report_path);
    std::ofstream out(report, std::ios::binary);
    if (!out) throw Error("cannot write '" + report + "'");
    out << rep.doc.dump(2) << "\n";
    if (!out) throw Error("cannot write '" + report + "'");
    if (spec.plot_path && rep.plot) export_plotdata(*rep.plot, place(*spec.plot_path));
    if (message) *message = std::string(rep.passed ? "pass" : "fail") + ": " + report;
    return rep.passed ? 0 : 1;
  } catch (const std::exception& e) {
    if (message) *message = std::string("error: ") + e.what();
    return 2;
  }
}

}  // namespace rank1
