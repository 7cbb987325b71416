#include "rank1/serialize.hpp"

#include <set>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

void allow_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown field '" + it.key() + "'");
  }
}

std::size_t size_field(const Json& j, const char* key, std::size_t def, const std::string& where) {
  if (!j.contains(key)) return def;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

Scalar scalar_field(const Json& j, const char* key, const Scalar& def, const std::string& where) {
  if (!j.contains(key)) return def;
  try {
    return scalar_from_json(j.at(key));
  } catch (const ConfigError& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::optional<std::size_t> stages_field(const Json& j, const std::string& where) {
  if (!j.contains("stages")) return std::nullopt;
  return size_field(j, "stages", 0, where);
}

Schedule named_from_json(const Json& named) {
  allow_keys(named, {"kind", "params"}, "named");
  if (!named.contains("kind") || !named.at("kind").is_string()) throw ConfigError("named.kind: expected a string");
  const std::string kind = named.at("kind").get<std::string>();
  const Json params = named.value("params", Json::object());
  const std::string where = "named.params";
  if (kind == "flat") {
    allow_keys(params, {"r", "r_growth", "r_cap", "spacer", "h1", "w1", "stages"}, where);
    FlatParams p;
    p.r = size_field(params, "r", p.r, where);
    p.r_growth = size_field(params, "r_growth", p.r_growth, where);
    p.r_cap = size_field(params, "r_cap", p.r_cap, where);
    p.spacer = scalar_field(params, "spacer", p.spacer, where);
    p.h1 = scalar_field(params, "h1", p.h1, where);
    p.w1 = scalar_field(params, "w1", p.w1, where);
    p.stages = stages_field(params, where);
    return flat_schedule(p);
  }
  if (kind == "staircase34") {
    allow_keys(params, {"r_base", "r_cap", "period", "h1", "w1", "stages"}, where);
    Staircase34Params p;
    p.r_base = size_field(params, "r_base", p.r_base, where);
    p.r_cap = size_field(params, "r_cap", p.r_cap, where);
    p.period = size_field(params, "period", p.period, where);
    p.h1 = scalar_field(params, "h1", p.h1, where);
    p.w1 = scalar_field(params, "w1", p.w1, where);
    p.stages = stages_field(params, where);
    return staircase34_schedule(p);
  }
  if (kind == "asym49") {
    allow_keys(params, {"r_start", "growth", "r_cap", "h1", "w1", "stages"}, where);
    Asym49Params p;
    p.r_start = size_field(params, "r_start", p.r_start, where);
    p.growth = size_field(params, "growth", p.growth, where);
    p.r_cap = size_field(params, "r_cap", p.r_cap, where);
    p.h1 = scalar_field(params, "h1", p.h1, where);
    p.w1 = scalar_field(params, "w1", p.w1, where);
    p.stages = stages_field(params, where);
    return asym49_schedule(p);
  }
  if (kind == "thm44") {
    allow_keys(params, {"scales", "q_max", "k_max", "r_cap", "growth", "horizon", "h1", "w1", "stages"}, where);
    Thm44Params p;
    if (!params.contains("scales") || !params.at("scales").is_array()) {
      throw ConfigError(where + ".scales: expected an array");
    }
    for (const auto& s : params.at("scales")) p.scales.push_back(scalar_from_json(s));
    if (params.contains("q_max")) {
      if (!params.at("q_max").is_number_integer()) throw ConfigError(where + ".q_max: expected an integer");
      p.q_max = params.at("q_max").get<long>();
    }
    p.k_max = size_field(params, "k_max", p.k_max, where);
    p.r_cap = size_field(params, "r_cap", p.r_cap, where);
    p.growth = scalar_field(params, "growth", p.growth, where);
    p.horizon = size_field(params, "horizon", p.horizon, where);
    p.h1 = scalar_field(params, "h1", p.h1, where);
    p.w1 = scalar_field(params, "w1", p.w1, where);
    p.stages = stages_field(params, where);
    return thm44_schedule(p);
  }
  throw ConfigError("named.kind: unknown schedule kind '" + kind + "'");
}

Json spacer_body(const SpacerMap& m) {
  struct V {
    Json operator()(const SpacerMap::ExplicitList& e) const {
      Json a = Json::array();
      for (const auto& v : e.values) a.push_back(to_json(v));
      return {{"variant", "explicit"}, {"values", a}};
    }
    Json operator()(const SpacerMap::Constant& c) const { return {{"variant", "constant"}, {"c", to_json(c.c)}}; }
    Json operator()(const SpacerMap::Staircase& s) const { return {{"variant", "staircase"}, {"u", to_json(s.u)}}; }
    Json operator()(const SpacerMap::FractionSplit& f) const {
      return {{"variant", "fraction_split"}, {"q", f.q}, {"s", to_json(f.s)}};
    }
    Json operator()(const SpacerMap::PairedGaps& p) const {
      Json g = Json::array(), a = Json::array();
      for (const auto& v : p.gaps) g.push_back(to_json(v));
      for (const auto& v : p.separators) a.push_back(to_json(v));
      return {{"variant", "paired_gaps"}, {"gaps", g}, {"separators", a}};
    }
    Json operator()(const SpacerMap::Symmetrized& s) const {
      return {{"variant", "symmetrized"}, {"inner", to_json(*s.inner)}, {"inner_r", s.inner_r}};
    }
  };
  return std::visit(V{}, m.variant());
}

}  // namespace

Json to_json(const Scalar& s) { return s.str(); }

Scalar scalar_from_json(const Json& j) {
  if (j.is_string()) return Scalar::parse(j.get<std::string>());
  if (j.is_number_integer()) return Scalar(static_cast<long>(j.get<long long>()));
  throw ConfigError("expected a scalar string such as \"3/2\" or \"1+2*sqrt2\"");
}

Json to_json(const SpacerMap& m) {
  Json j = spacer_body(m);
  if (m.explicit_bottom()) j["bottom"] = to_json(*m.explicit_bottom());
  return j;
}

SpacerMap spacer_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("variant") || !j.at("variant").is_string()) {
    throw ConfigError("spacer: expected an object with a 'variant' string");
  }
  const std::string v = j.at("variant").get<std::string>();
  std::optional<Scalar> bottom;
  if (j.contains("bottom")) bottom = scalar_from_json(j.at("bottom"));
  auto list = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(std::string("spacer.") + key + ": expected an array");
    std::vector<Scalar> out;
    for (const auto& x : j.at(key)) out.push_back(scalar_from_json(x));
    return out;
  };
  if (v == "explicit") {
    allow_keys(j, {"variant", "values", "bottom"}, "spacer");
    return SpacerMap(SpacerMap::ExplicitList{list("values")}, bottom);
  }
  if (v == "constant") {
    allow_keys(j, {"variant", "c", "bottom"}, "spacer");
    return SpacerMap(SpacerMap::Constant{scalar_field(j, "c", Scalar(0), "spacer")}, bottom);
  }
  if (v == "staircase") {
    allow_keys(j, {"variant", "u", "bottom"}, "spacer");
    return SpacerMap(SpacerMap::Staircase{scalar_field(j, "u", Scalar(0), "spacer")}, bottom);
  }
  if (v == "fraction_split") {
    allow_keys(j, {"variant", "q", "s", "bottom"}, "spacer");
    if (!j.contains("q") || !j.at("q").is_number_integer()) throw ConfigError("spacer.q: expected an integer");
    return SpacerMap(SpacerMap::FractionSplit{j.at("q").get<long>(), scalar_field(j, "s", Scalar(0), "spacer")}, bottom);
  }
  if (v == "paired_gaps") {
    allow_keys(j, {"variant", "gaps", "separators", "bottom"}, "spacer");
    return SpacerMap(SpacerMap::PairedGaps{list("gaps"), list("separators")}, bottom);
  }
  if (v == "symmetrized") {
    allow_keys(j, {"variant", "inner", "inner_r"}, "spacer");
    if (!j.contains("inner")) throw ConfigError("spacer.inner: missing");
    return SpacerMap::symmetrized(spacer_from_json(j.at("inner")), size_field(j, "inner_r", 0, "spacer"));
  }
  throw ConfigError("spacer.variant: unknown variant '" + v + "'");
}

Json to_json(const Schedule& s) {
  if (!s.descriptor().empty()) return Json::parse(s.descriptor());
  if (!s.stage_count()) throw ConfigError("an unbounded schedule without a descriptor cannot be serialized");
  Json stages = Json::array();
  for (std::size_t n = 1; n <= *s.stage_count(); ++n) {
    auto st = s.stage(n);
    Json e{{"r", st->r()}, {"spacer", to_json(st->params.spacers)}};
    if (!st->params.label.empty()) e["label"] = st->params.label;
    if (st->params.time) e["time"] = to_json(*st->params.time);
    stages.push_back(e);
  }
  return {{"mode", to_string(s.mode())}, {"h1", to_json(s.height(1))}, {"w1", to_json(s.width(1))}, {"stages", stages}};
}

Schedule with_mode(const Schedule& s, ScalarMode mode) {
  if (mode == s.mode()) return s;
  Schedule::Options opts;
  opts.mode = mode;
  opts.stage_count = s.stage_count();
  opts.digit_budget = s.digit_budget();
  if (!s.descriptor().empty()) {
    Json d = Json::parse(s.descriptor());
    d["mode"] = to_string(mode);
    opts.descriptor = d.dump();
  }
  Schedule src = s;
  return Schedule(s.height(1), s.width(1), [src](std::size_t n, const Scalar& h) { return src.raw_params(n, h); },
                  std::move(opts));
}

Schedule schedule_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("schedule: expected an object");
  std::optional<ScalarMode> mode;
  if (j.contains("mode")) {
    if (!j.at("mode").is_string()) throw ConfigError("schedule.mode: expected a string");
    mode = parse_scalar_mode(j.at("mode").get<std::string>());
  }
  auto apply_mode = [&](Schedule s) {
    if (!mode || *mode == s.mode()) return s;
    if (*mode == ScalarMode::Rational && s.mode() == ScalarMode::Quadratic) {
      throw ModeError("schedule.mode: exact-rational requested but the construction needs sqrt(2)");
    }
    return with_mode(s, *mode);
  };
  if (j.contains("named")) {
    allow_keys(j, {"mode", "named"}, "schedule");
    return apply_mode(named_from_json(j.at("named")));
  }
  if (j.contains("symmetrized")) {
    allow_keys(j, {"mode", "symmetrized"}, "schedule");
    return apply_mode(symmetrize(schedule_from_json(j.at("symmetrized"))));
  }
  allow_keys(j, {"mode", "h1", "w1", "stages", "digit_budget"}, "schedule");
  if (!j.contains("stages") || !j.at("stages").is_array() || j.at("stages").empty()) {
    throw ConfigError("schedule.stages: expected a non-empty array (or 'named' / 'symmetrized')");
  }
  std::vector<StageParams> stages;
  std::size_t idx = 0;
  for (const auto& e : j.at("stages")) {
    ++idx;
    const std::string where = "schedule.stages[" + std::to_string(idx - 1) + "]";
    allow_keys(e, {"r", "spacer", "label", "time"}, where);
    StageParams p;
    p.r = size_field(e, "r", 0, where);
    if (p.r < 2) throw ConfigError(where + ".r: must be > 1");
    p.spacers = e.contains("spacer") ? spacer_from_json(e.at("spacer")) : SpacerMap::zero();
    p.label = e.value("label", std::string());
    if (e.contains("time")) p.time = scalar_from_json(e.at("time"));
    p.occurrence = idx;
    stages.push_back(std::move(p));
  }
  Scalar h1 = scalar_field(j, "h1", Scalar(1), "schedule");
  Scalar w1 = scalar_field(j, "w1", Scalar(1), "schedule");
  ScalarMode m = mode.value_or(ScalarMode::Rational);
  bool quad = h1.has_sqrt2() || w1.has_sqrt2();
  for (const auto& p : stages) {
    p.spacers.validate(p.r);
    for (const auto& v : p.spacers.values(p.r)) quad = quad || v.has_sqrt2();
    quad = quad || p.spacers.bottom().has_sqrt2() || (p.time && p.time->has_sqrt2());
  }
  if (quad && m == ScalarMode::Rational) {
    if (mode) throw ModeError("schedule.mode: exact-rational requested but a spacer involves sqrt(2)");
    m = ScalarMode::Quadratic;
  }
  Schedule::Options opts;
  opts.mode = m;
  opts.stage_count = stages.size();
  opts.digit_budget = size_field(j, "digit_budget", opts.digit_budget, "schedule");
  Json desc = j;
  desc["mode"] = to_string(m);
  opts.descriptor = desc.dump();
  auto shared = std::make_shared<const std::vector<StageParams>>(std::move(stages));
  return Schedule(h1, w1, [shared](std::size_t n, const Scalar&) { return shared->at(n - 1); }, std::move(opts));
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError("expected a complex number [re, im]");
}

Json to_json(const StepFunction& f) {
  Json bp = Json::array(), vals = Json::array();
  for (const auto& b : f.breakpoints()) bp.push_back(to_json(b));
  for (const auto& v : f.values()) vals.push_back(complex_json(v));
  return {{"stage", f.stage()}, {"breakpoints", bp}, {"values", vals}};
}

StepFunction step_function_from_json(const Json& j) {
  allow_keys(j, {"stage", "breakpoints", "values"}, "step_function");
  if (!j.contains("breakpoints") || !j.contains("values")) {
    throw ConfigError("step_function: needs 'breakpoints' and 'values'");
  }
  std::vector<Scalar> bp;
  for (const auto& b : j.at("breakpoints")) bp.push_back(scalar_from_json(b));
  std::vector<Complex> vals;
  for (const auto& v : j.at("values")) vals.push_back(complex_from_json(v));
  return StepFunction(size_field(j, "stage", 1, "step_function"), std::move(bp), std::move(vals));
}

Json to_json(const CorrelationResult& c) {
  return {{"value", complex_json(c.value)}, {"error_bound", c.error_bound}, {"stage_used", c.stage_used}};
}

Json to_json(const SpectralEstimate& e) {
  Json lam = Json::array(), dens = Json::array();
  for (std::size_t i = 0; i < e.size(); ++i) {
    lam.push_back(e.lambda(i));
    dens.push_back(e.density[i]);
  }
  return {{"lambda", lam},
          {"density", dens},
          {"mass", e.mass},
          {"clipped", e.clipped},
          {"window", {{"taper", e.taper}, {"width", e.taper_width}}}};
}

}  // namespace rank1
