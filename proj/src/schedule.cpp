#include "rank1/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "rank1/errors.hpp"

namespace rank1 {

struct Schedule::Impl {
  Scalar h1;
  Scalar w1;
  Generator generator;
  Options options;
  mutable std::mutex mutex;
  mutable std::vector<std::shared_ptr<const TowerStage>> cache;
};

namespace {

Scalar coerce_to(ScalarMode mode, const Scalar& v, const std::string& what) {
  switch (mode) {
    case ScalarMode::Float:
      return v.is_float() ? v : v.to_float();
    case ScalarMode::Rational:
      if (v.is_float()) throw ModeError(what + ": float value " + v.str() + " in an exact schedule");
      if (v.has_sqrt2()) throw ModeError(what + ": value " + v.str() + " needs quadratic-sqrt2 mode");
      return v;
    case ScalarMode::Quadratic:
      if (v.is_float()) throw ModeError(what + ": float value " + v.str() + " in an exact schedule");
      return v;
  }
  return v;
}

std::shared_ptr<const TowerStage> build_stage(const Schedule::Impl& impl, std::size_t n, const Scalar& h,
                                              const Scalar& w) {
  auto st = std::make_shared<TowerStage>();
  st->n = n;
  st->height = h;
  st->width = w;
  st->params = impl.generator(n, h);
  const std::size_t r = st->params.r;
  const std::string where = "stage " + std::to_string(n);
  if (r < 2) throw ConfigError(where + ": cut number must be > 1");
  st->params.spacers.validate(r);
  if (st->params.time) st->params.time = coerce_to(impl.options.mode, *st->params.time, where + " time");

  ScalarMode mode = impl.options.mode;
  st->spacers.reserve(r);
  for (std::size_t j = 1; j <= r; ++j) {
    st->spacers.push_back(coerce_to(mode, st->params.spacers.at(j, r), where + " spacer " + std::to_string(j)));
  }
  st->bottom_spacer = coerce_to(mode, st->params.spacers.bottom(), where + " bottom spacer");
  if (mode == ScalarMode::Float) st->bottom_spacer = st->bottom_spacer.to_float();

  st->offsets.reserve(r);
  st->offsets_approx.reserve(r);
  Scalar o = st->bottom_spacer;
  Scalar total = st->bottom_spacer;
  for (std::size_t j = 0; j < r; ++j) {
    st->offsets.push_back(o);
    st->offsets_approx.push_back(o.to_double());
    o += h;
    o += st->spacers[j];
    total += st->spacers[j];
  }
  st->next_height = o;
  st->next_width = w / Scalar(static_cast<unsigned long>(r));
  st->tower_measure = h * w;
  st->spacer_total = total;
  st->spacer_mass_added = st->next_width * total;

  st->arithmetic = true;
  for (std::size_t j = 1; j + 1 < r; ++j) {
    if (!(st->spacers[j] == st->spacers[0])) {
      st->arithmetic = false;
      break;
    }
  }
  st->pitch = h + st->spacers[0];

  const std::size_t budget = impl.options.digit_budget;
  if (st->next_height.digits() > budget || st->next_width.digits() > budget) {
    throw ResourceError(where + ": exact arithmetic exceeded the digit budget of " + std::to_string(budget));
  }
  return st;
}

}  // namespace

Schedule::Schedule(Scalar h1, Scalar w1, Generator generator, Options options) : impl_(std::make_shared<Impl>()) {
  if (h1.sign() <= 0) throw ConfigError("base height must be > 0");
  if (w1.sign() <= 0) throw ConfigError("base width must be > 0");
  if (!generator) throw ConfigError("schedule needs a stage generator");
  impl_->h1 = coerce_to(options.mode, h1, "h1");
  impl_->w1 = coerce_to(options.mode, w1, "w1");
  impl_->generator = std::move(generator);
  impl_->options = std::move(options);
}

Schedule Schedule::from_stages(Scalar h1, Scalar w1, std::vector<StageParams> stages, ScalarMode mode) {
  if (stages.empty()) throw ConfigError("explicit schedule needs at least one stage");
  if (mode == ScalarMode::Rational) {
    bool quad = h1.has_sqrt2() || w1.has_sqrt2();
    for (const auto& p : stages) {
      p.spacers.validate(p.r);
      for (const auto& v : p.spacers.values(p.r)) quad = quad || v.has_sqrt2();
      quad = quad || p.spacers.bottom().has_sqrt2();
    }
    if (quad) mode = ScalarMode::Quadratic;
  }
  Options opts;
  opts.mode = mode;
  opts.stage_count = stages.size();
  auto shared = std::make_shared<const std::vector<StageParams>>(std::move(stages));
  return Schedule(std::move(h1), std::move(w1),
                  [shared](std::size_t n, const Scalar&) { return shared->at(n - 1); }, std::move(opts));
}

std::shared_ptr<const TowerStage> Schedule::stage(std::size_t n) const {
  if (n < 1) throw RangeError("stage index must be >= 1");
  if (impl_->options.stage_count && n > *impl_->options.stage_count) {
    throw RangeError("stage " + std::to_string(n) + " beyond the " + std::to_string(*impl_->options.stage_count) +
                     " stages of this schedule");
  }
  std::lock_guard<std::mutex> lock(impl_->mutex);
  auto& cache = impl_->cache;
  while (cache.size() < n) {
    std::size_t next = cache.size() + 1;
    Scalar h = cache.empty() ? impl_->h1 : cache.back()->next_height;
    Scalar w = cache.empty() ? impl_->w1 : cache.back()->next_width;
    cache.push_back(build_stage(*impl_, next, h, w));
  }
  return cache[n - 1];
}

Scalar Schedule::height(std::size_t n) const {
  if (n == 1) return impl_->h1;
  return stage(n - 1)->next_height;
}

Scalar Schedule::width(std::size_t n) const {
  if (n == 1) return impl_->w1;
  return stage(n - 1)->next_width;
}

Scalar Schedule::measure(std::size_t n) const { return height(n) * width(n); }

ScalarMode Schedule::mode() const { return impl_->options.mode; }
std::optional<std::size_t> Schedule::stage_count() const { return impl_->options.stage_count; }
const std::string& Schedule::descriptor() const { return impl_->options.descriptor; }
std::size_t Schedule::digit_budget() const { return impl_->options.digit_budget; }

Scalar Schedule::coerce(const Scalar& value, const std::string& what) const {
  return coerce_to(impl_->options.mode, value, what);
}

std::optional<std::size_t> Schedule::first_stage_with_height(const Scalar& bound, std::size_t from,
                                                             std::size_t limit) const {
  for (std::size_t n = std::max<std::size_t>(from, 1), seen = 0; seen < limit; ++n, ++seen) {
    if (impl_->options.stage_count && n > *impl_->options.stage_count + 1) return std::nullopt;
    if (height(n) >= bound) return n;
  }
  return std::nullopt;
}

StageParams Schedule::raw_params(std::size_t n, const Scalar& height) const { return impl_->generator(n, height); }

bool ShiftLess::operator()(const Scalar& x, const Scalar& y) const {
  if (quantum > 0 && (x.is_float() || y.is_float())) {
    return std::llround(x.to_double() / quantum) < std::llround(y.to_double() / quantum);
  }
  return Scalar::key_less(x, y);
}

void visit_overlaps(const TowerStage& stage, const Scalar& shift,
                    const std::function<void(const Scalar&, std::size_t)>& visit) {
  const Scalar& h = stage.height;
  const std::size_t r = stage.r();
  auto inside = [&](const Scalar& d) { return d < h && -d < h; };

  if (stage.arithmetic) {
    // delta = shift + m * pitch with m = j' - j, realized by r - |m| pairs.
    mpz_class m0 = (-shift / stage.pitch).floor();
    const long rl = static_cast<long>(r);
    for (long dm = -1; dm <= 2; ++dm) {
      mpz_class mz = m0 + dm;
      if (!mz.fits_slong_p()) continue;
      long m = mz.get_si();
      if (m <= -rl || m >= rl) continue;
      Scalar d = m == 0 ? shift : shift + Scalar(m) * stage.pitch;
      if (inside(d)) visit(d, static_cast<std::size_t>(rl - std::labs(m)));
    }
    return;
  }
  const double hd = h.to_double();
  const double td = shift.to_double();
  const double margin = 1e-9 * (std::fabs(td) + stage.next_height.to_double()) + 1e-300;
  const auto& od = stage.offsets_approx;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < r; ++j) {
    const double xlo = od[j] - td - hd - margin;
    const double xhi = od[j] - td + hd + margin;
    while (lo < r && od[lo] <= xlo) ++lo;
    for (std::size_t jp = lo; jp < r && od[jp] < xhi; ++jp) {
      if (jp == j) {
        if (inside(shift)) visit(shift, 1);
        continue;
      }
      Scalar d = shift + stage.offsets[jp];
      d -= stage.offsets[j];
      if (inside(d)) visit(d, 1);
    }
  }
}

std::vector<OverlapPair> overlap_pairs(const TowerStage& stage, const Scalar& shift, std::size_t guard) {
  const Scalar& h = stage.height;
  ShiftLess less{shift.is_float() || h.is_float() ? 1e-12 * h.to_double() : 0.0};
  std::map<Scalar, std::size_t, ShiftLess> groups(less);
  visit_overlaps(stage, shift, [&](const Scalar& d, std::size_t m) {
    groups[d] += m;
    if (groups.size() > guard) {
      throw ResourceError("overlap groups at stage " + std::to_string(stage.n) + " exceed the guard of " +
                          std::to_string(guard));
    }
  });
  std::vector<OverlapPair> out;
  out.reserve(groups.size());
  for (auto& [d, m] : groups) out.push_back({d, m});
  std::sort(out.begin(), out.end(), [](const OverlapPair& a, const OverlapPair& b) { return a.delta < b.delta; });
  return out;
}

std::string to_string(FinitenessVerdict::Kind kind) {
  switch (kind) {
    case FinitenessVerdict::Kind::FiniteSoFar:
      return "finite-so-far";
    case FinitenessVerdict::Kind::Diverged:
      return "diverged";
    case FinitenessVerdict::Kind::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

FinitenessVerdict finiteness_test(const Schedule& schedule, std::size_t horizon, const Scalar& budget) {
  if (horizon < 1) throw ConfigError("finiteness horizon must be >= 1");
  FinitenessVerdict v;
  v.partial_sum = schedule.mode() == ScalarMode::Float ? Scalar::floating(0.0) : Scalar(0);
  for (std::size_t n = 1; n <= horizon; ++n) {
    auto st = schedule.stage(n);
    v.partial_sum += st->spacer_total / (st->height * Scalar(static_cast<unsigned long>(st->r())));
    v.partial_sums.push_back(v.partial_sum);
  }
  if (schedule.mode() == ScalarMode::Float) {
    double p = v.partial_sum.to_double();
    double b = budget.to_double();
    if (std::fabs(p - b) <= Scalar::kFloatTolerance * std::max(std::fabs(p), std::fabs(b))) {
      v.kind = FinitenessVerdict::Kind::Inconclusive;
      return v;
    }
  }
  v.kind = v.partial_sum > budget ? FinitenessVerdict::Kind::Diverged : FinitenessVerdict::Kind::FiniteSoFar;
  return v;
}

}  // namespace rank1
