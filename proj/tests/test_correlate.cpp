#include <doctest.h>

#include <random>

#include "gen.hpp"
#include "oracle.hpp"
#include "rank1/errors.hpp"
#include "rank1/koopman.hpp"
#include "rank1/named.hpp"
#include "rank1/serialize.hpp"

using namespace rank1;

namespace {

std::vector<std::pair<std::string, Schedule>> small_schedules() {
  return {{"flat", flat_schedule({.r = 3, .spacer = Scalar::rational(1, 3)})},
          {"staircase34", staircase34_schedule({.r_cap = 16})},
          {"asym49", asym49_schedule({.r_cap = 16})},
          {"thm44", thm44_schedule({.scales = {Scalar(2)}, .r_cap = 16})},
          {"symmetrized", symmetrize(staircase34_schedule({.r_cap = 4}))}};
}

Scalar random_time(std::mt19937_64& rng, const Scalar& h, bool quadratic) {
  Scalar t = h * Scalar::rational(gen::pick(rng, -48, 48), 16);
  if (quadratic && gen::pick(rng, 0, 1) == 0) t += Scalar::sqrt2() * Scalar::rational(gen::pick(rng, -4, 4), 3);
  return t;
}

}  // namespace

TEST_CASE("sign convention: U(t) moves functions up") {
  auto s = flat_schedule({.r = 2});
  auto f = StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar::rational(1, 2));
  auto g = StepFunction::indicator(1, Scalar(1), Scalar::rational(1, 4), Scalar::rational(1, 2));
  // (U(1/4) f)(y) = f(y - 1/4) = 1 on [1/4, 3/4)
  auto c = correlate(s, f, g, Scalar::rational(1, 4));
  CHECK(std::abs(c.value - Complex(0.25)) <= c.error_bound + 1e-12);
  CHECK(c.error_bound < 0.01);
  auto d = correlate(s, f, g, Scalar::rational(-1, 4));
  CHECK(std::abs(d.value) <= d.error_bound + 1e-12);
}

TEST_CASE("time zero is the inner product") {
  std::mt19937_64 rng(1);
  for (auto& [name, s] : small_schedules()) {
    for (int i = 0; i < 10; ++i) {
      auto f = gen::step(rng, 2, s.height(2)), g = gen::step(rng, 2, s.height(2));
      auto c = correlate(s, f, g, Scalar(0));
      CHECK(c.error_bound <= 1e-12);
      CHECK(std::abs(c.value - inner_product(s, f, g)) <= 1e-12);
    }
  }
}

TEST_CASE("constants on the flat flow") {
  auto s = flat_schedule({.r = 2});
  auto one = StepFunction::constant(1, Scalar(1), 1.0);
  for (long k : {0L, 1L, 3L, -5L, 17L}) {
    // the stage-N value misses the edge strip of width |t|, inside the bound
    auto c = correlate(s, one, one, Scalar::rational(k, 3));
    CHECK(std::abs(c.value - Complex(1.0)) <= c.error_bound);
    auto deep = correlate(s, one, one, Scalar::rational(k, 3), {.stage = c.stage_used + 10});
    CHECK(std::abs(deep.value - Complex(1.0)) <= 1e-3 * c.error_bound + 1e-15);
  }
}

TEST_CASE("half-interval on the dyadic flow at t = 1/2") {
  auto s = flat_schedule({.r = 2});
  auto f = StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar::rational(1, 2));
  auto c = correlate(s, f, f, Scalar::rational(1, 2));
  CHECK(std::abs(c.value) <= 1e-15);
  CHECK(c.error_bound <= 0.5 * s.width(c.stage_used).to_double() * (1 + 1e-9));
  CHECK(std::abs(oracle::correlate(s, f, f, Scalar::rational(1, 2), 8)) <= 1e-15);
  for (std::size_t N = 2; N <= 8; ++N) {
    auto e = correlate(s, f, f, Scalar::rational(1, 2), {.stage = N});
    CHECK(std::abs(e.value) <= 1e-15);
  }
}

TEST_CASE("oracle equivalence") {
  std::mt19937_64 rng(12);
  for (auto& [name, s] : small_schedules()) {
    CAPTURE(name);
    const bool quad = s.mode() == ScalarMode::Quadratic;
    for (int i = 0; i < 30; ++i) {
      const std::size_t k = 1 + static_cast<std::size_t>(i % 2);
      auto f = gen::step(rng, k, s.height(k)), g = gen::step(rng, k, s.height(k));
      Scalar t = random_time(rng, s.height(k), quad);
      auto c = correlate(s, f, g, t);
      CAPTURE(t);
      CHECK(std::abs(c.value - oracle::correlate(s, f, g, t, c.stage_used)) <= 1e-9);
      CHECK(std::abs(c.value - oracle::correlate(s, f, g, t, c.stage_used + 1)) <= c.error_bound + 1e-9);
    }
  }
}

TEST_CASE("property: Cauchy-Schwarz, Hermitian symmetry and stage stability") {
  std::mt19937_64 rng(8);
  for (auto& [name, s] : small_schedules()) {
    CAPTURE(name);
    const bool quad = s.mode() == ScalarMode::Quadratic;
    for (int i = 0; i < 25; ++i) {
      auto f = gen::step(rng, 1, s.height(1)), g = gen::step(rng, 1, s.height(1));
      Scalar t = random_time(rng, s.height(1), quad);
      auto c = correlate(s, f, g, t);
      CHECK(std::abs(c.value) <= norm2(s, f) * norm2(s, g) + c.error_bound + 1e-12);
      auto h = correlate(s, g, f, -t);
      CHECK(std::abs(c.value - std::conj(h.value)) <= c.error_bound + h.error_bound + 1e-12);
      auto deep = correlate(s, f, g, t, {.stage = c.stage_used + 2});
      CHECK(std::abs(c.value - deep.value) <= c.error_bound + deep.error_bound + 1e-12);
      CHECK(deep.error_bound <= c.error_bound + 1e-15);
    }
  }
}

TEST_CASE("property: random schedules against the oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    auto s = gen::schedule(rng, 6, 4, trial % 2 == 1, trial % 3 == 0);
    auto f = gen::step(rng, 1, s.height(1)), g = gen::step(rng, 1, s.height(1));
    Scalar t = random_time(rng, s.height(1), trial % 2 == 1);
    auto c = correlate(s, f, g, t);
    CHECK(std::abs(c.value - oracle::correlate(s, f, g, t, c.stage_used)) <= 1e-9);
  }
}

TEST_CASE("lattice path agrees with the generic path") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto rational = gen::schedule(rng, 5, 6, false, trial % 2 == 0);
    // same stages, forced through Q(sqrt 2) arithmetic
    std::vector<StageParams> ps;
    for (std::size_t n = 1; n <= 5; ++n) ps.push_back(rational.stage(n)->params);
    auto quad = Schedule::from_stages(Scalar(1), Scalar(1), ps, ScalarMode::Quadratic);
    REQUIRE(quad.mode() == ScalarMode::Quadratic);
    auto f = gen::step(rng, 1, Scalar(1)), g = gen::step(rng, 1, Scalar(1));
    Scalar t = Scalar::rational(gen::pick(rng, -60, 60), 7);
    auto a = correlate(rational, f, g, t), b = correlate(quad, f, g, t);
    CHECK(a.stage_used == b.stage_used);
    CHECK(a.value == b.value);
    CHECK(a.error_bound == b.error_bound);
  }
}

TEST_CASE("float mode tracks exact mode") {
  auto exact = staircase34_schedule({.r_cap = 64, .stages = 6});
  auto fl = with_mode(exact, ScalarMode::Float);
  REQUIRE(fl.mode() == ScalarMode::Float);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    auto f = gen::step(rng, 1, Scalar(1)), g = gen::step(rng, 1, Scalar(1));
    Scalar t = Scalar::rational(gen::pick(rng, -30, 30), 8);
    auto a = correlate(exact, f, g, t);
    auto b = correlate(fl, f, g, t.to_float());
    CHECK(std::abs(a.value - b.value) <= 1e-9);
  }
}

TEST_CASE("correlate errors") {
  auto s = flat_schedule({.r = 2, .stages = 3});
  auto f = StepFunction::constant(1, Scalar(1), 1.0);
  CHECK_THROWS_AS(correlate(s, f, f, Scalar(1000)), RangeError);
  auto st = staircase34_schedule({});
  auto g = StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar::rational(1, 3));
  CHECK_THROWS_AS(correlate(st, g, g, Scalar::rational(7, 3), {.stage = 6, .max_shifts = 1}), ResourceError);
  auto wrong = StepFunction::constant(1, Scalar(2), 1.0);
  CHECK_THROWS_AS(correlate(s, wrong, wrong, Scalar(0)), ConfigError);
}

TEST_CASE("sqrt2 times need quadratic mode") {
  auto s = flat_schedule({.r = 2});
  auto f = StepFunction::constant(1, Scalar(1), 1.0);
  CHECK_THROWS_AS(correlate(s, f, f, Scalar::sqrt2()), ModeError);
}

TEST_CASE("functions at different stages") {
  auto s = staircase34_schedule({.r_cap = 16});
  std::mt19937_64 rng(2);
  auto f = gen::step(rng, 1, s.height(1));
  auto g = gen::step(rng, 2, s.height(2));
  auto c = correlate(s, f, g, Scalar::rational(3, 2));
  auto d = correlate(s, lift(s, f, 2), g, Scalar::rational(3, 2));
  CHECK(c.value == d.value);
}

TEST_CASE("m_correlate with two functions") {
  std::mt19937_64 rng(10);
  for (auto& [name, s] : small_schedules()) {
    const bool quad = s.mode() == ScalarMode::Quadratic;
    for (int i = 0; i < 10; ++i) {
      auto f0 = gen::step(rng, 1, s.height(1)), f1 = gen::step(rng, 1, s.height(1));
      Scalar t = random_time(rng, s.height(1), quad);
      auto c = correlate(s, f1, f0.conj(), t);
      auto m = m_correlate(s, {f0, f1}, {Scalar(0), t}, {.stage = c.stage_used});
      CHECK(std::abs(m.value - c.value) <= 1e-12 * (1 + std::abs(c.value)));
    }
  }
}

TEST_CASE("m_correlate against the oracle") {
  std::mt19937_64 rng(13);
  for (auto& [name, s] : small_schedules()) {
    CAPTURE(name);
    const bool quad = s.mode() == ScalarMode::Quadratic;
    for (int i = 0; i < 8; ++i) {
      std::vector<StepFunction> fs{gen::step(rng, 1, s.height(1)), gen::step(rng, 1, s.height(1)),
                                   gen::step(rng, 1, s.height(1))};
      std::vector<Scalar> ts{Scalar(0), random_time(rng, s.height(1), quad), random_time(rng, s.height(1), quad)};
      auto m = m_correlate(s, fs, ts);
      CHECK(std::abs(m.value - oracle::product(s, fs, ts, m.stage_used)) <= 1e-9);
      CHECK(std::abs(m.value - oracle::product(s, fs, ts, m.stage_used + 1)) <= m.error_bound + 1e-9);
    }
  }
  auto a = asym49_schedule({});
  auto A = StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar::rational(1, 2));
  auto z = m_correlate(a, {A, A, A}, {Scalar(0), Scalar(0), Scalar(0)});
  CHECK(std::abs(z.value - Complex(0.5)) <= 1e-12);
  CHECK_THROWS_AS(m_correlate(a, {A}, {Scalar(0)}), ConfigError);
  CHECK_THROWS_AS(m_correlate(a, {A, A}, {Scalar(1), Scalar(0)}), ConfigError);
}

TEST_CASE("CorrelationResult JSON") {
  CorrelationResult c{Complex(0.5, -0.25), 1e-3, 4, 9};
  Json j = to_json(c);
  CHECK(j["value"] == Json::parse("[0.5, -0.25]"));
  CHECK(j["error_bound"] == 1e-3);
  CHECK(j["stage_used"] == 4);
}
