#include <doctest.h>

#include <random>

#include "gen.hpp"
#include "rank1/errors.hpp"
#include "rank1/koopman.hpp"
#include "rank1/named.hpp"

using namespace rank1;

TEST_CASE("weak limit: identity at time zero") {
  auto s = staircase34_schedule({.r_cap = 64});
  std::mt19937_64 rng(1);
  std::vector<TestPair> fam;
  for (int i = 0; i < 3; ++i) fam.emplace_back(gen::step(rng, 1, Scalar(1)), gen::step(rng, 1, Scalar(1)));
  auto rep = weak_limit_probe(s, [](std::size_t) { return Scalar(0); }, WeakLimitTarget::identity(), fam, 4, 0.01);
  REQUIRE(rep.terms.size() == 4);
  for (const auto& t : rep.terms) CHECK(t.residual <= 1e-12);
  CHECK(rep.passed);
}

TEST_CASE("weak limit: constant spacers and t_j = -(h_j + c)") {
  const Scalar c = Scalar::rational(1, 2);
  auto s = flat_schedule({.r = 2, .r_growth = 2, .r_cap = 64, .spacer = c});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 6; ++i) {
    auto f = gen::step(rng, 1, Scalar(1)), g = gen::step(rng, 1, Scalar(1));
    const double nf = norm2(s, f), ng = norm2(s, g);
    for (std::size_t j = 1; j <= 6; ++j) {
      Scalar t = -(s.height(j) + c);
      auto r = correlate(s, f, g, t);
      double residual = std::abs(r.value - inner_product(s, f, g));
      double r_j = static_cast<double>(s.stage(j)->r());
      CAPTURE(j);
      CHECK(residual <= 2.0 / r_j * nf * ng + r.error_bound + 1e-12);
    }
  }
}

TEST_CASE("weak limit: a scaled identity target is detected as missed") {
  auto s = flat_schedule({.r = 2});
  std::vector<TestPair> fam{{StepFunction::constant(1, Scalar(1), 1.0), StepFunction::constant(1, Scalar(1), 1.0)}};
  auto rep = weak_limit_probe(s, [](std::size_t j) { return Scalar(static_cast<long>(j)); },
                              WeakLimitTarget::scaled_identity(0.5), fam, 3, 0.1);
  CHECK(rep.final_residual + rep.terms.back().bound >= 0.5);
  CHECK(rep.final_residual > 0.1);
  CHECK_FALSE(rep.passed);
  auto z = weak_limit_probe(s, [](std::size_t) { return Scalar(1); }, WeakLimitTarget::combination(0.0, 1.0, Scalar(1)),
                            fam, 2, 0.1);
  CHECK(z.final_residual <= 1e-12);
  CHECK_THROWS_AS(weak_limit_probe(s, [](std::size_t) { return Scalar(0); }, WeakLimitTarget::zero(), {}, 1, 0.1),
                  ConfigError);
}

TEST_CASE("product correlations factor") {
  auto s = flat_schedule({.r = 3, .spacer = Scalar::rational(1, 4)});
  auto t2 = staircase34_schedule({.r_cap = 16});
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    auto f = gen::step(rng, 1, Scalar(1)), g = gen::step(rng, 1, Scalar(1));
    auto f2 = gen::step(rng, 1, Scalar(1)), g2 = gen::step(rng, 1, Scalar(1));
    Scalar t = Scalar::rational(gen::pick(rng, -20, 20), 6);
    auto one = product_correlate({{&s, Scalar(1), f, g}}, t);
    auto direct = correlate(s, f, g, t);
    CHECK(one.value == direct.value);
    auto two = product_correlate({{&s, Scalar(1), f, g}, {&t2, Scalar(2), f2, g2}}, t);
    auto a = correlate(s, f, g, t), b = correlate(t2, f2, g2, Scalar(2) * t);
    CHECK(two.value == a.value * b.value);
    // first-order product rule, rigorous
    CHECK(two.error_bound >= std::abs(a.value) * b.error_bound + std::abs(b.value) * a.error_bound -
                                 1e-15);
    CHECK(two.error_bound <= (std::abs(a.value) + a.error_bound) * (std::abs(b.value) + b.error_bound) -
                                 std::abs(a.value) * std::abs(b.value) + 1e-12);
  }
  auto u = StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar::rational(1, 2));
  auto v = StepFunction::indicator(1, Scalar(1), Scalar::rational(1, 2), Scalar(1));
  auto any = StepFunction::constant(1, Scalar(1), 1.0);
  auto zero = product_correlate({{&s, Scalar(1), u, v}, {&s, Scalar(3), any, any}}, Scalar(0));
  CHECK(zero.value == Complex(0));
  CHECK_THROWS_AS(product_correlate({}, Scalar(0)), ConfigError);
}

TEST_CASE("direct sums") {
  auto s = flat_schedule({.r = 2, .spacer = Scalar::rational(1, 3)});
  std::mt19937_64 rng(3);
  auto f1 = gen::step(rng, 1, Scalar(1)), g1 = gen::step(rng, 1, Scalar(1));
  auto f2 = gen::step(rng, 1, Scalar(1)), g2 = gen::step(rng, 1, Scalar(1));
  auto single = direct_sum_correlate(s, {{Scalar(2), f1, g1}}, Scalar::rational(3, 4));
  CHECK(single.value == correlate(s, f1, g1, Scalar::rational(3, 2)).value);

  auto cross = direct_sum_correlate(s, {{Scalar(1), f1, std::nullopt}, {Scalar(2), std::nullopt, g2}}, Scalar(1));
  CHECK(cross.value == Complex(0));

  auto both = direct_sum_correlate(s, {{Scalar(1), f1, g1}, {Scalar(2), f2, g2}}, Scalar(1));
  auto a = correlate(s, f1, g1, Scalar(1)), b = correlate(s, f2, g2, Scalar(2));
  CHECK(both.value == a.value + b.value);
  CHECK(both.error_bound == a.error_bound + b.error_bound);
  CHECK_THROWS_AS(direct_sum_correlate(s, {{Scalar(1), f1, g1}, {Scalar(1), f2, g2}}, Scalar(1)), ConfigError);
}

TEST_CASE("Fock components") {
  auto s = staircase34_schedule({.r_cap = 16});
  std::mt19937_64 rng(4);
  auto f1 = gen::step(rng, 1, Scalar(1)), f2 = gen::step(rng, 1, Scalar(1));
  auto one = component_correlate(s, {{Scalar(2)}, {1}, {f1}}, Scalar::rational(5, 4));
  CHECK(one.value == correlate(s, f1, f1, Scalar::rational(5, 2)).value);

  auto at0 = component_correlate(s, {{Scalar(1), Scalar(3)}, {2, 1}, {f1, f2}}, Scalar(0));
  const double n1 = norm2(s, f1), n2 = norm2(s, f2);
  CHECK(std::abs(at0.value - Complex(std::pow(n1, 4) * n2 * n2)) <= 1e-12);

  auto c = component_correlate(s, {{Scalar(1), Scalar(2)}, {2, 1}, {f1, f2}}, Scalar::rational(1, 3));
  auto a = correlate(s, f1, f1, Scalar::rational(1, 3)), b = correlate(s, f2, f2, Scalar::rational(2, 3));
  CHECK(std::abs(c.value - a.value * a.value * b.value) <= 1e-15);
  CHECK_THROWS_AS(component_correlate(s, {{Scalar(2), Scalar(1)}, {1, 1}, {f1, f2}}, Scalar(1)), ConfigError);
  CHECK_THROWS_AS(component_correlate(s, {{Scalar(1)}, {0}, {f1}}, Scalar(1)), ConfigError);
}

TEST_CASE("reflection identity on symmetrized schedules") {
  std::mt19937_64 rng(7);
  std::vector<Schedule> sym{symmetrize(flat_schedule({.r = 2, .spacer = Scalar::rational(1, 2)})),
                            symmetrize(staircase34_schedule({.r_cap = 16}))};
  for (const auto& s : sym) {
    for (int i = 0; i < 20; ++i) {
      const std::size_t k = 1 + static_cast<std::size_t>(i % 2);
      auto f = gen::step(rng, k, s.height(k)), g = gen::step(rng, k, s.height(k));
      Scalar t = s.height(k) * Scalar::rational(gen::pick(rng, -40, 40), 10);
      auto a = correlate(s, f, g, t);
      auto b = correlate(s, reflect(f), reflect(g), -t);
      CHECK(std::abs(a.value - b.value) <= a.error_bound + b.error_bound + 1e-12);
      // three-point form
      auto h = gen::step(rng, k, s.height(k));
      Scalar t2 = s.height(k) * Scalar::rational(gen::pick(rng, -40, 40), 10);
      auto m = m_correlate(s, {f, g, h}, {Scalar(0), t, t2});
      auto n = m_correlate(s, {reflect(f), reflect(g), reflect(h)}, {Scalar(0), -t, -t2});
      CHECK(std::abs(m.value - n.value) <= m.error_bound + n.error_bound + 1e-12);
    }
  }
}

TEST_CASE("the two-point reflection identity holds on every rank-one flow") {
  // Pair differences of copy offsets form a symmetric multiset, so spectral
  // data cannot separate a flow from its time reverse.
  auto s = asym49_schedule({});
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    auto f = gen::step(rng, 2, s.height(2)), g = gen::step(rng, 2, s.height(2));
    Scalar t = Scalar::rational(gen::pick(rng, -300, 300), 4);
    auto a = correlate(s, f, g, t), b = correlate(s, reflect(f), reflect(g), -t);
    CHECK(std::abs(a.value - b.value) <= a.error_bound + b.error_bound + 1e-12);
  }
}
