#include <doctest.h>

#include <random>

#include "gen.hpp"
#include "oracle.hpp"
#include "rank1/errors.hpp"
#include "rank1/named.hpp"
#include "rank1/serialize.hpp"
#include "rank1/step_function.hpp"

using namespace rank1;

namespace {

bool close(Complex a, Complex b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

}  // namespace

TEST_CASE("lift examples") {
  auto flat = flat_schedule({.r = 2});
  auto one = StepFunction::constant(1, Scalar(1), 1.0);
  CHECK(lift(flat, one, 1).breakpoints() == one.breakpoints());
  auto l = lift(flat, one, 2).merged();
  CHECK(l.breakpoints() == std::vector<Scalar>{Scalar(0), Scalar(2)});
  CHECK(l.values() == std::vector<Complex>{1.0});

  StageParams p;
  p.r = 2;
  p.spacers = SpacerMap(SpacerMap::ExplicitList{{Scalar(0), Scalar(1)}});
  auto s = Schedule::from_stages(Scalar(1), Scalar(1), {p});
  auto m = lift(s, one, 2).merged();
  CHECK(m.breakpoints() == std::vector<Scalar>{Scalar(0), Scalar(2), Scalar(3)});
  CHECK(m.values() == std::vector<Complex>{1.0, 0.0});
  CHECK_THROWS_AS(lift(s, one, 0), RangeError);
}

TEST_CASE("property: lifting preserves inner products and matches the oracle lift") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = gen::schedule(rng, 4, 4, trial % 2 == 0, trial % 3 == 0);
    auto f = gen::step(rng, 1, s.height(1));
    auto g = gen::step(rng, 1, s.height(1));
    for (std::size_t N = 1; N <= 4; ++N) {
      auto F = lift(s, f, N), G = lift(s, g, N);
      CHECK(F.height() == s.height(N));
      CHECK(close(inner_product(s, F, G), inner_product(s, f, g)));
      // pointwise agreement with the reference lift
      std::size_t cursor = 0;
      auto ref = oracle::lift(s, f, N);
      for (const auto& piece : ref) {
        Scalar mid = (piece.a + piece.b) / Scalar(2);
        CHECK(F(mid) == oracle::at(ref, cursor, mid));
      }
    }
  }
}

TEST_CASE("lift guard") {
  auto s = flat_schedule({.r = 16});
  CHECK_THROWS_AS(lift(s, StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar::rational(1, 2)), 6, 1000), ResourceError);
}

TEST_CASE("reflect") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    auto f = gen::step(rng, 2, Scalar(7));
    auto r = reflect(f);
    CHECK(reflect(r).breakpoints() == f.breakpoints());
    CHECK(reflect(r).values() == f.values());
    CHECK(r.square_integral() == doctest::Approx(f.square_integral()));
    CHECK(r(Scalar::rational(1, 3)) == f(Scalar(7) - Scalar::rational(1, 3)));
  }
  StepFunction sym(1, {Scalar(0), Scalar(1), Scalar(2), Scalar(3)}, {1.0, 2.0, 1.0});
  CHECK(reflect(sym).values() == sym.values());
  CHECK(reflect(sym).breakpoints() == sym.breakpoints());
}

TEST_CASE("step function basics") {
  StepFunction f(1, {Scalar(0), Scalar(1), Scalar(3)}, {Complex(2, 0), Complex(0, -1)});
  CHECK(f.sup_norm() == 2.0);
  CHECK(f.integral() == Complex(2, -2));
  CHECK(f.square_integral() == 6.0);
  CHECK(f(Scalar(1)) == Complex(0, -1));
  CHECK(f(Scalar(3)) == Complex(0));
  CHECK(f(Scalar(-1)) == Complex(0));
  CHECK(f.total_variation() == doctest::Approx(2 + std::sqrt(5.0) + 1));
  CHECK(f.conj().values()[1] == Complex(0, 1));
  StepFunction g(1, {Scalar(0), Scalar(1), Scalar(2), Scalar(3)}, {1.0, 1.0, 1.0});
  CHECK(g.merged().pieces() == 1);
  CHECK_THROWS_AS(StepFunction(1, {Scalar(1), Scalar(2)}, {1.0}), ConfigError);
  CHECK_THROWS_AS(StepFunction(1, {Scalar(0), Scalar(2), Scalar(2)}, {1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(StepFunction(0, {Scalar(0), Scalar(2)}, {1.0}), ConfigError);
  CHECK_THROWS_AS(StepFunction::indicator(1, Scalar(1), Scalar(0), Scalar(2)), ConfigError);
}

TEST_CASE("shifted product integral") {
  auto a = StepFunction::indicator(1, Scalar(2), Scalar(0), Scalar(1));
  auto b = StepFunction::constant(1, Scalar(2), 1.0);
  CHECK(shifted_product_integral({&a, &b}, {0.0, 0.0}) == Complex(1));
  CHECK(shifted_product_integral({&a, &b}, {0.5, 0.0}) == Complex(1));
  CHECK(shifted_product_integral({&a, &b}, {1.5, 0.0}) == Complex(0.5));
  CHECK(shifted_product_integral({&b, &b, &b}, {0.0, 0.5, 1.0}) == Complex(1));
}

TEST_CASE("random generators") {
  std::mt19937_64 rng(0);
  for (int i = 0; i < 50; ++i) {
    auto f = random_step_function(rng, 2, Scalar(5), {.grid = 10, .max_pieces = 4, .mean_zero = true});
    CHECK(std::abs(f.integral()) < 1e-12);
    CHECK(f.pieces() <= 5);
    auto l = random_level_set(rng, 1, Scalar(3), 6);
    for (auto v : l.values()) CHECK((v == Complex(0) || v == Complex(1)));
    CHECK(l.integral().real() > 0);
  }
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 20; ++i) CHECK(uniform_index(a, 17) == uniform_index(b, 17));
}

TEST_CASE("step function JSON") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    auto f = gen::step(rng, 3, Scalar::sqrt2() + Scalar(1));
    auto back = step_function_from_json(Json::parse(to_json(f).dump()));
    CHECK(back.stage() == 3);
    CHECK(back.breakpoints() == f.breakpoints());
    CHECK(back.values() == f.values());
  }
  auto doc = to_json(StepFunction::indicator(2, Scalar(4), Scalar(1), Scalar(2)));
  CHECK(doc["breakpoints"] == Json::parse(R"(["0", "1", "2", "4"])"));
  CHECK(doc["stage"] == 2);
}
