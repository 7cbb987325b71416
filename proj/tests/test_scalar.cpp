#include <doctest.h>

#include <cmath>
#include <random>

#include "rank1/errors.hpp"
#include "rank1/scalar.hpp"

using rank1::Scalar;

TEST_CASE("parse and print") {
  CHECK(Scalar::parse("3/6").str() == "1/2");
  CHECK(Scalar::parse("0.25") == Scalar::rational(1, 4));
  CHECK(Scalar::parse("-7") == Scalar(-7));
  CHECK(Scalar::parse("sqrt2") == Scalar::sqrt2());
  CHECK(Scalar::parse("2*sqrt2") == Scalar::sqrt2() * Scalar(2));
  CHECK(Scalar::parse("1/2-3/4*sqrt2") == Scalar::quadratic(mpq_class(1, 2), mpq_class(-3, 4)));
  CHECK(Scalar::parse("f:0.5").is_float());
  CHECK_THROWS(Scalar::parse("abc"));
  CHECK_THROWS(Scalar::parse("1/0"));
  Scalar q = Scalar::quadratic(mpq_class(2, 3), mpq_class(-5, 7));
  CHECK(Scalar::parse(q.str()) == q);
}

TEST_CASE("sqrt2 squared is 2") {
  CHECK(Scalar::sqrt2() * Scalar::sqrt2() == Scalar(2));
  CHECK((Scalar(1) / Scalar::sqrt2()) * Scalar(2) == Scalar::sqrt2());
}

TEST_CASE("ordering follows the real embedding") {
  // 140/99 < sqrt2 < 577/408 < 99/70
  CHECK(Scalar::rational(140, 99) < Scalar::sqrt2());
  CHECK(Scalar::rational(99, 70) > Scalar::sqrt2());
  CHECK(Scalar::sqrt2() < Scalar::rational(577, 408));
  CHECK(Scalar::quadratic(3, -2) > Scalar(0));  // 3 - 2 sqrt2 ~ 0.17
  CHECK(Scalar::quadratic(-3, 2) < Scalar(0));
  CHECK(Scalar::quadratic(mpq_class(-17, 12), 1).sign() == -1);  // sqrt2 - 17/12 ~ -0.0025
}

TEST_CASE("property: exact order agrees with doubles away from ties") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    auto r = [&] { return mpq_class(static_cast<long>(rng() % 41) - 20, static_cast<long>(rng() % 7) + 1); };
    Scalar x = Scalar::quadratic(r(), r()), y = Scalar::quadratic(r(), r());
    double dx = x.to_double(), dy = y.to_double();
    if (std::abs(dx - dy) > 1e-9) CHECK((x < y) == (dx < dy));
    CHECK(x - y + y == x);
    if (!y.is_zero()) CHECK((x / y) * y == x);
    if (std::abs(dx - std::round(dx)) > 1e-9) CHECK(x.floor() == mpz_class(std::floor(dx)));
  }
}

TEST_CASE("floor is exact") {
  CHECK(Scalar::sqrt2().floor() == 1);
  CHECK((-Scalar::sqrt2()).floor() == -2);
  CHECK(Scalar::rational(-1, 2).floor() == -1);
  CHECK(Scalar(3).floor() == 3);
  CHECK((Scalar::sqrt2() * Scalar(1000)).floor() == 1414);
}

TEST_CASE("float mode uses relative tolerance") {
  Scalar a = Scalar::floating(1.0);
  Scalar b = Scalar::floating(1.0 + 1e-14);
  CHECK(a == b);
  CHECK(a != Scalar::floating(1.0 + 1e-9));
  CHECK((a + Scalar(1)).is_float());
}

TEST_CASE("modes parse") {
  CHECK(rank1::parse_scalar_mode(rank1::to_string(rank1::ScalarMode::Quadratic)) == rank1::ScalarMode::Quadratic);
  CHECK_THROWS(rank1::parse_scalar_mode("decimal"));
}
