#pragma once

// Scalar: an element of Q(sqrt 2) held exactly, or a double on explicit
// opt-in. All tower geometry (heights, widths, offsets, spacers, times)
// is carried in this type.
//
//   exact value     a + b*sqrt(2),  a, b rational (b == 0 for plain rationals)
//   float value     IEEE double, compared with relative tolerance 1e-12
//
// Exact ordering is decided by sign analysis: for a > 0 > b the sign of
// a + b*sqrt(2) is the sign of a^2 - 2 b^2, so no rounding ever enters a
// comparison.

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace rank1 {

enum class ScalarMode { Rational, Quadratic, Float };

std::string to_string(ScalarMode mode);
ScalarMode parse_scalar_mode(std::string_view text);

class Scalar {
 public:
  static constexpr double kFloatTolerance = 1e-12;

  Scalar() = default;
  Scalar(int v) : a_(v) {}               // NOLINT(implicit)
  Scalar(long v) : a_(v) {}              // NOLINT(implicit)
  Scalar(long long v) : a_(static_cast<long>(v)) {}  // NOLINT(implicit)
  Scalar(unsigned long v) : a_(v) {}     // NOLINT(implicit)
  explicit Scalar(const mpq_class& q) : a_(q) { a_.canonicalize(); }
  explicit Scalar(const mpz_class& z) : a_(z) {}

  static Scalar rational(long num, long den);
  static Scalar quadratic(const mpq_class& a, const mpq_class& b);
  static Scalar floating(double v);
  static Scalar sqrt2();

  // Accepts "p", "p/q", decimals ("0.25", exact), "sqrt2", "b*sqrt2",
  // "a+b*sqrt2", "a-b*sqrt2", and "f:<double>" for float values.
  static Scalar parse(std::string_view text);

  bool is_float() const { return float_; }
  bool is_exact() const { return !float_; }
  bool has_sqrt2() const { return !float_ && sgn(b_) != 0; }
  bool is_zero() const { return sign() == 0; }

  const mpq_class& rational_part() const { return a_; }
  const mpq_class& sqrt2_part() const { return b_; }

  int sign() const;
  double to_double() const;

  // floor() of the real value; exact for exact scalars.
  mpz_class floor() const;

  // Canonical text form: "p/q", "p/q+p'/q'*sqrt2", or "f:<%.17g>".
  std::string str() const;

  // Decimal digits needed for the largest numerator/denominator; used for
  // the exact-arithmetic budget.
  std::size_t digits() const;

  Scalar abs() const { return sign() < 0 ? -*this : *this; }
  Scalar to_float() const { return floating(to_double()); }

  Scalar operator-() const;
  Scalar& operator+=(const Scalar& o);
  Scalar& operator-=(const Scalar& o);
  Scalar& operator*=(const Scalar& o);
  Scalar& operator/=(const Scalar& o);

  friend Scalar operator+(Scalar x, const Scalar& y) { return x += y; }
  friend Scalar operator-(Scalar x, const Scalar& y) { return x -= y; }
  friend Scalar operator*(Scalar x, const Scalar& y) { return x *= y; }
  friend Scalar operator/(Scalar x, const Scalar& y) { return x /= y; }

  friend bool operator==(const Scalar& x, const Scalar& y);
  friend std::strong_ordering operator<=>(const Scalar& x, const Scalar& y);

  // Coefficient-wise order (a, then b). Cheap, consistent with ==, and
  // used only to key hash-free tables; it is not the real order.
  static bool key_less(const Scalar& x, const Scalar& y);

 private:
  void normalize_float_operand(const Scalar& o);

  mpq_class a_{0};
  mpq_class b_{0};
  double f_{0.0};
  bool float_{false};
};

Scalar min(const Scalar& x, const Scalar& y);
Scalar max(const Scalar& x, const Scalar& y);

std::ostream& operator<<(std::ostream& os, const Scalar& s);

}  // namespace rank1
