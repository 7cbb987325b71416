#include "rank1/scalar.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

std::string trim(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n') out.push_back(c);
  }
  return out;
}

// "p", "p/q", "-1.25", "3e-2" -> exact rational.
mpq_class parse_rational(const std::string& s) {
  if (s.empty()) throw ConfigError("empty rational literal");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw ConfigError("bad rational literal '" + s + "'");
    if (q.get_den() == 0) throw ConfigError("zero denominator in '" + s + "'");
    q.canonicalize();
    return q;
  }
  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '+' || s[i] == '-') negative = s[i++] == '-';
  std::string digits;
  long exponent = 0;
  bool seen_digit = false;
  bool after_point = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
      if (after_point) --exponent;
    } else if (c == '.' && !after_point) {
      after_point = true;
    } else if (c == 'e' || c == 'E') {
      try {
        exponent += std::stol(s.substr(i + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad exponent in '" + s + "'");
      }
      break;
    } else {
      throw ConfigError("bad numeric literal '" + s + "'");
    }
  }
  if (!seen_digit) throw ConfigError("bad numeric literal '" + s + "'");
  mpz_class mant(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  mpq_class q = exponent >= 0 ? mpq_class(mant * scale) : mpq_class(mant, scale);
  q.canonicalize();
  return negative ? mpq_class(-q) : q;
}

int quad_sign(const mpq_class& a, const mpq_class& b) {
  int sa = sgn(a);
  int sb = sgn(b);
  if (sb == 0) return sa;
  if (sa == 0) return sb;
  if (sa == sb) return sa;
  // Opposite signs: compare a^2 with 2 b^2.
  mpq_class lhs = a * a;
  mpq_class rhs = 2 * b * b;
  int c = cmp(lhs, rhs);
  return c > 0 ? sa : sb;  // a^2 == 2 b^2 is impossible for b != 0
}

bool float_equal(double x, double y) {
  if (x == y) return true;
  double scale = std::max(std::fabs(x), std::fabs(y));
  return std::fabs(x - y) <= Scalar::kFloatTolerance * scale;
}

mpz_class isqrt(const mpz_class& v) {
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), v.get_mpz_t());
  return r;
}

mpz_class floor_q(const mpq_class& q) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

}  // namespace

std::string to_string(ScalarMode mode) {
  switch (mode) {
    case ScalarMode::Rational:
      return "exact-rational";
    case ScalarMode::Quadratic:
      return "quadratic-sqrt2";
    case ScalarMode::Float:
      return "float";
  }
  return "?";
}

ScalarMode parse_scalar_mode(std::string_view text) {
  if (text == "exact-rational" || text == "rational") return ScalarMode::Rational;
  if (text == "quadratic-sqrt2" || text == "quadratic") return ScalarMode::Quadratic;
  if (text == "float") return ScalarMode::Float;
  throw ConfigError("unknown scalar mode '" + std::string(text) + "'");
}

Scalar Scalar::rational(long num, long den) {
  if (den == 0) throw ConfigError("zero denominator");
  Scalar s;
  s.a_ = mpq_class(num, den);
  s.a_.canonicalize();
  return s;
}

Scalar Scalar::quadratic(const mpq_class& a, const mpq_class& b) {
  Scalar s;
  s.a_ = a;
  s.b_ = b;
  s.a_.canonicalize();
  s.b_.canonicalize();
  return s;
}

Scalar Scalar::floating(double v) {
  if (!std::isfinite(v)) throw ResourceError("non-finite float scalar");
  Scalar s;
  s.float_ = true;
  s.f_ = v;
  return s;
}

Scalar Scalar::sqrt2() { return quadratic(0, 1); }

Scalar Scalar::parse(std::string_view text) {
  std::string s = trim(text);
  if (s.rfind("f:", 0) == 0) {
    try {
      return floating(std::stod(s.substr(2)));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad float literal '" + s + "'");
    }
  }
  auto pos = s.find("sqrt2");
  if (pos == std::string::npos) return Scalar(parse_rational(s));
  if (pos + 5 != s.size()) throw ConfigError("sqrt2 must end the literal: '" + s + "'");
  std::string head = s.substr(0, pos);
  // Split head into "<a>" and "<sign><b>*" at the last sign that is not an
  // exponent sign and not the leading character.
  std::size_t split = std::string::npos;
  for (std::size_t i = head.size(); i-- > 1;) {
    if ((head[i] == '+' || head[i] == '-') && head[i - 1] != 'e' && head[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  std::string a_text = split == std::string::npos ? "" : head.substr(0, split);
  std::string b_text = split == std::string::npos ? head : head.substr(split);
  if (!b_text.empty() && b_text.back() == '*') b_text.pop_back();
  mpq_class b;
  if (b_text.empty() || b_text == "+") {
    b = 1;
  } else if (b_text == "-") {
    b = -1;
  } else {
    b = parse_rational(b_text[0] == '+' ? b_text.substr(1) : b_text);
  }
  mpq_class a = a_text.empty() ? mpq_class(0) : parse_rational(a_text);
  return quadratic(a, b);
}

int Scalar::sign() const {
  if (float_) return (f_ > 0) - (f_ < 0);
  return quad_sign(a_, b_);
}

double Scalar::to_double() const {
  if (float_) return f_;
  double v = a_.get_d();
  if (sgn(b_) != 0) v += b_.get_d() * kSqrt2;
  return v;
}

mpz_class Scalar::floor() const {
  if (float_) {
    mpz_class z;
    mpz_set_d(z.get_mpz_t(), std::floor(f_));
    return z;
  }
  if (sgn(b_) == 0) return floor_q(a_);
  // floor(|b| sqrt2) = isqrt(floor(2 b^2)); the true floor is within 2.
  mpz_class fb = isqrt(floor_q(mpq_class(2 * b_ * b_)));
  mpz_class guess = floor_q(a_) + (sgn(b_) > 0 ? fb : mpz_class(-fb - 1));
  while (Scalar(mpq_class(guess)) > *this) --guess;
  while (Scalar(mpq_class(guess + 1)) <= *this) ++guess;
  return guess;
}

std::string Scalar::str() const {
  if (float_) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "f:%.17g", f_);
    return buf;
  }
  std::string out = a_.get_str();
  if (sgn(b_) != 0) {
    if (sgn(a_) == 0) {
      out = b_.get_str() + "*sqrt2";
    } else {
      out += (sgn(b_) > 0 ? "+" : "") + b_.get_str() + "*sqrt2";
    }
  }
  return out;
}

std::size_t Scalar::digits() const {
  if (float_) return 17;
  auto d = [](const mpq_class& q) {
    return std::max(mpz_sizeinbase(q.get_num_mpz_t(), 10), mpz_sizeinbase(q.get_den_mpz_t(), 10));
  };
  return std::max(d(a_), d(b_));
}

Scalar Scalar::operator-() const {
  Scalar s = *this;
  if (float_) {
    s.f_ = -f_;
  } else {
    s.a_ = -a_;
    s.b_ = -b_;
  }
  return s;
}

void Scalar::normalize_float_operand(const Scalar& o) {
  if (!float_) {
    f_ = to_double();
    float_ = true;
    a_ = 0;
    b_ = 0;
  }
  (void)o;
}

Scalar& Scalar::operator+=(const Scalar& o) {
  if (float_ || o.float_) {
    double ov = o.to_double();
    normalize_float_operand(o);
    f_ += ov;
    return *this;
  }
  a_ += o.a_;
  if (sgn(o.b_) != 0 || sgn(b_) != 0) b_ += o.b_;
  return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
  if (float_ || o.float_) {
    double ov = o.to_double();
    normalize_float_operand(o);
    f_ -= ov;
    return *this;
  }
  a_ -= o.a_;
  if (sgn(o.b_) != 0 || sgn(b_) != 0) b_ -= o.b_;
  return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
  if (float_ || o.float_) {
    double ov = o.to_double();
    normalize_float_operand(o);
    f_ *= ov;
    return *this;
  }
  if (sgn(b_) == 0 && sgn(o.b_) == 0) {
    a_ *= o.a_;
    return *this;
  }
  mpq_class na = a_ * o.a_ + 2 * b_ * o.b_;
  mpq_class nb = a_ * o.b_ + b_ * o.a_;
  a_ = std::move(na);
  b_ = std::move(nb);
  return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
  if (o.is_zero()) throw DegenerateInputError("division by zero scalar");
  if (float_ || o.float_) {
    double ov = o.to_double();
    normalize_float_operand(o);
    f_ /= ov;
    return *this;
  }
  if (sgn(o.b_) == 0) {
    a_ /= o.a_;
    if (sgn(b_) != 0) b_ /= o.a_;
    return *this;
  }
  // (a + b r)/(c + d r) = (a + b r)(c - d r)/(c^2 - 2 d^2)
  mpq_class den = o.a_ * o.a_ - 2 * o.b_ * o.b_;
  mpq_class na = (a_ * o.a_ - 2 * b_ * o.b_) / den;
  mpq_class nb = (b_ * o.a_ - a_ * o.b_) / den;
  a_ = std::move(na);
  b_ = std::move(nb);
  return *this;
}

bool operator==(const Scalar& x, const Scalar& y) {
  if (x.float_ || y.float_) return float_equal(x.to_double(), y.to_double());
  return x.a_ == y.a_ && x.b_ == y.b_;
}

std::strong_ordering operator<=>(const Scalar& x, const Scalar& y) {
  if (x.float_ || y.float_) {
    double a = x.to_double();
    double b = y.to_double();
    if (float_equal(a, b)) return std::strong_ordering::equal;
    return a < b ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  int s;
  if (sgn(x.b_) == 0 && sgn(y.b_) == 0) {
    s = cmp(x.a_, y.a_);
  } else {
    s = quad_sign(mpq_class(x.a_ - y.a_), mpq_class(x.b_ - y.b_));
  }
  if (s < 0) return std::strong_ordering::less;
  if (s > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

bool Scalar::key_less(const Scalar& x, const Scalar& y) {
  if (x.float_ || y.float_) return x.to_double() < y.to_double();
  int c = cmp(x.a_, y.a_);
  if (c != 0) return c < 0;
  return cmp(x.b_, y.b_) < 0;
}

Scalar min(const Scalar& x, const Scalar& y) { return y < x ? y : x; }
Scalar max(const Scalar& x, const Scalar& y) { return x < y ? y : x; }

std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }

}  // namespace rank1
