#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "rank1/errors.hpp"
#include "rank1/tensor.hpp"

using namespace rank1;

namespace {

Complex brute_permanent(const ComplexMatrix& m) {
  std::vector<std::size_t> p(m.size());
  std::iota(p.begin(), p.end(), 0);
  Complex total = 0.0;
  do {
    Complex term = 1.0;
    for (std::size_t i = 0; i < m.size(); ++i) term *= m[i][p[i]];
    total += term;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

ComplexMatrix filled(std::size_t n, Complex c) { return ComplexMatrix(n, std::vector<Complex>(n, c)); }

}  // namespace

TEST_CASE("permanent examples") {
  CHECK(permanent({{Complex(3, 1)}}) == Complex(3, 1));
  CHECK(permanent(filled(2, 1.0)) == Complex(2));
  ComplexMatrix id = filled(3, 0.0);
  for (int i = 0; i < 3; ++i) id[i][i] = 1.0;
  CHECK(permanent(id) == Complex(1));
  CHECK(permanent({{1.0, 2.0}, {3.0, 4.0}}) == Complex(10));
}

TEST_CASE("permanent of c times all-ones is c^n n!") {
  const Complex c(0.5, 0.25);
  double fact = 1.0;
  for (std::size_t n = 1; n <= 12; ++n) {
    fact *= static_cast<double>(n);
    Complex expect = std::pow(c, static_cast<int>(n)) * fact;
    CHECK(std::abs(permanent(filled(n, c)) - expect) <= 1e-10 * std::abs(expect));
  }
}

TEST_CASE("property: Ryser matches the permutation sum") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      ComplexMatrix m(n, std::vector<Complex>(n));
      for (auto& row : m)
        for (auto& x : row) x = Complex(u(rng), u(rng));
      CHECK(std::abs(permanent(m) - brute_permanent(m)) <= 1e-10);
    }
  }
}

TEST_CASE("permanent limits") {
  CHECK_THROWS_AS(permanent(filled(21, 1.0)), ResourceError);
  CHECK_THROWS_AS(permanent({{1.0, 2.0}, {3.0}}), ConfigError);
  CHECK_NOTHROW(permanent(filled(20, 0.0)));
}

TEST_CASE("sym_tensor_correlate") {
  std::vector<std::vector<CorrelationResult>> gram(2, std::vector<CorrelationResult>(2));
  gram[0][0] = {1.0, 0.0, 3, 1};
  gram[0][1] = {0.5, 0.0, 3, 1};
  gram[1][0] = {0.5, 0.0, 4, 1};
  gram[1][1] = {2.0, 0.0, 3, 1};
  auto r = sym_tensor_correlate(gram);
  CHECK(r.value == Complex(2.25));
  CHECK(r.error_bound == 0.0);
  CHECK(r.stage_used == 4);

  // perturbing every entry within its bound stays within the propagated bound
  for (auto& row : gram)
    for (auto& c : row) c.error_bound = 1e-3;
  auto b = sym_tensor_correlate(gram);
  CHECK(b.error_bound > 0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e-3 / std::sqrt(2.0), 1e-3 / std::sqrt(2.0));
  for (int trial = 0; trial < 100; ++trial) {
    ComplexMatrix m(2, std::vector<Complex>(2));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) m[i][j] = gram[i][j].value + Complex(u(rng), u(rng));
    CHECK(std::abs(permanent(m) - b.value) <= b.error_bound);
  }
}
