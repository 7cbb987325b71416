#include "rank1/tensor.hpp"

#include <cmath>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

constexpr std::size_t kMaxOrder = 20;

void check_square(std::size_t n, const auto& rows) {
  if (n == 0) throw ConfigError("permanent of an empty matrix");
  if (n > kMaxOrder) throw ResourceError("permanent order " + std::to_string(n) + " exceeds 20");
  for (const auto& row : rows) {
    if (row.size() != n) throw ConfigError("permanent needs a square matrix");
  }
}

}  // namespace

Complex permanent(const ComplexMatrix& m) {
  const std::size_t n = m.size();
  check_square(n, m);
  // Gray-code Ryser: perm = (-1)^n sum_S (-1)^{|S|} prod_i sum_{j in S} m_ij
  std::vector<Complex> row_sum(n, 0.0);
  Complex total = 0.0;
  std::uint32_t gray = 0;
  for (std::uint32_t k = 1; k < (1u << n); ++k) {
    std::uint32_t next = k ^ (k >> 1);
    std::uint32_t changed = next ^ gray;
    std::size_t col = static_cast<std::size_t>(__builtin_ctz(changed));
    double sign = (next & changed) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) row_sum[i] += sign * m[i][col];
    gray = next;
    Complex prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) prod *= row_sum[i];
    int bits = __builtin_popcount(gray);
    total += ((n - bits) % 2 == 0) ? prod : -prod;
  }
  return total;
}

CorrelationResult sym_tensor_correlate(const std::vector<std::vector<CorrelationResult>>& gram) {
  const std::size_t n = gram.size();
  check_square(n, gram);
  ComplexMatrix values(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) values[i][j] = gram[i][j].value;
  }
  CorrelationResult res;
  res.value = permanent(values);
  // The permanent is linear in each row; replacing rows one at a time,
  // |perm(M + E) - perm(M)| <= sum_i (sum_c |E_ic|) prod_{r != i} sum_c (|M_rc| + |E_rc|).
  std::vector<double> row_abs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_abs[i] += std::abs(values[i][j]) + gram[i][j].error_bound;
  }
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double others = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (r != i) others *= row_abs[r];
    }
    for (std::size_t j = 0; j < n; ++j) bound += gram[i][j].error_bound * others;
    res.stage_used = std::max(res.stage_used, gram[i][0].stage_used);
  }
  res.error_bound = bound;
  return res;
}

}  // namespace rank1
