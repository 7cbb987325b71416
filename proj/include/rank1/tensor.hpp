#pragma once

// Symmetric-tensor matrix coefficients. With the unnormalized convention
// <a_1 (.) ... (.) a_n, b_1 (.) ... (.) b_n> = perm(<a_i, b_j>), the
// coefficient of V^{(.)n} is the permanent of the Gram matrix <V f_i, g_j>.

#include <vector>

#include "rank1/koopman.hpp"

namespace rank1 {

using ComplexMatrix = std::vector<std::vector<Complex>>;

// Ryser's formula, O(2^n n). n <= 20.
Complex permanent(const ComplexMatrix& m);

CorrelationResult sym_tensor_correlate(const std::vector<std::vector<CorrelationResult>>& gram);

}  // namespace rank1
