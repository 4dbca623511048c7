#pragma once

#include <vector>

#include "refgame/tensor.hpp"

namespace refgame {

// Differentiable ranking via L2-regularized projection onto the
// permutahedron of {1..n}, solved with pool-adjacent-violators isotonic
// regression. The smoothness knob epsilon interpolates between exact ranks
// (epsilon -> 0) and the fully smoothed centroid (n+1)/2 (epsilon -> inf).
struct SoftRankConfig {
  double regularization_strength = 0.1;  // epsilon > 0
  // Z-score inputs before ranking so epsilon is scale-free.
  bool standardize = true;
};

// Ascending fractional ranks 1..n; ties receive the average of their
// positional ranks.
std::vector<double> hard_ranks(const std::vector<double>& v);

// Pearson correlation over tie-averaged ranks. Zero rank variance in either
// argument yields 0 with a warning.
double hard_spearman(const std::vector<double>& a, const std::vector<double>& b);

// Plain Pearson correlation; NaN-free (returns 0 on zero variance).
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Differentiable rank vector for rank-1 input, n >= 2. Order-preserving and
// permutation-equivariant for every epsilon.
Tensor soft_ranks(const Tensor& v, const SoftRankConfig& cfg);

// Pearson correlation of soft_ranks(a) and soft_ranks(b); n >= 3.
// Degenerate (zero-variance) rank vectors yield constant 0 with a warning.
Tensor soft_spearman(const Tensor& a, const Tensor& b, const SoftRankConfig& cfg);

namespace detail {
// argmin_{s_1 >= ... >= s_n} 0.5 ||s - y||^2 (PAV, O(n) after sort).
void isotonic_l2(const std::vector<double>& y, std::vector<double>& sol);
}  // namespace detail

}  // namespace refgame
