#include "refgame/diffrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "refgame/logging.hpp"

namespace refgame {

namespace detail {

void isotonic_l2(const std::vector<double>& y, std::vector<double>& sol) {
  int n = static_cast<int>(y.size());
  sol.resize(static_cast<size_t>(n));
  if (n == 0) return;
  // target describes a list of blocks: if [i..j] (inclusive) is an active
  // block, then target[i] == j and target[j] == i.
  std::vector<int> target(static_cast<size_t>(n));
  std::vector<double> c(static_cast<size_t>(n), 1.0);
  std::vector<double> sums(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    sol[static_cast<size_t>(i)] = y[static_cast<size_t>(i)];
    sums[static_cast<size_t>(i)] = y[static_cast<size_t>(i)];
    target[static_cast<size_t>(i)] = i;
  }
  int i = 0;
  while (i < n) {
    int k = target[static_cast<size_t>(i)] + 1;
    if (k == n) break;
    if (sol[static_cast<size_t>(i)] > sol[static_cast<size_t>(k)]) {
      i = k;
      continue;
    }
    double sum_y = sums[static_cast<size_t>(i)];
    double sum_c = c[static_cast<size_t>(i)];
    for (;;) {
      // Within an increasing subsequence: pool blocks until the constraint
      // holds again.
      double prev_y = sol[static_cast<size_t>(k)];
      sum_y += sums[static_cast<size_t>(k)];
      sum_c += c[static_cast<size_t>(k)];
      k = target[static_cast<size_t>(k)] + 1;
      if (k == n || prev_y > sol[static_cast<size_t>(k)]) {
        sol[static_cast<size_t>(i)] = sum_y / sum_c;
        sums[static_cast<size_t>(i)] = sum_y;
        c[static_cast<size_t>(i)] = sum_c;
        target[static_cast<size_t>(i)] = k - 1;
        target[static_cast<size_t>(k - 1)] = i;
        if (i > 0) i = target[static_cast<size_t>(i - 1)];  // backtrack; keeps the pass single
        break;
      }
    }
  }
  i = 0;
  while (i < n) {
    int k = target[static_cast<size_t>(i)] + 1;
    for (int j = i + 1; j < k; ++j) sol[static_cast<size_t>(j)] = sol[static_cast<size_t>(i)];
    i = k;
  }
}

}  // namespace detail

namespace {

constexpr double kBlockEps = 1e-9;

// Consecutive equal entries of the isotonic solution form the blocks whose
// Jacobian is uniform averaging.
std::vector<int> partition_sizes(const std::vector<double>& sol) {
  std::vector<int> sizes;
  if (sol.empty()) return sizes;
  sizes.push_back(1);
  for (size_t i = 1; i < sol.size(); ++i) {
    if (std::abs(sol[i] - sol[i - 1]) > kBlockEps) sizes.push_back(0);
    ++sizes.back();
  }
  return sizes;
}

// Projection of x/eps onto the permutahedron of {1..n}; the custom-gradient
// core of soft_ranks.
Tensor soft_rank_projection(const Tensor& x, double eps) {
  int n = x.dim(0);
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const double* xv = x.data();
  std::stable_sort(perm.begin(), perm.end(),
                   [&](int a, int b) { return xv[a] > xv[b]; });
  std::vector<double> shifted(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j)
    shifted[static_cast<size_t>(j)] = xv[perm[static_cast<size_t>(j)]] / eps - (n - j);
  std::vector<double> dual;
  detail::isotonic_l2(shifted, dual);
  std::vector<double> out(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j)
    out[static_cast<size_t>(perm[static_cast<size_t>(j)])] =
        shifted[static_cast<size_t>(j)] + (n - j) - dual[static_cast<size_t>(j)];
  Tensor result = Tensor::from({n}, std::move(out));
  Tape* tp = Tape::active();
  if (tp && x.requires_grad()) {
    result.set_requires_grad(true);
    Tensor in = x;
    tp->record(result, [in, result, perm, dual, eps, n]() mutable {
      const auto& go = result.grad();
      std::vector<double> gs(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j)
        gs[static_cast<size_t>(j)] = go[static_cast<size_t>(perm[static_cast<size_t>(j)])];
      // (I - J) gs, where J averages within each isotonic block.
      std::vector<double> h = gs;
      int start = 0;
      for (int size : partition_sizes(dual)) {
        double block_sum = 0.0;
        for (int j = start; j < start + size; ++j) block_sum += gs[static_cast<size_t>(j)];
        double avg = block_sum / size;
        for (int j = start; j < start + size; ++j) h[static_cast<size_t>(j)] -= avg;
        start += size;
      }
      auto& gi = in.grad();
      for (int j = 0; j < n; ++j)
        gi[static_cast<size_t>(perm[static_cast<size_t>(j)])] += h[static_cast<size_t>(j)] / eps;
    });
  }
  return result;
}

Tensor standardized(const Tensor& v) {
  Tensor centered = v - mean(v);
  Tensor var = mean(centered * centered);
  return centered / sqrt(var + 1e-12);
}

}  // namespace

std::vector<double> hard_ranks(const std::vector<double>& v) {
  size_t n = v.size();
  if (n == 0) throw std::invalid_argument("hard_ranks: empty input");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return v[static_cast<size_t>(a)] < v[static_cast<size_t>(b)]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n &&
           v[static_cast<size_t>(idx[j + 1])] == v[static_cast<size_t>(idx[i])])
      ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of positions i..j, 1-based
    for (size_t k = i; k <= j; ++k) ranks[static_cast<size_t>(idx[k])] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("pearson: length mismatch");
  size_t n = a.size();
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double hard_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hard_spearman: length mismatch");
  std::vector<double> ra = hard_ranks(a);
  std::vector<double> rb = hard_ranks(b);
  auto constant = [](const std::vector<double>& r) {
    for (double x : r)
      if (x != r[0]) return false;
    return true;
  };
  if (constant(ra) || constant(rb)) {
    warn("hard_spearman: zero rank variance, correlation defined as 0");
    return 0.0;
  }
  return pearson(ra, rb);
}

Tensor soft_ranks(const Tensor& v, const SoftRankConfig& cfg) {
  if (v.rank() != 1 || v.dim(0) < 2)
    throw std::invalid_argument("soft_ranks: need a rank-1 tensor with n >= 2, got " +
                                shape_str(v.shape()));
  if (cfg.regularization_strength <= 0.0)
    throw std::invalid_argument("soft_ranks: regularization strength must be positive");
  Tensor x = cfg.standardize ? standardized(v) : v;
  return soft_rank_projection(x, cfg.regularization_strength);
}

Tensor soft_spearman(const Tensor& a, const Tensor& b, const SoftRankConfig& cfg) {
  if (a.rank() != 1 || b.rank() != 1 || a.dim(0) != b.dim(0))
    throw std::invalid_argument("soft_spearman: mismatched inputs " +
                                shape_str(a.shape()) + " and " + shape_str(b.shape()));
  if (a.dim(0) < 3)
    throw std::invalid_argument("soft_spearman: need n >= 3, got n = " +
                                std::to_string(a.dim(0)));
  Tensor ra = soft_ranks(a, cfg);
  Tensor rb = soft_ranks(b, cfg);
  Tensor ca = ra - mean(ra);
  Tensor cb = rb - mean(rb);
  Tensor va = sum(ca * ca);
  Tensor vb = sum(cb * cb);
  if (va.item() <= 1e-12 || vb.item() <= 1e-12) {
    warn("soft_spearman: zero variance in soft ranks, correlation defined as 0");
    return Tensor::scalar(0.0);
  }
  return sum(ca * cb) / (sqrt(va) * sqrt(vb));
}

}  // namespace refgame
