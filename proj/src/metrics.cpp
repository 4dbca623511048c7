#include "refgame/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "refgame/diffrank.hpp"
#include "refgame/logging.hpp"

namespace refgame {

namespace {

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  double den = std::sqrt(aa) * std::sqrt(bb);
  return den > 0.0 ? ab / den : 0.0;
}

void check_rows(const std::vector<std::vector<double>>& x, const char* op) {
  if (x.size() < 3)
    throw std::invalid_argument(std::string(op) + ": need n >= 3 items, got " +
                                std::to_string(x.size()));
  for (const auto& row : x)
    if (row.size() != x[0].size())
      throw std::invalid_argument(std::string(op) + ": ragged input rows");
}

}  // namespace

std::vector<double> pairwise_cosine(const std::vector<std::vector<double>>& x) {
  size_t n = x.size();
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) out.push_back(cosine_sim(x[i], x[j]));
  return out;
}

std::vector<double> pairwise_euclidean(const std::vector<std::vector<double>>& x) {
  size_t n = x.size();
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double s = 0;
      for (size_t k = 0; k < x[i].size(); ++k) {
        double d = x[i][k] - x[j][k];
        s += d * d;
      }
      out.push_back(std::sqrt(s));
    }
  return out;
}

double rsa(const std::vector<std::vector<double>>& x,
           const std::vector<std::vector<double>>& y) {
  check_rows(x, "rsa");
  check_rows(y, "rsa");
  if (x.size() != y.size())
    throw std::invalid_argument("rsa: item counts differ, " +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  return hard_spearman(pairwise_cosine(x), pairwise_cosine(y));
}

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double topsim(const std::vector<std::vector<double>>& inputs,
              const std::vector<Message>& messages, InputDistance metric) {
  check_rows(inputs, "topsim");
  if (inputs.size() != messages.size())
    throw std::invalid_argument("topsim: " + std::to_string(inputs.size()) +
                                " inputs vs " + std::to_string(messages.size()) +
                                " messages");
  size_t n = inputs.size();
  std::vector<double> input_dist;
  if (metric == InputDistance::cosine) {
    input_dist = pairwise_cosine(inputs);
    for (double& s : input_dist) s = 1.0 - s;
  } else {
    input_dist = pairwise_euclidean(inputs);
  }
  std::vector<std::vector<int>> eff(n);
  for (size_t i = 0; i < n; ++i) eff[i] = messages[i].effective_symbols();
  std::vector<double> msg_dist;
  msg_dist.reserve(n * (n - 1) / 2);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      msg_dist.push_back(static_cast<double>(levenshtein(eff[i], eff[j])));
  return hard_spearman(input_dist, msg_dist);
}

double accuracy(const Tensor& distributions, const std::vector<int>& targets) {
  if (distributions.rank() != 2 ||
      distributions.dim(0) != static_cast<int>(targets.size()))
    throw std::invalid_argument("accuracy: distributions " +
                                shape_str(distributions.shape()) + " vs " +
                                std::to_string(targets.size()) + " targets");
  int m = distributions.dim(0), n = distributions.dim(1);
  int hits = 0;
  for (int r = 0; r < m; ++r) {
    int best = 0;
    for (int c = 1; c < n; ++c)
      if (distributions.at(r, c) > distributions.at(r, best)) best = c;
    if (best == targets[static_cast<size_t>(r)]) ++hits;
  }
  return static_cast<double>(hits) / m;
}

int count_unique_messages(const std::vector<Message>& messages) {
  std::set<std::vector<int>> seen;
  for (const Message& m : messages) seen.insert(m.effective_symbols());
  return static_cast<int>(seen.size());
}

double pearson_p_value(double r, int n) {
  if (n < 3) return 1.0;
  double denom = 1.0 - r * r;
  if (denom <= 1e-15) return 0.0;
  double t = r * std::sqrt((n - 2) / denom);
  boost::math::students_t dist(static_cast<double>(n - 2));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::vector<CorrelationRow> correlation_report(const std::vector<RunPoint>& runs) {
  if (runs.size() < 3)
    throw std::invalid_argument("correlation_report: need >= 3 runs, got " +
                                std::to_string(runs.size()));
  int n = static_cast<int>(runs.size());
  std::vector<double> ts(runs.size()), rs(runs.size()), va(runs.size());
  for (size_t i = 0; i < runs.size(); ++i) {
    ts[i] = runs[i].topsim;
    rs[i] = runs[i].rsa_sl;
    va[i] = runs[i].val_accuracy;
  }
  auto variance = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  auto row = [&](const std::string& name, const std::vector<double>& a,
                 const std::vector<double>& b) {
    CorrelationRow cr;
    cr.pair = name;
    cr.n = n;
    if (variance(a) <= 0.0 || variance(b) <= 0.0) {
      cr.defined = false;
      return cr;
    }
    cr.r = pearson(a, b);
    cr.p = pearson_p_value(cr.r, n);
    cr.defined = true;
    return cr;
  };
  return {row("topsim_vs_rsa_sl", ts, rs),
          row("topsim_vs_val_accuracy", ts, va)};
}

}  // namespace refgame
