#pragma once

#include <string>
#include <vector>

#include "refgame/message.hpp"
#include "refgame/tensor.hpp"

namespace refgame {

// Per-epoch evaluation snapshot; one CSV row.
struct MetricsRecord {
  int epoch = 0;
  std::string split;
  double accuracy = 0.0;
  double rsa_sl = 0.0;
  double rsa_si = 0.0;
  double rsa_li = 0.0;
  double topsim = 0.0;
  int unique_messages = 0;
  double ce = 0.0;
  double l_rsa = 0.0;
};

// Upper-triangle pairwise cosine similarities in pair order
// (0,1),(0,2),...,(0,n-1),(1,2),...; length n(n-1)/2. Zero vectors have
// similarity 0 to everything.
std::vector<double> pairwise_cosine(const std::vector<std::vector<double>>& x);
std::vector<double> pairwise_euclidean(const std::vector<std::vector<double>>& x);

// Spearman correlation between the pairwise cosine-similarity structures of
// two vector sets over the same n >= 3 items; dimensions may differ.
double rsa(const std::vector<std::vector<double>>& x,
           const std::vector<std::vector<double>>& y);

enum class InputDistance { cosine, euclidean };

// Spearman correlation between pairwise input distances and pairwise
// Levenshtein distances of the EOS-truncated messages; n >= 3.
double topsim(const std::vector<std::vector<double>>& inputs,
              const std::vector<Message>& messages,
              InputDistance metric = InputDistance::cosine);

// Unit-cost edit distance.
int levenshtein(const std::vector<int>& a, const std::vector<int>& b);

// Fraction of rows whose argmax equals the target; ties break toward the
// lowest index.
double accuracy(const Tensor& distributions, const std::vector<int>& targets);

int count_unique_messages(const std::vector<Message>& messages);

// ---- cross-run correlation reports ----

struct RunPoint {
  double topsim = 0.0;
  double rsa_sl = 0.0;
  double val_accuracy = 0.0;
};

struct CorrelationRow {
  std::string pair;
  int n = 0;
  double r = 0.0;
  double p = 1.0;
  bool defined = false;  // false when either side has zero variance
};

// Pearson r with two-tailed p (t approximation, n-2 dof) for
// topsim <-> rsa_sl and topsim <-> val_accuracy. Needs >= 3 runs.
std::vector<CorrelationRow> correlation_report(const std::vector<RunPoint>& runs);

// Two-tailed p-value for a Pearson r over n samples.
double pearson_p_value(double r, int n);

}  // namespace refgame
