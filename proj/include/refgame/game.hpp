#pragma once

#include <cstdint>
#include <vector>

#include "refgame/agents.hpp"
#include "refgame/datasets.hpp"
#include "refgame/diffrank.hpp"
#include "refgame/metrics.hpp"

namespace refgame {

enum class LossKind { ce, ce_rsa };
enum class RewardKind { neg_ce, accuracy };

struct GameConfig {
  LossKind loss = LossKind::ce;
  RewardKind reward = RewardKind::neg_ce;
  double lambda_entropy = 0.1;
  SoftRankConfig softrank;
  int n_cand = 2;
};

// Running mean of batch-mean rewards for REINFORCE variance reduction.
struct BaselineState {
  double mean = 0.0;
  int64_t count = 0;
  void update(double reward) {
    ++count;
    mean += (reward - mean) / static_cast<double>(count);
  }
};

struct LossReport {
  double ce = 0.0;
  double l_rsa = 0.0;  // 0 when the penalty is disabled
  double speaker_policy_loss = 0.0;
  double entropy_bonus = 0.0;
  double total = 0.0;
};

struct RoundResult {
  std::vector<Message> messages;
  Tensor log_probs;     // [B]
  Tensor entropies;     // [B]
  Tensor r_s;           // [B x hidden_s]
  Tensor r_l_all;       // [B*n_cand x hidden_l]
  Tensor r_l_targets;   // [B x hidden_l]
  Tensor distribution;  // [B x n_cand]
};

// Speaker describes each row's target; listener scores the shuffled
// candidates.
RoundResult play_round(const RoundBatchInputs& inputs, AgentPair& agents,
                       Mode mode, Rng& rng);

// mean over the batch of -log p(target); probabilities floored at 1e-12.
Tensor ce_loss(const Tensor& distribution, const std::vector<int>& target_index);

// Differentiable upper-triangle pairwise cosine similarities of the rows.
Tensor pairwise_cosine_tensor(const Tensor& x);

// (1 - RSA_sl) + (1 - RSA_si) + (1 - RSA_li) over the batch's target items,
// each RSA a soft Spearman between pairwise-cosine structures. Gradients
// reach both representation layers and nothing else. Needs batch >= 3.
Tensor rsa_penalty(const Tensor& r_s, const Tensor& r_l_targets,
                   const Tensor& input_embeddings, const SoftRankConfig& cfg);

struct PolicyLossResult {
  Tensor loss;             // -(reward - baseline) * log_prob - lambda * entropy, batch mean
  double policy_component = 0.0;
  double entropy_component = 0.0;
};

// REINFORCE with a running-mean baseline; the baseline is updated with the
// batch's mean reward after use. Rewards must already be detached data.
PolicyLossResult speaker_policy_loss(const Tensor& log_probs, const Tensor& entropies,
                                     const std::vector<double>& rewards,
                                     BaselineState& baseline, double lambda_entropy);

// Per-sample rewards from a completed round, as plain data.
std::vector<double> round_rewards(const Tensor& distribution,
                                  const std::vector<int>& target_index,
                                  RewardKind kind);

struct Optimizers {
  Adam speaker;
  Adam listener;
};

// One pass over the training split with fresh distractors per batch; applies
// a per-agent Adam step after every round. Returns the train-split record
// (sampled-round accuracy and losses, batch-averaged hard RSA, epoch-level
// topsim and unique messages).
MetricsRecord train_epoch(const EmbeddingDataset& ds, AgentPair& agents,
                          Optimizers& opts, BaselineState& baseline,
                          const GameConfig& cfg, int batch_size, Rng& rng,
                          int epoch);

// Greedy decoding against running batch-norm statistics; no updates. All
// randomness (distractors, candidate order) derives from eval_seed, so two
// calls return identical records.
MetricsRecord evaluate(const EmbeddingDataset& ds, Split split, AgentPair& agents,
                       const GameConfig& cfg, uint64_t eval_seed, int epoch);

// Fixed pairs are evaluated in both directions as 2-candidate rounds.
MetricsRecord evaluate_pairs(const FixedPairSet& pairs, AgentPair& agents,
                             const GameConfig& cfg, uint64_t eval_seed, int epoch,
                             const std::string& split_name);

}  // namespace refgame
