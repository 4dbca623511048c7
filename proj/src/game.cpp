#include "refgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refgame {

namespace {

std::vector<std::vector<double>> to_rows(const Tensor& t) {
  int m = t.dim(0), n = t.dim(1);
  std::vector<std::vector<double>> rows(static_cast<size_t>(m),
                                        std::vector<double>(static_cast<size_t>(n)));
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) rows[static_cast<size_t>(r)][static_cast<size_t>(c)] = t.at(r, c);
  return rows;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

RoundResult play_round(const RoundBatchInputs& inputs, AgentPair& agents,
                       Mode mode, Rng& rng) {
  RoundResult r;
  r.r_s = agents.speaker.represent(inputs.target_embeddings, mode);
  GenerationResult gen = agents.speaker.generate(r.r_s, mode, rng);
  r.messages = std::move(gen.messages);
  r.log_probs = gen.log_probs;
  r.entropies = gen.entropies;
  r.r_l_all = agents.listener.represent(inputs.candidate_embeddings, mode);
  Tensor msg_enc = agents.listener.encode(r.messages);
  r.distribution = listener_score(msg_enc, r.r_l_all, inputs.n_cand,
                                  agents.listener.temperature);
  std::vector<int> target_rows(static_cast<size_t>(inputs.batch()));
  for (int b = 0; b < inputs.batch(); ++b)
    target_rows[static_cast<size_t>(b)] =
        b * inputs.n_cand + inputs.target_index[static_cast<size_t>(b)];
  r.r_l_targets = gather_rows(r.r_l_all, target_rows);
  return r;
}

Tensor ce_loss(const Tensor& distribution, const std::vector<int>& target_index) {
  return neg(mean(log(pick(distribution, target_index))));
}

Tensor pairwise_cosine_tensor(const Tensor& x) {
  int n = x.dim(0);
  Tensor normalized = div(x, l2_norm_rows(x));
  Tensor sims = matmul(normalized, transpose(normalized));
  std::vector<int> upper;
  upper.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) upper.push_back(i * n + j);
  return gather_rows(reshape(sims, {n * n}), upper);
}

Tensor rsa_penalty(const Tensor& r_s, const Tensor& r_l_targets,
                   const Tensor& input_embeddings, const SoftRankConfig& cfg) {
  int n = r_s.dim(0);
  if (n < 3)
    throw std::invalid_argument("rsa_penalty: needs a batch of >= 3 items, got " +
                                std::to_string(n));
  if (r_l_targets.dim(0) != n || input_embeddings.dim(0) != n)
    throw std::invalid_argument("rsa_penalty: item counts differ across sets");
  Tensor sim_s = pairwise_cosine_tensor(r_s);
  Tensor sim_l = pairwise_cosine_tensor(r_l_targets);
  Tensor sim_i = pairwise_cosine_tensor(input_embeddings.detach());
  Tensor rsa_sl = soft_spearman(sim_s, sim_l, cfg);
  Tensor rsa_si = soft_spearman(sim_s, sim_i, cfg);
  Tensor rsa_li = soft_spearman(sim_l, sim_i, cfg);
  return add(add(sub(Tensor::scalar(1.0), rsa_sl), sub(Tensor::scalar(1.0), rsa_si)),
             sub(Tensor::scalar(1.0), rsa_li));
}

std::vector<double> round_rewards(const Tensor& distribution,
                                  const std::vector<int>& target_index,
                                  RewardKind kind) {
  int batch = distribution.dim(0);
  std::vector<double> rewards(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    int t = target_index[static_cast<size_t>(b)];
    if (kind == RewardKind::neg_ce) {
      rewards[static_cast<size_t>(b)] =
          std::log(std::max(distribution.at(b, t), 1e-12));
    } else {
      int best = 0;
      for (int c = 1; c < distribution.dim(1); ++c)
        if (distribution.at(b, c) > distribution.at(b, best)) best = c;
      rewards[static_cast<size_t>(b)] = best == t ? 1.0 : 0.0;
    }
  }
  return rewards;
}

PolicyLossResult speaker_policy_loss(const Tensor& log_probs, const Tensor& entropies,
                                     const std::vector<double>& rewards,
                                     BaselineState& baseline, double lambda_entropy) {
  int batch = log_probs.dim(0);
  if (static_cast<int>(rewards.size()) != batch)
    throw std::invalid_argument("speaker_policy_loss: reward count mismatch");
  std::vector<double> advantage(rewards);
  for (double& a : advantage) a -= baseline.mean;
  PolicyLossResult out;
  Tensor adv = Tensor::from({batch}, advantage);  // constant: rewards are data
  Tensor policy = neg(mean(mul(adv, log_probs)));
  Tensor entropy_bonus = mean(entropies);
  out.loss = sub(policy, mul(Tensor::scalar(lambda_entropy), entropy_bonus));
  out.policy_component = policy.item();
  out.entropy_component = entropy_bonus.item();
  baseline.update(mean_of(rewards));
  return out;
}

MetricsRecord train_epoch(const EmbeddingDataset& ds, AgentPair& agents,
                          Optimizers& opts, BaselineState& baseline,
                          const GameConfig& cfg, int batch_size, Rng& rng,
                          int epoch) {
  std::vector<std::vector<int>> batches = epoch_batches(ds, Split::train, batch_size, rng);
  std::vector<Tensor> speaker_params = agents.speaker_params();
  std::vector<Tensor> listener_params = agents.listener_params();

  double acc_sum = 0, ce_sum = 0, lrsa_sum = 0;
  double rsa_sl_sum = 0, rsa_si_sum = 0, rsa_li_sum = 0;
  std::vector<std::vector<double>> epoch_inputs;
  std::vector<Message> epoch_messages;

  for (const std::vector<int>& items : batches) {
    RoundBatchInputs rb = sample_round_batch(ds, Split::train, items, cfg.n_cand, rng);
    {
      Tape tape;
      RoundResult round = play_round(rb, agents, Mode::train, rng);
      Tensor ce = ce_loss(round.distribution, rb.target_index);
      Tensor total = ce;
      double lrsa_value = 0.0;
      if (cfg.loss == LossKind::ce_rsa) {
        Tensor penalty = rsa_penalty(round.r_s, round.r_l_targets,
                                     rb.target_embeddings, cfg.softrank);
        lrsa_value = penalty.item();
        total = add(total, penalty);
      }
      std::vector<double> rewards =
          round_rewards(round.distribution, rb.target_index, cfg.reward);
      PolicyLossResult policy = speaker_policy_loss(round.log_probs, round.entropies,
                                                    rewards, baseline,
                                                    cfg.lambda_entropy);
      total = add(total, policy.loss);
      tape.backward(total);

      acc_sum += accuracy(round.distribution, rb.target_index);
      ce_sum += ce.item();
      lrsa_sum += lrsa_value;
      auto rs = to_rows(round.r_s.detach());
      auto rl = to_rows(round.r_l_targets.detach());
      auto ri = to_rows(rb.target_embeddings);
      rsa_sl_sum += rsa(rs, rl);
      rsa_si_sum += rsa(rs, ri);
      rsa_li_sum += rsa(rl, ri);
      for (size_t i = 0; i < items.size(); ++i) {
        epoch_inputs.push_back(ri[i]);
        epoch_messages.push_back(round.messages[i]);
      }
    }
    opts.speaker.step();
    opts.listener.step();
    zero_grads(speaker_params);
    zero_grads(listener_params);
  }

  double nb = static_cast<double>(batches.size());
  MetricsRecord rec;
  rec.epoch = epoch;
  rec.split = "train";
  rec.accuracy = acc_sum / nb;
  rec.ce = ce_sum / nb;
  rec.l_rsa = lrsa_sum / nb;
  rec.rsa_sl = rsa_sl_sum / nb;
  rec.rsa_si = rsa_si_sum / nb;
  rec.rsa_li = rsa_li_sum / nb;
  rec.topsim = topsim(epoch_inputs, epoch_messages);
  rec.unique_messages = count_unique_messages(epoch_messages);
  return rec;
}

namespace {

MetricsRecord eval_rounds(const RoundBatchInputs& rb,
                          const std::vector<std::vector<double>>& item_inputs,
                          AgentPair& agents, const GameConfig& cfg, Rng& rng,
                          int epoch, const std::string& split_name) {
  RoundResult round = play_round(rb, agents, Mode::eval, rng);
  MetricsRecord rec;
  rec.epoch = epoch;
  rec.split = split_name;
  rec.accuracy = accuracy(round.distribution, rb.target_index);
  rec.ce = ce_loss(round.distribution, rb.target_index).item();
  auto rs = to_rows(round.r_s);
  auto rl = to_rows(round.r_l_targets);
  rec.rsa_sl = rsa(rs, rl);
  rec.rsa_si = rsa(rs, item_inputs);
  rec.rsa_li = rsa(rl, item_inputs);
  rec.topsim = topsim(item_inputs, round.messages);
  rec.unique_messages = count_unique_messages(round.messages);
  rec.l_rsa = cfg.loss == LossKind::ce_rsa
                  ? (1.0 - rec.rsa_sl) + (1.0 - rec.rsa_si) + (1.0 - rec.rsa_li)
                  : 0.0;
  return rec;
}

}  // namespace

MetricsRecord evaluate(const EmbeddingDataset& ds, Split split, AgentPair& agents,
                       const GameConfig& cfg, uint64_t eval_seed, int epoch) {
  Rng rng(eval_seed);
  const std::vector<int>& items = ds.indices(split);
  if (items.size() < 3)
    throw std::invalid_argument("evaluate: split needs >= 3 items for the metrics");
  RoundBatchInputs rb = sample_round_batch(ds, split, items, cfg.n_cand, rng);
  std::vector<std::vector<double>> inputs;
  inputs.reserve(items.size());
  for (int item : items) inputs.push_back(ds.embeddings[static_cast<size_t>(item)]);
  return eval_rounds(rb, inputs, agents, cfg, rng, epoch,
                     split == Split::train ? "train_eval" : "validation");
}

MetricsRecord evaluate_pairs(const FixedPairSet& pairs, AgentPair& agents,
                             const GameConfig& cfg, uint64_t eval_seed, int epoch,
                             const std::string& split_name) {
  Rng rng(eval_seed);
  RoundBatchInputs rb = pair_rounds(pairs, rng);
  std::vector<std::vector<double>> inputs;
  inputs.reserve(pairs.pairs.size() * 2);
  for (const auto& [a, b] : pairs.pairs) {
    inputs.push_back(a);
    inputs.push_back(b);
  }
  return eval_rounds(rb, inputs, agents, cfg, rng, epoch, split_name);
}

}  // namespace refgame
