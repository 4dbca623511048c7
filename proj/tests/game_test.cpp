#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "refgame/game.hpp"

using namespace refgame;

namespace {

EmbeddingDataset default_dataset(uint64_t seed = 5, int per_category = 32) {
  SyntheticSpec spec;
  spec.items_per_category = per_category;
  Rng rng(seed);
  return generate_synthetic(spec, rng, seed);
}

AgentPair make_agents(const EmbeddingDataset& ds, Rng& rng, int vocab = 10,
                      int max_len = 5, int hidden = 32) {
  return AgentPair::init(ds.dim(), hidden, hidden, vocab, /*embed_dim=*/16,
                         max_len, /*temperature=*/0.1, /*reembed=*/false, rng);
}

}  // namespace

TEST_CASE("untrained agents sit at chance on two candidates") {
  EmbeddingDataset ds = default_dataset(11, 64);  // 256 items
  Rng rng(401);
  AgentPair agents = make_agents(ds, rng);
  Rng game_rng(403);
  double correct = 0;
  int total = 0;
  for (int rep = 0; rep < 6; ++rep) {
    auto batches = epoch_batches(ds, Split::train, 64, game_rng);
    for (const auto& items : batches) {
      RoundBatchInputs rb = sample_round_batch(ds, Split::train, items, 2, game_rng);
      RoundResult round = play_round(rb, agents, Mode::eval, game_rng);
      correct += accuracy(round.distribution, rb.target_index) * rb.batch();
      total += rb.batch();
    }
  }
  CHECK(total >= 1000);
  CHECK(std::abs(correct / total - 0.5) < 0.05);
}

TEST_CASE("identical candidates give a uniform distribution") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(405);
  AgentPair agents = make_agents(ds, rng);
  RoundBatchInputs rb;
  rb.n_cand = 3;
  std::vector<double> row = ds.embeddings[0];
  std::vector<double> targets, cands;
  for (int b = 0; b < 4; ++b) {
    targets.insert(targets.end(), row.begin(), row.end());
    for (int c = 0; c < 3; ++c) cands.insert(cands.end(), row.begin(), row.end());
    rb.target_index.push_back(b % 3);
  }
  rb.target_embeddings = Tensor::from({4, static_cast<int>(row.size())}, targets);
  rb.candidate_embeddings = Tensor::from({12, static_cast<int>(row.size())}, cands);
  Rng g(1);
  RoundResult round = play_round(rb, agents, Mode::eval, g);
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 3; ++c)
      CHECK(round.distribution.at(b, c) == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("deterministic eval round replays identically") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(407);
  AgentPair agents = make_agents(ds, rng);
  Rng s1(9), s2(9);
  RoundBatchInputs rb1 = sample_round_batch(ds, Split::train, {0, 1, 2, 3}, 2, s1);
  RoundBatchInputs rb2 = sample_round_batch(ds, Split::train, {0, 1, 2, 3}, 2, s2);
  Rng g1(5), g2(5);
  RoundResult a = play_round(rb1, agents, Mode::eval, g1);
  RoundResult b = play_round(rb2, agents, Mode::eval, g2);
  CHECK(a.distribution.vec() == b.distribution.vec());
}

TEST_CASE("ce loss: exact values") {
  Tensor sure = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  CHECK(ce_loss(sure, {0, 1}).item() == doctest::Approx(0.0).epsilon(1e-9));
  Tensor uniform = Tensor::from({2, 2}, {0.5, 0.5, 0.5, 0.5});
  CHECK(ce_loss(uniform, {0, 1}).item() == doctest::Approx(std::log(2.0)));
  Tensor mixed = Tensor::from({2, 2}, {1.0, 0.0, 0.5, 0.5});
  CHECK(ce_loss(mixed, {0, 0}).item() == doctest::Approx(0.5 * std::log(2.0)));
  // floor keeps zero probabilities finite
  Tensor zerop = Tensor::from({1, 2}, {0.0, 1.0});
  CHECK(std::isfinite(ce_loss(zerop, {0}).item()));
}

TEST_CASE("rsa penalty: aligned representations score near zero") {
  Rng rng(409);
  int n = 8, d = 6;
  Tensor inputs = oracle::random_tensor({n, d}, rng, -2, 2, false);
  Tensor r_s = Tensor::param(inputs.shape(), inputs.vec());
  Tensor r_l = Tensor::param(inputs.shape(), inputs.vec());
  SoftRankConfig cfg;
  Tensor penalty = rsa_penalty(r_s, r_l, inputs, cfg);
  CHECK(penalty.item() == doctest::Approx(0.0).epsilon(5e-2));
}

TEST_CASE("rsa penalty: similarity-reversed configuration matches the hard oracle") {
  // 2-D directions chosen so the representation similarity ranks exactly
  // reverse the input similarity ranks; both agents share the reversal, so
  // the achievable worst case here is (1-1) + (1-(-1)) + (1-(-1)) = 4.
  auto at_angles = [](std::vector<double> degs) {
    std::vector<double> flat;
    for (double deg : degs) {
      double rad = deg * M_PI / 180.0;
      flat.push_back(std::cos(rad));
      flat.push_back(std::sin(rad));
    }
    return Tensor::from({static_cast<int>(degs.size()), 2}, flat);
  };
  Tensor inputs = at_angles({0, 10, 30});   // gaps 10, 30, 20 -> sims rank 3,1,2
  Tensor reps = at_angles({0, 40, 10});     // gaps 40, 10, 30 -> sims rank 1,3,2
  Tensor r_s = Tensor::param(reps.shape(), reps.vec());
  Tensor r_l = Tensor::param(reps.shape(), reps.vec());
  SoftRankConfig cfg;
  cfg.regularization_strength = 1e-4;
  double penalty = rsa_penalty(r_s, r_l, inputs, cfg).item();
  // hard oracle over the same similarity vectors
  auto rows = [](const Tensor& t) {
    std::vector<std::vector<double>> out;
    for (int i = 0; i < t.dim(0); ++i) {
      std::vector<double> row;
      for (int j = 0; j < t.dim(1); ++j) row.push_back(t.at(i, j));
      out.push_back(row);
    }
    return out;
  };
  double expect = (1.0 - rsa(rows(reps), rows(reps))) +
                  (1.0 - rsa(rows(reps), rows(inputs))) +
                  (1.0 - rsa(rows(reps), rows(inputs)));
  CHECK(expect == doctest::Approx(4.0));
  CHECK(penalty == doctest::Approx(expect).epsilon(0.03));
}

TEST_CASE("rsa penalty: matches hard-RSA sum at small epsilon") {
  Rng rng(411);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 6 + trial;
    Tensor inputs = oracle::random_tensor({n, 5}, rng, -2, 2, false);
    Tensor r_s = oracle::random_tensor({n, 4}, rng);
    Tensor r_l = oracle::random_tensor({n, 4}, rng);
    SoftRankConfig cfg;
    cfg.regularization_strength = 1e-4;
    double penalty = rsa_penalty(r_s, r_l, inputs, cfg).item();
    auto rows = [](const Tensor& t) {
      std::vector<std::vector<double>> out;
      for (int i = 0; i < t.dim(0); ++i) {
        std::vector<double> row;
        for (int j = 0; j < t.dim(1); ++j) row.push_back(t.at(i, j));
        out.push_back(row);
      }
      return out;
    };
    double expect = (1.0 - rsa(rows(r_s), rows(r_l))) +
                    (1.0 - rsa(rows(r_s), rows(inputs))) +
                    (1.0 - rsa(rows(r_l), rows(inputs)));
    CHECK(penalty == doctest::Approx(expect).epsilon(0.03));
  }
}

TEST_CASE("rsa penalty: rejects tiny batches and passes finite differences") {
  Rng rng(413);
  Tensor inputs = oracle::random_tensor({2, 4}, rng, -2, 2, false);
  Tensor r = oracle::random_tensor({2, 4}, rng);
  SoftRankConfig cfg;
  CHECK_THROWS_AS(rsa_penalty(r, r, inputs, cfg), std::invalid_argument);

  Tensor inputs6 = oracle::random_tensor({6, 4}, rng, -2, 2, false);
  Tensor r_s = oracle::random_tensor({6, 5}, rng);
  Tensor r_l = oracle::random_tensor({6, 5}, rng);
  double err = oracle::max_grad_error(
      [&]() { return rsa_penalty(r_s, r_l, inputs6, cfg); }, {r_s, r_l});
  CHECK(err < 1e-5);
}

TEST_CASE("policy loss: zero advantage leaves only the entropy term") {
  Tensor lp = Tensor::from({3}, {-1.0, -2.0, -0.5});
  Tensor ent = Tensor::from({3}, {0.3, 0.6, 0.9});
  BaselineState baseline;
  baseline.mean = 1.0;
  baseline.count = 1;
  PolicyLossResult out = speaker_policy_loss(lp, ent, {1.0, 1.0, 1.0}, baseline, 0.1);
  CHECK(out.policy_component == doctest::Approx(0.0));
  CHECK(out.loss.item() == doctest::Approx(-0.1 * 0.6));
  CHECK(baseline.mean == doctest::Approx(1.0));
  CHECK(baseline.count == 2);
}

TEST_CASE("policy loss: equal rewards vanish after baseline convergence") {
  Tensor lp = Tensor::from({2}, {-1.0, -2.0});
  Tensor ent = Tensor::from({2}, {0.5, 0.5});
  BaselineState baseline;
  speaker_policy_loss(lp, ent, {0.7, 0.7}, baseline, 0.0);
  PolicyLossResult second = speaker_policy_loss(lp, ent, {0.7, 0.7}, baseline, 0.0);
  CHECK(second.loss.item() == doctest::Approx(0.0));
}

TEST_CASE("baseline tracks the arithmetic mean of batch-mean rewards") {
  BaselineState baseline;
  Rng rng(417);
  double sum = 0;
  for (int k = 1; k <= 50; ++k) {
    Tensor lp = Tensor::from({2}, {-1.0, -1.0});
    Tensor ent = Tensor::from({2}, {0.0, 0.0});
    double r1 = rng.uniform(-1, 1), r2 = rng.uniform(-1, 1);
    speaker_policy_loss(lp, ent, {r1, r2}, baseline, 0.0);
    sum += 0.5 * (r1 + r2);
    CHECK(baseline.mean == doctest::Approx(sum / k).epsilon(1e-12));
  }
}

TEST_CASE("policy loss: rewards stay detached from the listener") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(419);
  AgentPair agents = make_agents(ds, rng);
  Rng g(421);
  RoundBatchInputs rb = sample_round_batch(
      ds, Split::train, std::vector<int>(ds.train_indices.begin(), ds.train_indices.begin() + 8),
      2, g);
  zero_grads(agents.listener_params());
  zero_grads(agents.speaker_params());
  BaselineState baseline;
  {
    Tape tape;
    RoundResult round = play_round(rb, agents, Mode::train, g);
    std::vector<double> rewards = round_rewards(round.distribution, rb.target_index,
                                                RewardKind::neg_ce);
    PolicyLossResult policy = speaker_policy_loss(round.log_probs, round.entropies,
                                                  rewards, baseline, 0.1);
    tape.backward(policy.loss);
  }
  for (const Tensor& p : agents.listener_params()) {
    if (!p.has_grad()) continue;
    for (double v : p.grad()) CHECK(v == 0.0);
  }
  bool speaker_touched = false;
  for (const Tensor& p : agents.speaker_params())
    if (p.has_grad())
      for (double v : p.grad()) speaker_touched = speaker_touched || v != 0.0;
  CHECK(speaker_touched);
}

TEST_CASE("rsa penalty never reaches the speaker's output projection") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(423);
  AgentPair agents = make_agents(ds, rng);
  Rng g(425);
  RoundBatchInputs rb = sample_round_batch(
      ds, Split::train, std::vector<int>(ds.train_indices.begin(), ds.train_indices.begin() + 8),
      2, g);
  zero_grads(agents.speaker_params());
  {
    Tape tape;
    RoundResult round = play_round(rb, agents, Mode::train, g);
    SoftRankConfig cfg;
    Tensor penalty = rsa_penalty(round.r_s, round.r_l_targets, rb.target_embeddings, cfg);
    tape.backward(penalty);
  }
  agents.speaker.output_proj.weight.grad();
  agents.speaker.output_proj.bias.grad();
  for (double v : agents.speaker.output_proj.weight.grad()) CHECK(v == 0.0);
  for (double v : agents.speaker.output_proj.bias.grad()) CHECK(v == 0.0);
  // while the representation layer is reached
  bool repr_touched = false;
  for (double v : agents.speaker.repr_layer.weight.grad()) repr_touched |= v != 0.0;
  CHECK(repr_touched);
}

TEST_CASE("two-armed bandit converges under REINFORCE") {
  // single-symbol messages; reward 1 when symbol 1 is emitted, else 0
  Rng rng(427);
  SpeakerAgent s = SpeakerAgent::init(4, 8, 3, 4, /*max_len=*/1, false, rng);
  std::vector<Tensor> params = s.params();
  Adam opt(params, 0.01);
  BaselineState baseline;
  Tensor input = oracle::random_tensor({16, 4}, rng, -1, 1, false);
  Rng g(429);
  for (int step = 0; step < 300; ++step) {
    Tape tape;
    Tensor r_s = s.represent(input, Mode::train);
    GenerationResult gen = s.generate(r_s, Mode::train, g);
    std::vector<double> rewards;
    for (const Message& m : gen.messages)
      rewards.push_back(m.symbols[0] == 1 ? 1.0 : 0.0);
    PolicyLossResult policy =
        speaker_policy_loss(gen.log_probs, gen.entropies, rewards, baseline, 0.01);
    tape.backward(policy.loss);
    opt.step();
    zero_grads(params);
  }
  // empirical frequency of the rewarded arm
  int hits = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    GenerationResult gen = s.generate(s.represent(input, Mode::eval), Mode::train, g);
    for (const Message& m : gen.messages)
      if (m.symbols[0] == 1) ++hits;
  }
  CHECK(static_cast<double>(hits) / (trials * 16) > 0.95);
}

TEST_CASE("train epoch: zero learning rates leave parameters bit-identical") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(431);
  AgentPair agents = make_agents(ds, rng);
  std::vector<std::vector<double>> before;
  for (const Tensor& p : agents.speaker_params()) before.push_back(p.vec());
  for (const Tensor& p : agents.listener_params()) before.push_back(p.vec());
  Optimizers opts{Adam(agents.speaker_params(), 0.0), Adam(agents.listener_params(), 0.0)};
  BaselineState baseline;
  GameConfig cfg;
  Rng g(433);
  train_epoch(ds, agents, opts, baseline, cfg, 16, g, 1);
  std::vector<std::vector<double>> after;
  for (const Tensor& p : agents.speaker_params()) after.push_back(p.vec());
  for (const Tensor& p : agents.listener_params()) after.push_back(p.vec());
  CHECK(before == after);
}

TEST_CASE("train epoch: undersized split is rejected") {
  EmbeddingDataset ds = default_dataset(7, 4);  // 16 items
  Rng rng(437);
  AgentPair agents = make_agents(ds, rng);
  Optimizers opts{Adam(agents.speaker_params(), 0.01), Adam(agents.listener_params(), 0.001)};
  BaselineState baseline;
  GameConfig cfg;
  Rng g(439);
  CHECK_THROWS_AS(train_epoch(ds, agents, opts, baseline, cfg, 32, g, 1),
                  std::invalid_argument);
}

TEST_CASE("evaluate: deterministic and consistent with the metrics module") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(441);
  AgentPair agents = make_agents(ds, rng);
  GameConfig cfg;
  MetricsRecord a = evaluate(ds, Split::validation, agents, cfg, 77, 3);
  MetricsRecord b = evaluate(ds, Split::validation, agents, cfg, 77, 3);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.rsa_sl == b.rsa_sl);
  CHECK(a.topsim == b.topsim);
  CHECK(a.unique_messages == b.unique_messages);
  CHECK(a.split == "validation");

  // cross-module consistency: recompute rsa_sl from dumped representations
  const std::vector<int>& items = ds.indices(Split::validation);
  Rng replay(77);
  RoundBatchInputs rb = sample_round_batch(ds, Split::validation, items, cfg.n_cand, replay);
  RoundResult round = play_round(rb, agents, Mode::eval, replay);
  std::vector<std::vector<double>> rs, rl;
  for (int i = 0; i < round.r_s.dim(0); ++i) {
    std::vector<double> srow, lrow;
    for (int j = 0; j < round.r_s.dim(1); ++j) srow.push_back(round.r_s.at(i, j));
    for (int j = 0; j < round.r_l_targets.dim(1); ++j) lrow.push_back(round.r_l_targets.at(i, j));
    rs.push_back(srow);
    rl.push_back(lrow);
  }
  CHECK(a.rsa_sl == doctest::Approx(rsa(rs, rl)).epsilon(1e-12));
}

TEST_CASE("evaluate: untrained agents at chance on noise pairs") {
  EmbeddingDataset ds = default_dataset();
  Rng rng(443);
  AgentPair agents = make_agents(ds, rng);
  // warm the batchnorm running stats with one pass so eval mode is sane
  Optimizers opts{Adam(agents.speaker_params(), 0.0), Adam(agents.listener_params(), 0.0)};
  BaselineState baseline;
  GameConfig cfg;
  Rng g(445);
  train_epoch(ds, agents, opts, baseline, cfg, 16, g, 1);
  Rng noise_rng(447);
  FixedPairSet pairs = noise_pairs(500, ds.dim(), noise_rng);
  MetricsRecord rec = evaluate_pairs(pairs, agents, cfg, 7, 1, "noise");
  CHECK(std::abs(rec.accuracy - 0.5) < 0.05);
  CHECK(rec.split == "noise");
}
