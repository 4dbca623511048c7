// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "refgame/config.hpp"
#include "refgame/harness.hpp"
#include "refgame/logging.hpp"

using namespace refgame;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<Outcome> g_outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  g_outcomes.push_back({id, name, pass, detail, seconds});
  std::printf("criterion %2d [%s] %s: %s (%.1fs)\n", id, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---- criterion 1: gradient correctness --------------------------------------

void criterion_gradients() {
  auto start = Clock::now();
  Rng rng(1001);
  const double tol = 1e-5;
  const int instances = 50;
  double worst = 0.0;
  std::string worst_op = "none";
  auto track = [&](const char* op, double err) {
    if (err > worst) {
      worst = err;
      worst_op = op;
    }
  };

  for (int i = 0; i < instances; ++i) {
    {  // linear layer
      LinearLayer l = LinearLayer::init(4, 3, rng);
      Tensor x = oracle::random_tensor({5, 4}, rng);
      track("linear", oracle::max_grad_error(
                          [&]() {
                            Tensor y = l.forward(x);
                            return sum(mul(y, y));
                          },
                          {l.weight, l.bias, x}));
    }
    {  // batchnorm (train mode)
      BatchNormLayer bn = BatchNormLayer::init(3);
      bn.gamma = oracle::random_tensor({3}, rng, 0.5, 1.5);
      bn.beta = oracle::random_tensor({3}, rng, -0.5, 0.5);
      Tensor x = oracle::random_tensor({6, 3}, rng);
      track("batchnorm", oracle::max_grad_error(
                             [&]() {
                               BatchNormLayer local = bn;
                               Tensor y = local.forward(x, Mode::train);
                               return sum(mul(y, y));
                             },
                             {bn.gamma, bn.beta, x}));
    }
    {  // embedding lookup
      EmbeddingTable e = EmbeddingTable::init(6, 4, rng);
      std::vector<int> ids = {static_cast<int>(rng.below(6)), static_cast<int>(rng.below(6)), 5};
      track("embedding", oracle::max_grad_error(
                             [&]() {
                               Tensor rows = e.lookup(ids);
                               return sum(mul(rows, rows));
                             },
                             {e.table}));
    }
    {  // gru cell
      GruCell c = GruCell::init(3, 4, rng);
      Tensor x = oracle::random_tensor({3, 3}, rng);
      Tensor h = oracle::random_tensor({3, 4}, rng);
      std::vector<Tensor> inputs = {x, h};
      c.collect_params(inputs);
      track("gru", oracle::max_grad_error(
                       [&]() {
                         Tensor h2 = c.step(x, h);
                         return sum(mul(h2, h2));
                       },
                       inputs));
    }
    {  // soft ranks
      SoftRankConfig cfg;
      cfg.regularization_strength = rng.uniform(0.3, 2.0);
      Tensor v = oracle::random_tensor({9}, rng);
      Tensor w = oracle::random_tensor({9}, rng, -1, 1, false);
      track("soft_ranks",
            oracle::max_grad_error([&]() { return sum(mul(soft_ranks(v, cfg), w)); }, {v}));
    }
    {  // soft spearman
      SoftRankConfig cfg;
      Tensor a = oracle::random_tensor({8}, rng);
      Tensor b = oracle::random_tensor({8}, rng);
      track("soft_spearman",
            oracle::max_grad_error([&]() { return soft_spearman(a, b, cfg); }, {a, b}));
    }
    {  // rsa penalty
      SoftRankConfig cfg;
      Tensor inputs = oracle::random_tensor({6, 4}, rng, -2, 2, false);
      Tensor r_s = oracle::random_tensor({6, 5}, rng);
      Tensor r_l = oracle::random_tensor({6, 5}, rng);
      track("rsa_penalty",
            oracle::max_grad_error([&]() { return rsa_penalty(r_s, r_l, inputs, cfg); },
                                   {r_s, r_l}));
    }
    {  // ce loss through the softmax that produces the distribution
      Tensor logits = oracle::random_tensor({5, 3}, rng);
      std::vector<int> targets;
      for (int r = 0; r < 5; ++r) targets.push_back(rng.below(3));
      track("ce_loss", oracle::max_grad_error(
                           [&]() { return ce_loss(softmax(logits), targets); }, {logits}));
    }
  }
  double secs = seconds_since(start);
  bool pass = worst < tol && secs < 60.0;
  record(1, "gradient correctness", pass,
         "max rel err " + fmt3(worst) + " (worst: " + worst_op + ", tol 1e-5), " +
             std::to_string(instances) + " instances/op",
         secs);
}

// ---- criterion 2: ranking oracle ---------------------------------------------

void criterion_ranking_oracle() {
  auto start = Clock::now();
  Rng rng(1002);
  SoftRankConfig tight;
  tight.regularization_strength = 1e-6;
  double worst_rank = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + rng.below(63);  // n <= 64
    std::vector<double> vals = oracle::distinct_values(n, rng);
    Tensor soft = soft_ranks(Tensor::from({n}, vals), tight);
    std::vector<double> hard = hard_ranks(vals);
    for (int i = 0; i < n; ++i)
      worst_rank = std::max(worst_rank,
                            std::abs(soft.at(i) - hard[static_cast<size_t>(i)]));
  }
  SoftRankConfig spearman_cfg;
  spearman_cfg.regularization_strength = 1e-4;
  double worst_rho = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + rng.below(30);
    std::vector<double> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    for (double& x : a) x = rng.uniform(-2, 2);
    for (double& x : b) x = rng.uniform(-2, 2);
    double soft =
        soft_spearman(Tensor::from({n}, a), Tensor::from({n}, b), spearman_cfg).item();
    worst_rho = std::max(worst_rho, std::abs(soft - hard_spearman(a, b)));
  }
  double secs = seconds_since(start);
  bool pass = worst_rank < 1e-3 && worst_rho < 0.01 && secs < 60.0;
  record(2, "ranking oracle", pass,
         "soft-vs-hard rank sup " + fmt3(worst_rank) + " (tol 1e-3), spearman dev " +
             fmt3(worst_rho) + " (tol 0.01)",
         secs);
}

// ---- criterion 3: metric oracles -----------------------------------------------

double brute_rsa(const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y) {
  std::vector<double> sx, sy;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j) {
      sx.push_back(oracle::cosine(x[i], x[j]));
      sy.push_back(oracle::cosine(y[i], y[j]));
    }
  return oracle::brute_spearman(sx, sy);
}

int brute_lev(const std::vector<int>& a, const std::vector<int>& b) {
  // full quadratic table, no row reuse
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

void criterion_metric_oracles() {
  auto start = Clock::now();
  Rng rng(1003);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + rng.below(6);  // n <= 8
    std::vector<std::vector<double>> x(static_cast<size_t>(n), std::vector<double>(4)),
        y(static_cast<size_t>(n), std::vector<double>(3));
    for (auto& row : x)
      for (double& v : row) v = rng.uniform(-2, 2);
    for (auto& row : y)
      for (double& v : row) v = rng.uniform(-2, 2);
    worst = std::max(worst, std::abs(rsa(x, y) - brute_rsa(x, y)));

    std::vector<Message> msgs;
    for (int i = 0; i < n; ++i) {
      std::vector<int> sym;
      int len = 1 + rng.below(4);
      for (int k = 0; k < len; ++k) sym.push_back(1 + rng.below(5));
      sym.push_back(0);
      msgs.push_back(Message{std::move(sym)});
    }
    // brute topsim: cosine distances vs full-table edit distances
    std::vector<double> din, dmsg;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        din.push_back(1.0 - oracle::cosine(x[static_cast<size_t>(i)], x[static_cast<size_t>(j)]));
        dmsg.push_back(brute_lev(msgs[static_cast<size_t>(i)].effective_symbols(),
                                 msgs[static_cast<size_t>(j)].effective_symbols()));
      }
    bool degenerate = true;
    for (double v : dmsg)
      if (v != dmsg[0]) degenerate = false;
    if (!degenerate)
      worst = std::max(worst,
                       std::abs(topsim(x, msgs) - oracle::brute_spearman(din, dmsg)));
  }
  double invariance = 0.0;
  {
    Rng qr(1004);
    for (int trial = 0; trial < 20; ++trial) {
      int n = 5, d = 4;
      std::vector<std::vector<double>> x(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(d)));
      for (auto& row : x)
        for (double& v : row) v = qr.uniform(-2, 2);
      invariance = std::max(invariance, std::abs(rsa(x, x) - 1.0));
      // Householder reflection as an exactly orthogonal transform
      std::vector<double> u(static_cast<size_t>(d));
      double norm = 0;
      for (double& v : u) {
        v = qr.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (double& v : u) v /= norm;
      std::vector<std::vector<double>> hx = x;
      for (int i = 0; i < n; ++i) {
        double dot = 0;
        for (int k = 0; k < d; ++k) dot += x[static_cast<size_t>(i)][static_cast<size_t>(k)] * u[static_cast<size_t>(k)];
        for (int k = 0; k < d; ++k)
          hx[static_cast<size_t>(i)][static_cast<size_t>(k)] -= 2.0 * dot * u[static_cast<size_t>(k)];
      }
      invariance = std::max(invariance, std::abs(rsa(x, hx) - 1.0));
    }
  }
  double secs = seconds_since(start);
  bool pass = worst < 1e-12 && invariance < 1e-9;
  record(3, "metric oracles", pass,
         "max brute-force dev " + fmt3(worst) + " (tol 1e-12), isometry dev " +
             fmt3(invariance) + " (tol 1e-9)",
         secs);
}

// ---- criteria 4-10 fixtures: trained runs ---------------------------------------

struct TrainedSet {
  // first five seeds (the default list 16,22,41,56,67) back criteria 4-6 and
  // 9-10; all ten matched pairs feed criterion 7's mean-curve statistic
  std::vector<SeedRunResult> ce;
  std::vector<SeedRunResult> ce_rsa;
  size_t default_count = 5;
  double max_seed_seconds = 0.0;
};

TrainedSet train_default_runs() {
  ExperimentConfig cfg;  // the shipped defaults are the criterion-4 config
  std::vector<uint64_t> seeds = {16, 22, 41, 56, 67, 77, 14, 78, 99, 23};
  EmbeddingDataset ds = build_dataset(cfg);
  TrainedSet out;
  out.ce.resize(seeds.size());
  out.ce_rsa.resize(seeds.size());
  std::mutex mu;
  std::vector<std::function<void()>> tasks;
  for (size_t i = 0; i < seeds.size(); ++i) {
    tasks.push_back([&, i]() {
      auto t0 = Clock::now();
      ExperimentConfig c = cfg;
      c.loss = LossKind::ce;
      SeedRunResult r = run_seed(c, ds, seeds[i]);
      std::lock_guard<std::mutex> lock(mu);
      out.ce[i] = std::move(r);
      out.max_seed_seconds = std::max(out.max_seed_seconds, seconds_since(t0));
    });
    tasks.push_back([&, i]() {
      ExperimentConfig c = cfg;
      c.loss = LossKind::ce_rsa;
      SeedRunResult r = run_seed(c, ds, seeds[i]);
      std::lock_guard<std::mutex> lock(mu);
      out.ce_rsa[i] = std::move(r);
    });
  }
  run_parallel(std::move(tasks), 4);
  return out;
}

const MetricsRecord* validation_row(const SeedRunResult& r, int epoch) {
  for (const MetricsRecord& row : r.history)
    if (row.epoch == epoch && row.split == "validation") return &row;
  return nullptr;
}

void criterion_learnability(const TrainedSet& runs) {
  auto start = Clock::now();
  int hits = 0;
  std::ostringstream detail;
  for (size_t i = 0; i < runs.default_count; ++i) {
    const SeedRunResult& r = runs.ce[i];
    bool ok = r.max_train_accuracy >= 0.9 && r.max_validation_accuracy >= 0.75;
    hits += ok ? 1 : 0;
    detail << " s" << r.seed << "(tr " << fmt3(r.max_train_accuracy) << ", va "
           << fmt3(r.max_validation_accuracy) << (ok ? ")" : " MISS)");
  }
  bool pass = hits >= 4 && runs.max_seed_seconds < 300.0;
  record(4, "learnability", pass,
         std::to_string(hits) + "/5 seeds reach train>=0.9 & val>=0.75;" + detail.str() +
             "; slowest seed " + fmt3(runs.max_seed_seconds) + "s (<300s)",
         seconds_since(start));
}

void criterion_alignment_trend(const TrainedSet& runs) {
  auto start = Clock::now();
  int hits = 0;
  std::ostringstream detail;
  for (size_t i = 0; i < runs.default_count; ++i) {
    const SeedRunResult& r = runs.ce[i];
    const MetricsRecord* e1 = validation_row(r, 1);
    const MetricsRecord* eF = validation_row(r, 30);
    bool ok = e1 != nullptr && eF != nullptr && eF->rsa_sl > e1->rsa_sl &&
              eF->rsa_si < e1->rsa_si && eF->rsa_li < e1->rsa_li;
    hits += ok ? 1 : 0;
    if (e1 && eF)
      detail << " s" << r.seed << "(sl " << fmt3(e1->rsa_sl) << "->" << fmt3(eF->rsa_sl)
             << ", si " << fmt3(e1->rsa_si) << "->" << fmt3(eF->rsa_si) << ", li "
             << fmt3(e1->rsa_li) << "->" << fmt3(eF->rsa_li) << (ok ? ")" : " MISS)");
  }
  record(5, "alignment-problem trend", hits >= 4,
         std::to_string(hits) + "/5 seeds show sl up & si down & li down;" + detail.str(),
         seconds_since(start));
}

void criterion_mitigation(const TrainedSet& runs) {
  auto start = Clock::now();
  int hits = 0;
  std::ostringstream detail;
  for (size_t i = 0; i < runs.default_count; ++i) {
    const MetricsRecord& f = runs.ce_rsa[i].final_validation;
    double gap = std::abs(f.accuracy - runs.ce[i].final_validation.accuracy);
    bool ok = f.rsa_sl >= 0.8 && f.rsa_si >= 0.8 && f.rsa_li >= 0.8 && gap <= 0.05;
    hits += ok ? 1 : 0;
    detail << " s" << runs.ce_rsa[i].seed << "(sl " << fmt3(f.rsa_sl) << ", si "
           << fmt3(f.rsa_si) << ", li " << fmt3(f.rsa_li) << ", dacc " << fmt3(gap)
           << (ok ? ")" : " MISS)");
  }
  record(6, "alignment mitigation", hits >= 4,
         std::to_string(hits) + "/5 seeds have all RSA>=0.8 & val within 0.05 of ce;" +
             detail.str(),
         seconds_since(start));
}

void criterion_non_interaction(const TrainedSet& runs) {
  auto start = Clock::now();
  // structural: the penalty's gradient w.r.t. the speaker's output projection
  // is exactly zero
  ExperimentConfig cfg;
  EmbeddingDataset ds = build_dataset(cfg);
  Rng init(derive_seed(99, 1));
  AgentPair agents = AgentPair::init(ds.dim(), cfg.hidden_speaker, cfg.hidden_listener,
                                     cfg.vocab, cfg.embed_dim, cfg.max_len,
                                     cfg.temperature, false, init);
  Rng g(derive_seed(99, 2));
  std::vector<int> items(ds.train_indices.begin(), ds.train_indices.begin() + 16);
  RoundBatchInputs rb = sample_round_batch(ds, Split::train, items, 2, g);
  zero_grads(agents.speaker_params());
  {
    Tape tape;
    RoundResult round = play_round(rb, agents, Mode::train, g);
    Tensor penalty =
        rsa_penalty(round.r_s, round.r_l_targets, rb.target_embeddings, cfg.game().softrank);
    tape.backward(penalty);
  }
  double proj_grad = 0.0;
  agents.speaker.output_proj.weight.grad();
  agents.speaker.output_proj.bias.grad();
  for (double v : agents.speaker.output_proj.weight.grad())
    proj_grad = std::max(proj_grad, std::abs(v));
  for (double v : agents.speaker.output_proj.bias.grad())
    proj_grad = std::max(proj_grad, std::abs(v));

  // matched-seed ce curves (seed means, the Figure-9-style comparison)
  // diverge by < 10% relative mean absolute difference
  double count = static_cast<double>(runs.ce.size());
  std::map<int, double> mean_a, mean_b;
  for (size_t i = 0; i < runs.ce.size(); ++i) {
    for (const MetricsRecord& row : runs.ce[i].history)
      if (row.split == "train") mean_a[row.epoch] += row.ce / count;
    for (const MetricsRecord& row : runs.ce_rsa[i].history)
      if (row.split == "train") mean_b[row.epoch] += row.ce / count;
  }
  double mad = 0.0;
  int n = 0;
  for (const auto& [epoch, a] : mean_a) {
    mad += std::abs(a - mean_b[epoch]) / std::max(a, 1e-12);
    ++n;
  }
  mad /= std::max(n, 1);
  bool pass = proj_grad == 0.0 && mad < 0.10;
  record(7, "non-interaction", pass,
         "output-projection grad from L_RSA = " + fmt3(proj_grad) +
             " (exactly 0), ce relative MAD over " + std::to_string(runs.ce.size()) +
             " matched seed pairs " + fmt3(mad) + " (<0.10)",
         seconds_since(start));
}

void criterion_correlation(const TrainedSet& runs) {
  auto start = Clock::now();
  struct CellSpec {
    int vocab;
    int max_len;
  };
  // capacity-spanning mix; (10,5) comes from the criterion-4 runs
  std::vector<CellSpec> cells = {{3, 2}, {10, 2}, {40, 2}, {10, 10}, {10, 50}, {40, 50}};
  std::vector<uint64_t> seeds = {16, 22, 41, 56, 67};

  ExperimentConfig base;
  EmbeddingDataset ds = build_dataset(base);
  std::vector<RunPoint> points;
  std::mutex mu;
  for (size_t i = 0; i < runs.default_count; ++i) {  // reuse the (V10, L5) ce runs
    const MetricsRecord& f = runs.ce[i].final_validation;
    points.push_back({f.topsim, f.rsa_sl, f.accuracy});
  }
  std::vector<std::function<void()>> tasks;
  for (const CellSpec& cell : cells)
    for (uint64_t seed : seeds)
      tasks.push_back([&, cell, seed]() {
        ExperimentConfig c = base;
        c.vocab = cell.vocab;
        c.max_len = cell.max_len;
        SeedRunResult r = run_seed(c, ds, seed);
        const MetricsRecord& f = r.final_validation;
        std::lock_guard<std::mutex> lock(mu);
        points.push_back({f.topsim, f.rsa_sl, f.accuracy});
      });
  run_parallel(std::move(tasks), 4);

  std::vector<double> ts, sl;
  for (const RunPoint& p : points) {
    ts.push_back(p.topsim);
    sl.push_back(p.rsa_sl);
  }
  double r = pearson(ts, sl);
  double p = pearson_p_value(r, static_cast<int>(points.size()));
  double secs = seconds_since(start);
  bool pass = points.size() >= 15 && r > 0.0 && p < 0.05 && secs < 45.0 * 60.0;
  record(8, "topsim-alignment correlation", pass,
         std::to_string(points.size()) + " ce runs over 7 V/L cells: r = " + fmt3(r) +
             ", p = " + fmt3(p) + " (need r>0, p<0.05)",
         secs);
}

void criterion_noise_communication(const TrainedSet& runs) {
  auto start = Clock::now();
  double mean = 0;
  for (size_t i = 0; i < runs.default_count; ++i) mean += runs.ce[i].final_noise.accuracy;
  mean /= static_cast<double>(runs.default_count);
  record(9, "above-chance noise communication", mean > 0.55,
         "mean noise-pair accuracy " + fmt3(mean) + " over 5 ce seeds (need >0.55, chance 0.5)",
         seconds_since(start));
}

void criterion_wino_difficulty(const TrainedSet& runs) {
  auto start = Clock::now();
  auto gap_of = [&](const std::vector<SeedRunResult>& rs) {
    double gap = 0;
    for (size_t i = 0; i < runs.default_count; ++i)
      gap += rs[i].final_validation.accuracy - rs[i].final_wino->accuracy;
    return gap / static_cast<double>(runs.default_count);
  };
  double gap_ce = gap_of(runs.ce);
  double gap_rsa = gap_of(runs.ce_rsa);
  bool pass = gap_ce >= 0.05 && gap_rsa >= 0.05;
  record(10, "winoground-analog difficulty", pass,
         "mean val-wino gap: ce " + fmt3(gap_ce) + ", ce_rsa " + fmt3(gap_rsa) +
             " (need >=0.05 for both)",
         seconds_since(start));
}

void criterion_sweep_mechanics() {
  auto start = Clock::now();
  SweepGrid full;
  bool enumeration = full.cells() == 42;

  std::string dir = "acceptance_sweep_smoke";
  fs::remove_all(dir);
  ExperimentConfig base;
  base.seeds = {16};
  base.out_dir = dir;
  base.workers = 4;
  SweepGrid smoke;
  smoke.vocab_sizes = {3, 5};
  smoke.message_lengths = {2, 3};
  run_sweep(base, smoke, {LossKind::ce, LossKind::ce_rsa});
  bool complete = true;
  for (const std::string& loss : {"ce", "ce_rsa"}) {
    std::ifstream heat(dir + "/heatmap_accuracy_" + loss + ".csv");
    int lines = 0;
    std::string line;
    while (std::getline(heat, line)) ++lines;
    complete = complete && lines == 1 + smoke.cells();
    complete = complete && fs::exists(dir + "/heatmap_topsim_" + loss + ".csv") &&
               fs::exists(dir + "/rsa_trends_" + loss + ".csv");
  }
  std::ifstream summary_in(dir + "/sweep_summary.json");
  std::stringstream ss;
  ss << summary_in.rdbuf();
  bool no_failures = ss.str().find("\"failures\": []") != std::string::npos;
  fs::remove_all(dir);
  double secs = seconds_since(start);
  bool pass = enumeration && complete && no_failures && secs < 600.0;
  record(11, "sweep mechanics", pass,
         std::string("default grid = 42 cells/loss; 2x2 smoke ") +
             (complete && no_failures ? "complete" : "INCOMPLETE") + " in " + fmt3(secs) +
             "s (<600s)",
         secs);
}

void criterion_determinism() {
  auto start = Clock::now();
  auto read_file = [](const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  std::string da = "acceptance_det_a", db = "acceptance_det_b";
  fs::remove_all(da);
  fs::remove_all(db);
  ExperimentConfig cfg;
  cfg.seeds = {16};
  cfg.out_dir = da;
  run_experiment(cfg);
  cfg.out_dir = db;
  run_experiment(cfg);
  bool identical =
      read_file(da + "/seed_16/metrics.csv") == read_file(db + "/seed_16/metrics.csv");
  fs::remove_all(da);
  fs::remove_all(db);
  record(12, "determinism", identical,
         identical ? "identical config+seed twice gives byte-identical metrics CSVs"
                   : "metrics CSVs DIFFER across identical runs",
         seconds_since(start));
}

}  // namespace

int main() {
  warnings_enabled() = false;  // degenerate-variance warnings are expected noise here
  auto start = Clock::now();

  criterion_gradients();
  criterion_ranking_oracle();
  criterion_metric_oracles();

  std::printf("training shared fixtures: 10 ce + 10 ce_rsa default-config seeds...\n");
  std::fflush(stdout);
  TrainedSet runs = train_default_runs();

  criterion_learnability(runs);
  criterion_alignment_trend(runs);
  criterion_mitigation(runs);
  criterion_non_interaction(runs);
  criterion_correlation(runs);
  criterion_noise_communication(runs);
  criterion_wino_difficulty(runs);
  criterion_sweep_mechanics();
  criterion_determinism();

  int failures = 0;
  for (const Outcome& o : g_outcomes) failures += o.pass ? 0 : 1;
  std::printf("acceptance: %d/%zu criteria passed in %.1fs\n",
              static_cast<int>(g_outcomes.size()) - failures, g_outcomes.size(),
              seconds_since(start));
  return failures;
}
