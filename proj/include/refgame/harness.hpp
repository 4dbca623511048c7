#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "refgame/config.hpp"
#include "refgame/game.hpp"

namespace refgame {

// One seed's complete run: every CSV row plus the final out-of-distribution
// evaluations.
struct SeedRunResult {
  uint64_t seed = 0;
  std::vector<MetricsRecord> history;  // epoch-0 validation, then train+validation per epoch
  MetricsRecord final_validation;
  MetricsRecord final_noise;
  std::optional<MetricsRecord> final_wino;  // absent for file-backed datasets
  double max_train_accuracy = 0.0;
  double max_validation_accuracy = 0.0;
};

struct ExperimentResult {
  std::string dir;
  std::vector<SeedRunResult> seeds;
};

EmbeddingDataset build_dataset(const ExperimentConfig& cfg);

// Trains one seed in memory; when out_agents is given, the trained pair is
// copied there (for checkpointing or further evaluation).
SeedRunResult run_seed(const ExperimentConfig& cfg, const EmbeddingDataset& ds,
                       uint64_t seed, AgentPair* out_agents = nullptr);

// Runs every seed (bounded worker pool), writing per-seed metrics.csv,
// checkpoint.bin and summary.json under <out>/seed_<s>/, plus the resolved
// config echo and an experiment summary. Seeds whose summary.json already
// exists are loaded back instead of re-run.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SweepGrid {
  std::vector<int> vocab_sizes = {3, 5, 10, 20, 40, 50, 100};
  std::vector<int> message_lengths = {2, 3, 5, 10, 50, 100};
  int cells() const {
    return static_cast<int>(vocab_sizes.size() * message_lengths.size());
  }
};

// 42 (V, L) cells per loss type; failures are recorded in the sweep summary
// and the sweep continues. Emits accuracy/topsim heatmap CSVs and per-epoch
// RSA trend CSVs per loss.
std::string run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                      const std::vector<LossKind>& losses);

// Matched-seed ce vs ce+rsa pairs; emits per-epoch curves for both and the
// relative mean-absolute ce divergence per seed.
std::string run_ablation(const ExperimentConfig& cfg);

// Correlation tables, learning-curve CSVs and per-dataset bar summaries over
// completed run directories (>= 3 runs for correlations). Optional SVG
// renderings.
std::string write_report(const std::vector<std::string>& run_dirs,
                         const std::string& out_dir, bool svg);

struct ImportOptions {
  std::string embeddings_csv;
  std::string labels_csv;
  std::string out_dir;
  bool coco_subset = false;  // categories > 100 items, then 100 per supercategory
  uint64_t seed = 1;
};

// CSV -> EMB1 + labels converter; with coco_subset applies the documented
// subset recipe (requires a supercategory column).
void import_embeddings(const ImportOptions& opts);

// Bounded worker pool; tasks must be independent.
void run_parallel(std::vector<std::function<void()>> tasks, int workers);

// metrics.csv helpers (schema:
// epoch,split,accuracy,rsa_sl,rsa_si,rsa_li,topsim,unique_messages,ce,l_rsa)
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& rows);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

}  // namespace refgame
