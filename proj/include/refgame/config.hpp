#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refgame/datasets.hpp"
#include "refgame/game.hpp"

namespace refgame {

// Fully-resolved experiment configuration. Defaults are the desk-scale
// setup; paper_params() swaps in the published best-performing parameters.
struct ExperimentConfig {
  std::string name = "refgame";
  LossKind loss = LossKind::ce;
  RewardKind reward = RewardKind::neg_ce;

  int vocab = 10;        // V, including EOS
  int max_len = 5;       // L
  int hidden_speaker = 64;
  int hidden_listener = 64;
  int embed_dim = 50;
  double temperature = 0.1;
  bool speaker_reembed = false;

  double lr_speaker = 0.01;
  double lr_listener = 0.001;
  int batch_size = 32;
  int epochs = 30;
  double lambda_entropy = 0.1;
  double softrank_epsilon = 0.1;
  bool softrank_standardize = true;
  int n_cand = 2;

  // dataset: synthetic unless an embeddings file is given
  std::string embeddings_path;
  std::string labels_path;
  SyntheticSpec synthetic;
  uint64_t data_seed = 909;

  int noise_pair_count = 200;
  int wino_pair_count = 200;

  std::vector<uint64_t> seeds = {16, 22, 41, 56, 67};
  std::string out_dir;
  int workers = 1;
  bool svg = false;

  // Table-3 values: V=40, L=2, hidden 768 & 768, embedding 50, batch 32,
  // Adam 0.01 & 0.001, temperature 0.1, and the 15 published seeds.
  static ExperimentConfig paper_params();

  GameConfig game() const;

  // Throws std::invalid_argument on the first violated constraint.
  void validate() const;

  // Round-trippable key-value echo of every field.
  std::string to_toml() const;

  // `key = value` lines, # comments, unknown keys rejected.
  static ExperimentConfig from_toml_text(const std::string& text);
  static ExperimentConfig from_toml_file(const std::string& path);

  // Applies one `key=value` override (CLI flags win over the file).
  void set(const std::string& key, const std::string& value);
};

std::string loss_name(LossKind k);
LossKind loss_from_name(const std::string& name);

}  // namespace refgame
