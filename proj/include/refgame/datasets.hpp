#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "refgame/rng.hpp"
#include "refgame/tensor.hpp"

namespace refgame {

enum class Split { train, validation };

// Immutable after construction; shareable read-only across runs.
struct EmbeddingDataset {
  std::vector<std::vector<double>> embeddings;  // n rows of dim d
  std::vector<int> categories;                  // per item
  std::vector<std::string> category_names;      // by category id
  std::vector<int> train_indices;
  std::vector<int> validation_indices;
  // Ground-truth attribute tuples for synthetic data; empty for file data.
  std::vector<std::vector<int>> attributes;

  int size() const { return static_cast<int>(embeddings.size()); }
  int dim() const { return embeddings.empty() ? 0 : static_cast<int>(embeddings[0].size()); }
  int num_categories() const { return static_cast<int>(category_names.size()); }

  const std::vector<int>& indices(Split s) const {
    return s == Split::train ? train_indices : validation_indices;
  }
  const std::vector<std::vector<int>>& by_category(Split s) const {
    return s == Split::train ? train_by_category_ : val_by_category_;
  }

  // Builds the stratified 80/20 split (seeded shuffle within each category)
  // and the per-split category pools. Categories whose validation share
  // would be a single unusable item keep it in train. Every category must
  // end with >= 2 train items.
  void build_split(uint64_t split_seed);

 private:
  std::vector<std::vector<int>> train_by_category_;
  std::vector<std::vector<int>> val_by_category_;
};

struct SyntheticSpec {
  int n_attributes = 4;  // k >= 2
  int n_values = 4;      // v >= 2; category = value of attribute 0
  int items_per_category = 384;
  int embed_dim = 64;
  double noise_scale = 0.3;
  uint64_t projection_seed = 9001;
};

// Fixed evaluation pairs; each pair is visited in both directions.
struct FixedPairSet {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  // Ground-truth attribute tuples when the pairs are synthetic.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> attribute_pairs;
  int size() const { return static_cast<int>(pairs.size()); }
};

// Embedding file: magic "EMB1", u32 LE n, u32 LE d, then n*d f32 LE
// row-major. Labels file: CSV with header `index,category`, rows 0..n-1 in
// order.
EmbeddingDataset load_embeddings(const std::string& embeddings_path,
                                 const std::string& labels_path,
                                 uint64_t split_seed);
void save_embeddings(const std::string& path,
                     const std::vector<std::vector<double>>& rows);
void save_labels(const std::string& path, const std::vector<std::string>& labels);

// Attribute-value items embedded through a fixed seeded random projection of
// their concatenated one-hot encoding, plus Gaussian noise.
EmbeddingDataset generate_synthetic(const SyntheticSpec& spec, Rng& rng,
                                    uint64_t split_seed);

// n fixed pairs of d-dimensional standard-normal vectors.
FixedPairSet noise_pairs(int n, int d, Rng& rng);

// Pairs sharing an attribute-value multiset but differing in composition:
// the partner swaps the values at two attribute positions. Projected through
// the same fixed projection as generate_synthetic(spec, ...).
FixedPairSet winoground_analog(const SyntheticSpec& spec, int n_pairs, Rng& rng);

// One shuffled pass over a split, chunked into full batches (a trailing
// partial batch is dropped). Rejected when no full batch fits.
std::vector<std::vector<int>> epoch_batches(const EmbeddingDataset& ds, Split split,
                                            int batch_size, Rng& rng);

// Inputs of one round: targets plus per-row shuffled candidates whose
// distractors are drawn uniformly from the target's category (within the
// same split), excluding the target itself.
struct RoundBatchInputs {
  std::vector<int> target_items;  // dataset indices (empty for pair rounds)
  Tensor target_embeddings;       // [B x d], constant
  Tensor candidate_embeddings;    // [B*n_cand x d], constant
  std::vector<int> target_index;  // candidate position per row
  int n_cand = 2;
  int batch() const { return static_cast<int>(target_index.size()); }
};

RoundBatchInputs sample_round_batch(const EmbeddingDataset& ds, Split split,
                                    const std::vector<int>& batch_items,
                                    int n_cand, Rng& rng);

// Both directions of every fixed pair as 2-candidate rounds.
RoundBatchInputs pair_rounds(const FixedPairSet& pairs, Rng& rng);

}  // namespace refgame
