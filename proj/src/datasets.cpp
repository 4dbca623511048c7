#include "refgame/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace refgame {

namespace {

Tensor rows_to_tensor(const std::vector<std::vector<double>>& rows,
                      const std::vector<int>& which) {
  int d = static_cast<int>(rows[0].size());
  std::vector<double> flat;
  flat.reserve(which.size() * static_cast<size_t>(d));
  for (int idx : which)
    flat.insert(flat.end(), rows[static_cast<size_t>(idx)].begin(),
                rows[static_cast<size_t>(idx)].end());
  return Tensor::from({static_cast<int>(which.size()), d}, std::move(flat));
}

}  // namespace

void EmbeddingDataset::build_split(uint64_t split_seed) {
  train_indices.clear();
  validation_indices.clear();
  std::vector<std::vector<int>> items_of(category_names.size());
  for (int i = 0; i < size(); ++i)
    items_of[static_cast<size_t>(categories[static_cast<size_t>(i)])].push_back(i);
  Rng rng(split_seed);
  for (size_t c = 0; c < items_of.size(); ++c) {
    std::vector<int>& items = items_of[c];
    rng.shuffle(items);
    int count = static_cast<int>(items.size());
    int val = static_cast<int>(std::lround(0.2 * count));
    if (val == 1) val = 0;  // a singleton validation category cannot form rounds
    int train = count - val;
    if (train < 2)
      throw std::invalid_argument(
          "dataset: category '" + category_names[c] + "' has " +
          std::to_string(count) + " items; needs >= 2 in train for distractors");
    for (int i = 0; i < train; ++i) train_indices.push_back(items[static_cast<size_t>(i)]);
    for (int i = train; i < count; ++i)
      validation_indices.push_back(items[static_cast<size_t>(i)]);
  }
  std::sort(train_indices.begin(), train_indices.end());
  std::sort(validation_indices.begin(), validation_indices.end());
  train_by_category_.assign(category_names.size(), {});
  val_by_category_.assign(category_names.size(), {});
  for (int i : train_indices)
    train_by_category_[static_cast<size_t>(categories[static_cast<size_t>(i)])].push_back(i);
  for (int i : validation_indices)
    val_by_category_[static_cast<size_t>(categories[static_cast<size_t>(i)])].push_back(i);
}

// ---- file format ------------------------------------------------------------

void save_embeddings(const std::string& path,
                     const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("save_embeddings: no rows");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_embeddings: cannot open " + path);
  uint32_t n = static_cast<uint32_t>(rows.size());
  uint32_t d = static_cast<uint32_t>(rows[0].size());
  os.write("EMB1", 4);
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&d), 4);
  for (const auto& row : rows) {
    if (row.size() != d)
      throw std::invalid_argument("save_embeddings: ragged rows");
    for (double v : row) {
      float f = static_cast<float>(v);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!os) throw std::runtime_error("save_embeddings: write failed for " + path);
}

void save_labels(const std::string& path, const std::vector<std::string>& labels) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_labels: cannot open " + path);
  os << "index,category\n";
  for (size_t i = 0; i < labels.size(); ++i) os << i << "," << labels[i] << "\n";
}

EmbeddingDataset load_embeddings(const std::string& embeddings_path,
                                 const std::string& labels_path,
                                 uint64_t split_seed) {
  std::ifstream is(embeddings_path, std::ios::binary);
  if (!is) throw std::runtime_error("load_embeddings: cannot open " + embeddings_path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "EMB1", 4) != 0)
    throw std::runtime_error("load_embeddings: bad magic in " + embeddings_path +
                             " (expected EMB1)");
  uint32_t n = 0, d = 0;
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&d), 4);
  if (!is || n == 0 || d == 0)
    throw std::runtime_error("load_embeddings: bad header in " + embeddings_path);
  EmbeddingDataset ds;
  ds.embeddings.assign(n, std::vector<double>(d));
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < d; ++j) {
      float f = 0;
      is.read(reinterpret_cast<char*>(&f), 4);
      ds.embeddings[i][j] = static_cast<double>(f);
    }
  if (!is)
    throw std::runtime_error("load_embeddings: truncated data in " + embeddings_path +
                             " (expected " + std::to_string(n) + "x" + std::to_string(d) +
                             " floats)");

  std::ifstream ls(labels_path);
  if (!ls) throw std::runtime_error("load_embeddings: cannot open " + labels_path);
  std::string line;
  if (!std::getline(ls, line) || line != "index,category")
    throw std::runtime_error("load_embeddings: labels header must be 'index,category' in " +
                             labels_path);
  std::map<std::string, int> category_ids;
  uint32_t row = 0;
  while (std::getline(ls, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("load_embeddings: malformed labels row '" + line + "'");
    long idx = std::stol(line.substr(0, comma));
    if (idx != static_cast<long>(row))
      throw std::runtime_error("load_embeddings: labels must list indices 0..n-1 in order, got " +
                               std::to_string(idx) + " at row " + std::to_string(row));
    std::string cat = line.substr(comma + 1);
    auto it = category_ids.find(cat);
    int id;
    if (it == category_ids.end()) {
      id = static_cast<int>(ds.category_names.size());
      category_ids[cat] = id;
      ds.category_names.push_back(cat);
    } else {
      id = it->second;
    }
    ds.categories.push_back(id);
    ++row;
  }
  if (row != n)
    throw std::runtime_error("load_embeddings: " + std::to_string(n) +
                             " embeddings but " + std::to_string(row) + " labels");
  ds.build_split(split_seed);
  return ds;
}

// ---- synthetic data -----------------------------------------------------------

namespace {

// Fixed random projection [d x k*v]; entries N(0, 1/sqrt(d)) so projected
// one-hot tuples have O(sqrt(k)) norm.
std::vector<std::vector<double>> make_projection(const SyntheticSpec& spec) {
  Rng prng(spec.projection_seed);
  int kv = spec.n_attributes * spec.n_values;
  std::vector<std::vector<double>> p(static_cast<size_t>(spec.embed_dim),
                                     std::vector<double>(static_cast<size_t>(kv)));
  double scale = 1.0 / std::sqrt(static_cast<double>(spec.embed_dim));
  for (auto& prow : p)
    for (double& x : prow) x = prng.normal(0.0, scale);
  return p;
}

std::vector<double> project_tuple(const SyntheticSpec& spec,
                                  const std::vector<std::vector<double>>& proj,
                                  const std::vector<int>& attrs, double noise,
                                  Rng& rng) {
  std::vector<double> e(static_cast<size_t>(spec.embed_dim), 0.0);
  for (int a = 0; a < spec.n_attributes; ++a) {
    int hot = a * spec.n_values + attrs[static_cast<size_t>(a)];
    for (int i = 0; i < spec.embed_dim; ++i)
      e[static_cast<size_t>(i)] += proj[static_cast<size_t>(i)][static_cast<size_t>(hot)];
  }
  if (noise > 0.0)
    for (double& x : e) x += rng.normal(0.0, noise);
  return e;
}

void check_spec(const SyntheticSpec& spec) {
  if (spec.n_attributes < 2 || spec.n_values < 2)
    throw std::invalid_argument("synthetic: need k >= 2 attributes and v >= 2 values, got k=" +
                                std::to_string(spec.n_attributes) + " v=" +
                                std::to_string(spec.n_values));
  if (spec.items_per_category < 1 || spec.embed_dim < 1)
    throw std::invalid_argument("synthetic: bad items_per_category or embed_dim");
}

}  // namespace

EmbeddingDataset generate_synthetic(const SyntheticSpec& spec, Rng& rng,
                                    uint64_t split_seed) {
  check_spec(spec);
  auto proj = make_projection(spec);
  EmbeddingDataset ds;
  for (int c = 0; c < spec.n_values; ++c)
    ds.category_names.push_back("cat" + std::to_string(c));
  for (int c = 0; c < spec.n_values; ++c) {
    for (int item = 0; item < spec.items_per_category; ++item) {
      std::vector<int> attrs(static_cast<size_t>(spec.n_attributes));
      attrs[0] = c;  // category is the value of attribute 0
      for (int a = 1; a < spec.n_attributes; ++a) attrs[static_cast<size_t>(a)] = rng.below(spec.n_values);
      ds.embeddings.push_back(project_tuple(spec, proj, attrs, spec.noise_scale, rng));
      ds.categories.push_back(c);
      ds.attributes.push_back(std::move(attrs));
    }
  }
  ds.build_split(split_seed);
  return ds;
}

FixedPairSet noise_pairs(int n, int d, Rng& rng) {
  FixedPairSet out;
  out.pairs.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> a(static_cast<size_t>(d)), b(static_cast<size_t>(d));
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = rng.normal();
    out.pairs.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

FixedPairSet winoground_analog(const SyntheticSpec& spec, int n_pairs, Rng& rng) {
  check_spec(spec);
  auto proj = make_projection(spec);
  FixedPairSet out;
  out.pairs.reserve(static_cast<size_t>(n_pairs));
  for (int p = 0; p < n_pairs; ++p) {
    std::vector<int> attrs(static_cast<size_t>(spec.n_attributes));
    std::vector<std::pair<int, int>> swappable;
    // need at least one position pair with differing values
    do {
      for (int a = 0; a < spec.n_attributes; ++a) attrs[static_cast<size_t>(a)] = rng.below(spec.n_values);
      swappable.clear();
      for (int i = 0; i < spec.n_attributes; ++i)
        for (int j = i + 1; j < spec.n_attributes; ++j)
          if (attrs[static_cast<size_t>(i)] != attrs[static_cast<size_t>(j)])
            swappable.emplace_back(i, j);
    } while (swappable.empty());
    auto [i, j] = swappable[static_cast<size_t>(rng.below(static_cast<int>(swappable.size())))];
    std::vector<int> partner = attrs;
    std::swap(partner[static_cast<size_t>(i)], partner[static_cast<size_t>(j)]);
    // both items share one context draw: the pair differs only in composition
    std::vector<double> a = project_tuple(spec, proj, attrs, 0.0, rng);
    std::vector<double> b = project_tuple(spec, proj, partner, 0.0, rng);
    for (int c = 0; c < spec.embed_dim; ++c) {
      double shared = rng.normal(0.0, spec.noise_scale);
      a[static_cast<size_t>(c)] += shared;
      b[static_cast<size_t>(c)] += shared;
    }
    out.pairs.emplace_back(std::move(a), std::move(b));
    out.attribute_pairs.emplace_back(std::move(attrs), std::move(partner));
  }
  return out;
}

// ---- round sampling -----------------------------------------------------------

std::vector<std::vector<int>> epoch_batches(const EmbeddingDataset& ds, Split split,
                                            int batch_size, Rng& rng) {
  std::vector<int> pool = ds.indices(split);
  if (batch_size < 1) throw std::invalid_argument("epoch_batches: bad batch size");
  if (static_cast<int>(pool.size()) < batch_size)
    throw std::invalid_argument("epoch_batches: split has " +
                                std::to_string(pool.size()) +
                                " items, fewer than one batch of " +
                                std::to_string(batch_size));
  rng.shuffle(pool);
  std::vector<std::vector<int>> batches;
  for (size_t start = 0; start + static_cast<size_t>(batch_size) <= pool.size();
       start += static_cast<size_t>(batch_size))
    batches.emplace_back(pool.begin() + static_cast<long>(start),
                         pool.begin() + static_cast<long>(start + static_cast<size_t>(batch_size)));
  return batches;
}

RoundBatchInputs sample_round_batch(const EmbeddingDataset& ds, Split split,
                                    const std::vector<int>& batch_items, int n_cand,
                                    Rng& rng) {
  if (n_cand < 2) throw std::invalid_argument("sample_round_batch: need >= 2 candidates");
  RoundBatchInputs rb;
  rb.n_cand = n_cand;
  rb.target_items = batch_items;
  const auto& pools = ds.by_category(split);
  std::vector<int> cand_rows;
  cand_rows.reserve(batch_items.size() * static_cast<size_t>(n_cand));
  for (int target : batch_items) {
    const std::vector<int>& pool = pools[static_cast<size_t>(ds.categories[static_cast<size_t>(target)])];
    if (static_cast<int>(pool.size()) < n_cand)
      throw std::runtime_error(
          "sample_round_batch: category '" +
          ds.category_names[static_cast<size_t>(ds.categories[static_cast<size_t>(target)])] +
          "' exhausted: " + std::to_string(pool.size()) + " items for " +
          std::to_string(n_cand) + " candidates");
    // distractors uniform without replacement from the category, minus target
    std::vector<int> options;
    options.reserve(pool.size() - 1);
    for (int item : pool)
      if (item != target) options.push_back(item);
    std::vector<int> row;
    row.push_back(target);
    for (int k = 0; k < n_cand - 1; ++k) {
      int pickat = rng.below(static_cast<int>(options.size()));
      row.push_back(options[static_cast<size_t>(pickat)]);
      options.erase(options.begin() + pickat);
    }
    rng.shuffle(row);
    int tpos = static_cast<int>(std::find(row.begin(), row.end(), target) - row.begin());
    rb.target_index.push_back(tpos);
    cand_rows.insert(cand_rows.end(), row.begin(), row.end());
  }
  rb.target_embeddings = rows_to_tensor(ds.embeddings, batch_items);
  rb.candidate_embeddings = rows_to_tensor(ds.embeddings, cand_rows);
  return rb;
}

RoundBatchInputs pair_rounds(const FixedPairSet& pairs, Rng& rng) {
  if (pairs.pairs.empty()) throw std::invalid_argument("pair_rounds: empty pair set");
  RoundBatchInputs rb;
  rb.n_cand = 2;
  int d = static_cast<int>(pairs.pairs[0].first.size());
  std::vector<double> targets_flat, cands_flat;
  for (const auto& [a, b] : pairs.pairs) {
    for (int dir = 0; dir < 2; ++dir) {
      const std::vector<double>& target = dir == 0 ? a : b;
      const std::vector<double>& other = dir == 0 ? b : a;
      targets_flat.insert(targets_flat.end(), target.begin(), target.end());
      int tpos = rng.below(2);
      rb.target_index.push_back(tpos);
      if (tpos == 0) {
        cands_flat.insert(cands_flat.end(), target.begin(), target.end());
        cands_flat.insert(cands_flat.end(), other.begin(), other.end());
      } else {
        cands_flat.insert(cands_flat.end(), other.begin(), other.end());
        cands_flat.insert(cands_flat.end(), target.begin(), target.end());
      }
    }
  }
  int rows = static_cast<int>(rb.target_index.size());
  rb.target_embeddings = Tensor::from({rows, d}, std::move(targets_flat));
  rb.candidate_embeddings = Tensor::from({rows * 2, d}, std::move(cands_flat));
  return rb;
}

}  // namespace refgame
