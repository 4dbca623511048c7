#include "refgame/layers.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace refgame {

namespace {

std::vector<double> uniform_fill(int count, double lo, double hi, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(count));
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

// ---- LinearLayer -----------------------------------------------------------

LinearLayer LinearLayer::init(int in_dim, int out_dim, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  LinearLayer l;
  l.weight = Tensor::param({out_dim, in_dim},
                           uniform_fill(out_dim * in_dim, -bound, bound, rng));
  l.bias = Tensor::param({out_dim}, std::vector<double>(static_cast<size_t>(out_dim), 0.0));
  return l;
}

Tensor LinearLayer::forward(const Tensor& x) const {
  return add(matmul(x, transpose(weight)), bias);
}

void LinearLayer::collect_params(std::vector<Tensor>& out) const {
  out.push_back(weight);
  out.push_back(bias);
}

// ---- BatchNormLayer --------------------------------------------------------

BatchNormLayer BatchNormLayer::init(int features) {
  BatchNormLayer l;
  l.gamma = Tensor::param({features}, std::vector<double>(static_cast<size_t>(features), 1.0));
  l.beta = Tensor::param({features}, std::vector<double>(static_cast<size_t>(features), 0.0));
  l.running_mean.assign(static_cast<size_t>(features), 0.0);
  l.running_var.assign(static_cast<size_t>(features), 1.0);
  return l;
}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode) {
  if (x.rank() != 2 || x.dim(1) != features())
    throw std::invalid_argument("batchnorm: input " + shape_str(x.shape()) +
                                " does not match " +
                                std::to_string(features()) + " features");
  int batch = x.dim(0);
  int f = features();
  if (mode == Mode::train) {
    if (batch < 2)
      throw std::invalid_argument(
          "batchnorm: train-mode batch of " + std::to_string(batch) +
          " has undefined variance (need >= 2)");
    Tensor mu = mean(x, 0);                    // [1 x f]
    Tensor centered = sub(x, mu);
    Tensor var = mean(mul(centered, centered), 0);
    Tensor xhat = div(centered, sqrt(var + epsilon));
    Tensor y = add(mul(xhat, gamma), beta);
    // Fold batch stats into running stats (data only, never on the tape).
    // Running variance uses the unbiased estimator.
    double unbias = static_cast<double>(batch) / (batch - 1);
    for (int j = 0; j < f; ++j) {
      running_mean[static_cast<size_t>(j)] =
          (1.0 - momentum) * running_mean[static_cast<size_t>(j)] + momentum * mu.at(j);
      running_var[static_cast<size_t>(j)] =
          (1.0 - momentum) * running_var[static_cast<size_t>(j)] +
          momentum * var.at(j) * unbias;
    }
    return y;
  }
  std::vector<double> denom(static_cast<size_t>(f));
  for (int j = 0; j < f; ++j)
    denom[static_cast<size_t>(j)] = std::sqrt(running_var[static_cast<size_t>(j)] + epsilon);
  Tensor rm = Tensor::from({f}, running_mean);
  Tensor rd = Tensor::from({f}, denom);
  return add(mul(div(sub(x, rm), rd), gamma), beta);
}

void BatchNormLayer::collect_params(std::vector<Tensor>& out) const {
  out.push_back(gamma);
  out.push_back(beta);
}

// ---- EmbeddingTable --------------------------------------------------------

EmbeddingTable EmbeddingTable::init(int vocab, int dim, Rng& rng) {
  EmbeddingTable e;
  e.table = Tensor::param({vocab, dim}, uniform_fill(vocab * dim, -0.1, 0.1, rng));
  return e;
}

Tensor EmbeddingTable::lookup(const std::vector<int>& ids) const {
  return gather_rows(table, ids);
}

void EmbeddingTable::collect_params(std::vector<Tensor>& out) const {
  out.push_back(table);
}

// ---- GruCell ----------------------------------------------------------------

GruCell GruCell::init(int input, int hidden, Rng& rng) {
  double wb = 1.0 / std::sqrt(static_cast<double>(input));
  double ub = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto w = [&]() {
    return Tensor::param({hidden, input}, uniform_fill(hidden * input, -wb, wb, rng));
  };
  auto u = [&]() {
    return Tensor::param({hidden, hidden}, uniform_fill(hidden * hidden, -ub, ub, rng));
  };
  auto b = [&]() {
    return Tensor::param({hidden}, std::vector<double>(static_cast<size_t>(hidden), 0.0));
  };
  GruCell c;
  c.w_z = w(); c.w_r = w(); c.w_h = w();
  c.u_z = u(); c.u_r = u(); c.u_h = u();
  c.b_z = b(); c.b_r = b(); c.b_h = b();
  return c;
}

Tensor GruCell::step(const Tensor& x, const Tensor& h) const {
  Tensor z = sigmoid(add(add(matmul(x, transpose(w_z)), matmul(h, transpose(u_z))), b_z));
  Tensor r = sigmoid(add(add(matmul(x, transpose(w_r)), matmul(h, transpose(u_r))), b_r));
  Tensor hc = tanh(add(add(matmul(x, transpose(w_h)), matmul(mul(r, h), transpose(u_h))), b_h));
  return add(mul(sub(Tensor::scalar(1.0), z), h), mul(z, hc));
}

void GruCell::collect_params(std::vector<Tensor>& out) const {
  for (const Tensor* t : {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h})
    out.push_back(*t);
}

// ---- Adam -------------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2,
           double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      epsilon_(epsilon) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(static_cast<size_t>(params_[i].size()), 0.0);
    v_[i].assign(static_cast<size_t>(params_[i].size()), 0.0);
  }
}

void Adam::step() {
  for (const Tensor& p : params_)
    if (!p.has_grad())
      throw std::invalid_argument("adam: parameter of shape " +
                                  shape_str(p.shape()) +
                                  " has no gradient populated");
  ++t_;
  double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const auto& g = p.grad();
    double* w = p.data();
    for (size_t j = 0; j < g.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      double mhat = m_[i][j] / c1;
      double vhat = v_[i][j] / c2;
      w[j] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
    }
  }
}

// ---- Checkpoint -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'G', 'C', '1'};

void write_u32(std::ofstream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void Checkpoint::add(std::string name, Shape shape, std::vector<double> values) {
  if (shape_size(shape) != static_cast<int>(values.size()))
    throw std::invalid_argument("checkpoint: shape " + shape_str(shape) +
                                " does not match value count for " + name);
  entries.push_back({std::move(name), std::move(shape), std::move(values)});
}

void Checkpoint::add(const std::string& name, const Tensor& t) {
  add(name, t.shape(), t.vec());
}

const Checkpoint::Entry& Checkpoint::find(const std::string& name) const {
  for (const Entry& e : entries)
    if (e.name == name) return e;
  throw std::out_of_range("checkpoint: no entry named " + name);
}

void Checkpoint::load_into(const std::string& name, Tensor& t) const {
  const Entry& e = find(name);
  if (e.shape != t.shape())
    throw std::invalid_argument("checkpoint: entry " + name + " has shape " +
                                shape_str(e.shape) + ", expected " +
                                shape_str(t.shape()));
  std::copy(e.values.begin(), e.values.end(), t.data());
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_u32(os, 1);  // version
  write_u32(os, static_cast<uint32_t>(entries.size()));
  for (const Entry& e : entries) {
    write_u32(os, static_cast<uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_u32(os, static_cast<uint32_t>(e.shape.size()));
    for (int d : e.shape) write_u32(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char*>(e.values.data()),
             static_cast<std::streamsize>(e.values.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = read_u32(is);
  if (version != 1)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  uint32_t count = read_u32(is);
  Checkpoint ck;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t rank = read_u32(is);
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(read_u32(is));
    std::vector<double> values(static_cast<size_t>(shape_size(shape)));
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
    ck.entries.push_back({std::move(name), std::move(shape), std::move(values)});
  }
  return ck;
}

}  // namespace refgame
