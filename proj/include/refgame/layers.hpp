#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refgame/rng.hpp"
#include "refgame/tensor.hpp"

namespace refgame {

enum class Mode { train, eval };

struct LinearLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  // Weights uniform in +-1/sqrt(in_dim), biases zero.
  static LinearLayer init(int in_dim, int out_dim, Rng& rng);

  int in_dim() const { return weight.dim(1); }
  int out_dim() const { return weight.dim(0); }

  // y = x W^T + b for x of shape [batch x in].
  Tensor forward(const Tensor& x) const;

  void collect_params(std::vector<Tensor>& out) const;
};

struct BatchNormLayer {
  Tensor gamma;  // [features]
  Tensor beta;   // [features]
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  static BatchNormLayer init(int features);

  int features() const { return gamma.dim(0); }

  // Train mode normalizes by batch statistics (batch >= 2) and folds them
  // into the running stats; eval mode normalizes by running stats, which stay
  // off the tape.
  Tensor forward(const Tensor& x, Mode mode);

  void collect_params(std::vector<Tensor>& out) const;
};

struct EmbeddingTable {
  Tensor table;  // [vocab x dim]

  // Rows uniform in +-0.1.
  static EmbeddingTable init(int vocab, int dim, Rng& rng);

  int vocab() const { return table.dim(0); }
  int dim() const { return table.dim(1); }

  // Row lookup; out-of-range ids throw.
  Tensor lookup(const std::vector<int>& ids) const;

  void collect_params(std::vector<Tensor>& out) const;
};

// Single GRU cell:
//   z = sigmoid(x Wz^T + h Uz^T + bz)
//   r = sigmoid(x Wr^T + h Ur^T + br)
//   hc = tanh(x Wh^T + (r*h) Uh^T + bh)
//   h' = (1-z)*h + z*hc
struct GruCell {
  Tensor w_z, w_r, w_h;  // [hidden x input]
  Tensor u_z, u_r, u_h;  // [hidden x hidden]
  Tensor b_z, b_r, b_h;  // [hidden]

  static GruCell init(int input, int hidden, Rng& rng);

  int input_dim() const { return w_z.dim(1); }
  int hidden_dim() const { return w_z.dim(0); }

  Tensor step(const Tensor& x, const Tensor& h) const;

  void collect_params(std::vector<Tensor>& out) const;
};

// Bias-corrected Adam over a fixed parameter list, applied in place.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  // One update; every registered parameter must have a populated gradient.
  void step();

  int64_t steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int64_t t_ = 0;
  double lr_, beta1_, beta2_, epsilon_;
};

// Flat, ordered list of named f64 arrays; round-trips bit-exactly.
struct Checkpoint {
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> values;
  };
  std::vector<Entry> entries;

  void add(std::string name, Shape shape, std::vector<double> values);
  void add(const std::string& name, const Tensor& t);
  const Entry& find(const std::string& name) const;
  void load_into(const std::string& name, Tensor& t) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace refgame
