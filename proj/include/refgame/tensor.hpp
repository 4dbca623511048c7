#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace refgame {

// Dense 64-bit tensor participating in reverse-mode differentiation.
//
// Tensors are value types with a shared payload: copies alias the same data
// and gradient buffers. Ops never mutate their inputs; the only in-place
// writers are the optimizer and zero_grads(). A Tape records every op whose
// inputs are tracked; backward() walks it once in reverse.

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int shape_size(const Shape& s);

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> data);
  static Tensor scalar(double value);  // rank-0
  // Leaf that accumulates gradient (a trainable parameter).
  static Tensor param(Shape shape, std::vector<double> data);

  bool defined() const { return p_ != nullptr; }
  const Shape& shape() const { return p_->shape; }
  int rank() const { return static_cast<int>(p_->shape.size()); }
  int size() const { return static_cast<int>(p_->data.size()); }
  int dim(int i) const { return p_->shape[static_cast<size_t>(i)]; }

  double* data() { return p_->data.data(); }
  const double* data() const { return p_->data.data(); }
  std::vector<double>& vec() { return p_->data; }
  const std::vector<double>& vec() const { return p_->data; }
  double item() const;  // scalar only
  double at(int i) const { return p_->data[static_cast<size_t>(i)]; }
  double at(int r, int c) const;

  bool requires_grad() const { return p_->requires_grad; }
  void set_requires_grad(bool v) { p_->requires_grad = v; }

  bool has_grad() const { return !p_->grad.empty(); }
  // Allocates (zero-filled) on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const { return p_->grad; }
  void zero_grad();

  // Deep copy with gradient tracking severed.
  Tensor detach() const;

  // Identity check: do two handles share a payload?
  bool same_as(const Tensor& o) const { return p_ == o.p_; }
  const void* id() const { return p_.get(); }

 private:
  struct Payload {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
  };
  std::shared_ptr<Payload> p_;

  static Tensor make(Shape shape, std::vector<double> data, bool requires_grad);
};

// One tape per forward-backward round. Constructing a Tape makes it the
// active record for the current thread; destruction restores the previous
// one. Tapes and their tensors are confined to a single worker.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  // Records an op. `out` is the op's result; `back` reads out.grad and
  // accumulates into the inputs it captured.
  void record(Tensor out, std::function<void()> back);

  // Seeds loss.grad with 1 and propagates. Intermediate grads are reset per
  // call; leaf grads accumulate across calls until zeroed.
  void backward(const Tensor& loss);

  size_t num_ops() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor out;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;
  Tape* prev_ = nullptr;
};

void zero_grads(const std::vector<Tensor>& params);

// ---- primitives -----------------------------------------------------------
// Shapes must conform; violations throw std::invalid_argument naming both
// shapes. Elementwise binaries broadcast a scalar, a rank-1 [n] or [1 x n]
// row against matrix rows, or an [m x 1] column against matrix columns.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Division by an exact zero anywhere in b is a hard error.
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
// log(max(x, 1e-12)); gradient is zero where the clamp binds.
Tensor log(const Tensor& a);
// Requires x >= 0.
Tensor sqrt(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor sum(const Tensor& a);                 // all elements -> scalar
Tensor mean(const Tensor& a);
Tensor sum(const Tensor& a, int axis);       // rank-2, keeps dims
Tensor mean(const Tensor& a, int axis);

Tensor softmax(const Tensor& a);             // over last axis
Tensor log_softmax(const Tensor& a);

// out[i] = a[rows[i]] (rank-1) or out[i,:] = a[rows[i],:] (rank-2).
Tensor gather_rows(const Tensor& a, const std::vector<int>& rows);
// out[i] = a[i, cols[i]].
Tensor pick(const Tensor& a, const std::vector<int>& cols);
Tensor concat(const std::vector<Tensor>& parts);  // along axis 0
Tensor reshape(const Tensor& a, Shape shape);

// Row norms max(||a_i||_2, floor) as [m x 1]; rank-1 input gives a scalar.
// The floor keeps cosine similarity of a zero vector at exactly 0.
Tensor l2_norm_rows(const Tensor& a, double floor = 1e-12);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(double a, const Tensor& b);
Tensor operator-(const Tensor& a);

}  // namespace refgame
