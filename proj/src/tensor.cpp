#include "refgame/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace refgame {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

thread_local Tape* g_active_tape = nullptr;

constexpr double kLogFloor = 1e-12;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(a) + " and " + shape_str(b));
}

// How an operand of a broadcast binary op is addressed from output (r, c).
enum class Bcast { kSame, kScalar, kRow, kCol };

struct BinPlan {
  Shape out_shape;
  int m = 1;  // output rows (1 for rank <= 1)
  int n = 1;  // output cols
  Bcast a = Bcast::kSame;
  Bcast b = Bcast::kSame;
};

void normalize_2d(const Shape& s, int* m, int* n) {
  if (s.size() == 2) {
    *m = s[0];
    *n = s[1];
  } else {
    *m = 1;
    *n = shape_size(s);
  }
}

BinPlan plan_binary(const char* op, const Tensor& a, const Tensor& b) {
  BinPlan p;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    p.out_shape = sa;
    normalize_2d(sa, &p.m, &p.n);
    return p;
  }
  if (b.size() == 1) {
    p.out_shape = sa;
    normalize_2d(sa, &p.m, &p.n);
    p.b = Bcast::kScalar;
    return p;
  }
  if (a.size() == 1) {
    p.out_shape = sb;
    normalize_2d(sb, &p.m, &p.n);
    p.a = Bcast::kScalar;
    return p;
  }
  if (sa.size() == 2) {
    int m = sa[0], n = sa[1];
    bool row = (sb.size() == 1 && sb[0] == n) ||
               (sb.size() == 2 && sb[0] == 1 && sb[1] == n);
    bool col = sb.size() == 2 && sb[0] == m && sb[1] == 1;
    if (row || col) {
      p.out_shape = sa;
      p.m = m;
      p.n = n;
      p.b = row ? Bcast::kRow : Bcast::kCol;
      return p;
    }
  }
  if (sb.size() == 2) {
    int m = sb[0], n = sb[1];
    bool row = (sa.size() == 1 && sa[0] == n) ||
               (sa.size() == 2 && sa[0] == 1 && sa[1] == n);
    bool col = sa.size() == 2 && sa[0] == m && sa[1] == 1;
    if (row || col) {
      p.out_shape = sb;
      p.m = m;
      p.n = n;
      p.a = row ? Bcast::kRow : Bcast::kCol;
      return p;
    }
  }
  shape_error(op, sa, sb);
}

inline int bindex(Bcast b, int r, int c, int n) {
  switch (b) {
    case Bcast::kSame:
      return r * n + c;
    case Bcast::kScalar:
      return 0;
    case Bcast::kRow:
      return c;
    case Bcast::kCol:
      return r;
  }
  return 0;
}

// Adds the per-output-element contribution into t's grad, reducing over the
// broadcast dimension(s).
void scatter_grad(Tensor t, Bcast b, const std::vector<double>& contrib, int m,
                  int n) {
  if (!t.requires_grad()) return;
  auto& g = t.grad();
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) g[bindex(b, r, c, n)] += contrib[r * n + c];
}

bool maybe_track(Tensor& out, std::function<void()> back,
                 std::initializer_list<const Tensor*> inputs) {
  Tape* tp = Tape::active();
  if (tp == nullptr) return false;
  bool any = false;
  for (const Tensor* t : inputs) any = any || t->requires_grad();
  if (!any) return false;
  out.set_requires_grad(true);
  tp->record(out, std::move(back));
  return true;
}

Tensor make_out(Shape shape, std::vector<double> data) {
  return Tensor::from(std::move(shape), std::move(data));
}

template <typename Fwd, typename Dfdx>
Tensor unary_op(const Tensor& a, Fwd f, Dfdx dfdx) {
  std::vector<double> y(static_cast<size_t>(a.size()));
  const double* x = a.data();
  for (int i = 0; i < a.size(); ++i) y[static_cast<size_t>(i)] = f(x[i]);
  Tensor out = make_out(a.shape(), std::move(y));
  Tensor in = a;
  maybe_track(
      out,
      [in, out, dfdx]() mutable {
        if (!in.requires_grad()) return;
        auto& gi = in.grad();
        const auto& go = out.grad();
        for (int i = 0; i < in.size(); ++i)
          gi[static_cast<size_t>(i)] +=
              go[static_cast<size_t>(i)] * dfdx(in.at(i), out.at(i));
      },
      {&a});
  return out;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::make(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_size(shape) != static_cast<int>(data.size()))
    throw std::invalid_argument("tensor: shape " + shape_str(shape) +
                                " does not match data length " +
                                std::to_string(data.size()));
  Tensor t;
  t.p_ = std::make_shared<Payload>();
  t.p_->shape = std::move(shape);
  t.p_->data = std::move(data);
  t.p_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  std::vector<double> d(static_cast<size_t>(shape_size(shape)), 0.0);
  return make(std::move(shape), std::move(d), false);
}

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> d(static_cast<size_t>(shape_size(shape)), value);
  return make(std::move(shape), std::move(d), false);
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  return make(std::move(shape), std::move(data), false);
}

Tensor Tensor::scalar(double value) { return make({}, {value}, false); }

Tensor Tensor::param(Shape shape, std::vector<double> data) {
  return make(std::move(shape), std::move(data), true);
}

double Tensor::item() const {
  if (size() != 1)
    throw std::logic_error("item(): tensor of shape " + shape_str(shape()) +
                           " is not a scalar");
  return p_->data[0];
}

double Tensor::at(int r, int c) const {
  return p_->data[static_cast<size_t>(r) * static_cast<size_t>(shape()[1]) +
                  static_cast<size_t>(c)];
}

std::vector<double>& Tensor::grad() {
  if (p_->grad.empty()) p_->grad.assign(p_->data.size(), 0.0);
  return p_->grad;
}

void Tensor::zero_grad() { p_->grad.assign(p_->data.size(), 0.0); }

Tensor Tensor::detach() const {
  return make(p_->shape, p_->data, /*requires_grad=*/false);
}

// ---- Tape ------------------------------------------------------------------

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(Tensor out, std::function<void()> back) {
  nodes_.push_back({std::move(out), std::move(back)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss of shape " +
                                shape_str(loss.shape()) + " is not a scalar");
  // Intermediates (every op output on this tape) restart from zero each call;
  // leaves are untouched here, so their grads accumulate across calls.
  for (Node& n : nodes_) n.out.zero_grad();
  Tensor seed = loss;
  seed.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (it->back) it->back();
}

void zero_grads(const std::vector<Tensor>& params) {
  for (Tensor t : params) t.zero_grad();
}

// ---- elementwise binaries --------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  BinPlan p = plan_binary("add", a, b);
  std::vector<double> y(static_cast<size_t>(p.m) * p.n);
  for (int r = 0; r < p.m; ++r)
    for (int c = 0; c < p.n; ++c)
      y[static_cast<size_t>(r) * p.n + c] =
          a.at(bindex(p.a, r, c, p.n)) + b.at(bindex(p.b, r, c, p.n));
  Tensor out = make_out(p.out_shape, std::move(y));
  Tensor ta = a, tb = b;
  maybe_track(
      out,
      [ta, tb, out, p]() mutable {
        scatter_grad(ta, p.a, out.grad(), p.m, p.n);
        scatter_grad(tb, p.b, out.grad(), p.m, p.n);
      },
      {&a, &b});
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  BinPlan p = plan_binary("sub", a, b);
  std::vector<double> y(static_cast<size_t>(p.m) * p.n);
  for (int r = 0; r < p.m; ++r)
    for (int c = 0; c < p.n; ++c)
      y[static_cast<size_t>(r) * p.n + c] =
          a.at(bindex(p.a, r, c, p.n)) - b.at(bindex(p.b, r, c, p.n));
  Tensor out = make_out(p.out_shape, std::move(y));
  Tensor ta = a, tb = b;
  maybe_track(
      out,
      [ta, tb, out, p]() mutable {
        scatter_grad(ta, p.a, out.grad(), p.m, p.n);
        std::vector<double> gneg(out.grad());
        for (double& v : gneg) v = -v;
        scatter_grad(tb, p.b, gneg, p.m, p.n);
      },
      {&a, &b});
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  BinPlan p = plan_binary("mul", a, b);
  std::vector<double> y(static_cast<size_t>(p.m) * p.n);
  for (int r = 0; r < p.m; ++r)
    for (int c = 0; c < p.n; ++c)
      y[static_cast<size_t>(r) * p.n + c] =
          a.at(bindex(p.a, r, c, p.n)) * b.at(bindex(p.b, r, c, p.n));
  Tensor out = make_out(p.out_shape, std::move(y));
  Tensor ta = a, tb = b;
  maybe_track(
      out,
      [ta, tb, out, p]() mutable {
        const auto& g = out.grad();
        std::vector<double> ca(g.size()), cb(g.size());
        for (int r = 0; r < p.m; ++r)
          for (int c = 0; c < p.n; ++c) {
            size_t i = static_cast<size_t>(r) * p.n + c;
            ca[i] = g[i] * tb.at(bindex(p.b, r, c, p.n));
            cb[i] = g[i] * ta.at(bindex(p.a, r, c, p.n));
          }
        scatter_grad(ta, p.a, ca, p.m, p.n);
        scatter_grad(tb, p.b, cb, p.m, p.n);
      },
      {&a, &b});
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (int i = 0; i < b.size(); ++i)
    if (b.at(i) == 0.0)
      throw std::domain_error("div: division by exact zero at index " +
                              std::to_string(i));
  BinPlan p = plan_binary("div", a, b);
  std::vector<double> y(static_cast<size_t>(p.m) * p.n);
  for (int r = 0; r < p.m; ++r)
    for (int c = 0; c < p.n; ++c)
      y[static_cast<size_t>(r) * p.n + c] =
          a.at(bindex(p.a, r, c, p.n)) / b.at(bindex(p.b, r, c, p.n));
  Tensor out = make_out(p.out_shape, std::move(y));
  Tensor ta = a, tb = b;
  maybe_track(
      out,
      [ta, tb, out, p]() mutable {
        const auto& g = out.grad();
        std::vector<double> ca(g.size()), cb(g.size());
        for (int r = 0; r < p.m; ++r)
          for (int c = 0; c < p.n; ++c) {
            size_t i = static_cast<size_t>(r) * p.n + c;
            double bv = tb.at(bindex(p.b, r, c, p.n));
            ca[i] = g[i] / bv;
            cb[i] = -g[i] * ta.at(bindex(p.a, r, c, p.n)) / (bv * bv);
          }
        scatter_grad(ta, p.a, ca, p.m, p.n);
        scatter_grad(tb, p.b, cb, p.m, p.n);
      },
      {&a, &b});
  return out;
}

// ---- unaries ---------------------------------------------------------------

Tensor neg(const Tensor& a) {
  return unary_op(
      a, [](double x) { return -x; },
      [](double, double) { return -1.0; });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::log(std::max(x, kLogFloor)); },
      [](double x, double) { return x >= kLogFloor ? 1.0 / x : 0.0; });
}

Tensor sqrt(const Tensor& a) {
  for (int i = 0; i < a.size(); ++i)
    if (a.at(i) < 0.0)
      throw std::domain_error("sqrt: negative operand " +
                              std::to_string(a.at(i)) + " at index " +
                              std::to_string(i));
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / std::max(y, kLogFloor); });
}

// ---- matmul / transpose ----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    shape_error("matmul", a.shape(), b.shape());
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> y(static_cast<size_t>(m) * n);
  {
    ECMap ma(a.data(), m, k), mb(b.data(), k, n);
    EMap(y.data(), m, n).noalias() = ma * mb;
  }
  Tensor out = make_out({m, n}, std::move(y));
  Tensor ta = a, tb = b;
  maybe_track(
      out,
      [ta, tb, out, m, k, n]() mutable {
        ECMap g(out.grad().data(), m, n);
        ECMap ma(ta.data(), m, k), mb(tb.data(), k, n);
        if (ta.requires_grad())
          EMap(ta.grad().data(), m, k).noalias() += g * mb.transpose();
        if (tb.requires_grad())
          EMap(tb.grad().data(), k, n).noalias() += ma.transpose() * g;
      },
      {&a, &b});
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) shape_error("transpose", a.shape(), {});
  int m = a.dim(0), n = a.dim(1);
  std::vector<double> y(static_cast<size_t>(m) * n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c)
      y[static_cast<size_t>(c) * m + r] = a.at(r, c);
  Tensor out = make_out({n, m}, std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, m, n]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < n; ++c)
            gi[static_cast<size_t>(r) * n + c] +=
                go[static_cast<size_t>(c) * m + r];
      },
      {&a});
  return out;
}

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = std::accumulate(a.vec().begin(), a.vec().end(), 0.0);
  Tensor out = make_out({}, {s});
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out]() mutable {
        if (!ta.requires_grad()) return;
        double g = out.grad()[0];
        auto& gi = ta.grad();
        for (double& v : gi) v += g;
      },
      {&a});
  return out;
}

Tensor mean(const Tensor& a) {
  double s = std::accumulate(a.vec().begin(), a.vec().end(), 0.0);
  double inv = 1.0 / a.size();
  Tensor out = make_out({}, {s * inv});
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, inv]() mutable {
        if (!ta.requires_grad()) return;
        double g = out.grad()[0] * inv;
        auto& gi = ta.grad();
        for (double& v : gi) v += g;
      },
      {&a});
  return out;
}

namespace {

Tensor axis_reduce(const Tensor& a, int axis, bool take_mean, const char* op) {
  if (a.rank() != 2 || (axis != 0 && axis != 1))
    throw std::invalid_argument(std::string(op) + ": need rank-2 tensor, got " +
                                shape_str(a.shape()) + " with axis " +
                                std::to_string(axis));
  int m = a.dim(0), n = a.dim(1);
  double scale = take_mean ? (axis == 0 ? 1.0 / m : 1.0 / n) : 1.0;
  Shape out_shape = axis == 0 ? Shape{1, n} : Shape{m, 1};
  std::vector<double> y(static_cast<size_t>(shape_size(out_shape)), 0.0);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) y[axis == 0 ? c : r] += a.at(r, c);
  for (double& v : y) v *= scale;
  Tensor out = make_out(out_shape, std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, m, n, axis, scale]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < n; ++c)
            gi[static_cast<size_t>(r) * n + c] += go[axis == 0 ? c : r] * scale;
      },
      {&a});
  return out;
}

}  // namespace

Tensor sum(const Tensor& a, int axis) { return axis_reduce(a, axis, false, "sum"); }
Tensor mean(const Tensor& a, int axis) { return axis_reduce(a, axis, true, "mean"); }

// ---- softmax family --------------------------------------------------------

namespace {

void rows_of(const Tensor& a, int* m, int* n, const char* op) {
  if (a.rank() == 1) {
    *m = 1;
    *n = a.dim(0);
  } else if (a.rank() == 2) {
    *m = a.dim(0);
    *n = a.dim(1);
  } else {
    throw std::invalid_argument(std::string(op) + ": need rank 1 or 2, got " +
                                shape_str(a.shape()));
  }
}

}  // namespace

Tensor softmax(const Tensor& a) {
  int m, n;
  rows_of(a, &m, &n, "softmax");
  std::vector<double> y(static_cast<size_t>(a.size()));
  const double* x = a.data();
  for (int r = 0; r < m; ++r) {
    const double* xr = x + static_cast<size_t>(r) * n;
    double* yr = y.data() + static_cast<size_t>(r) * n;
    double mx = *std::max_element(xr, xr + n);
    double z = 0.0;
    for (int c = 0; c < n; ++c) z += (yr[c] = std::exp(xr[c] - mx));
    for (int c = 0; c < n; ++c) yr[c] /= z;
  }
  Tensor out = make_out(a.shape(), std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, m, n]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (int r = 0; r < m; ++r) {
          const double* yr = out.data() + static_cast<size_t>(r) * n;
          const double* gr = go.data() + static_cast<size_t>(r) * n;
          double dot = 0.0;
          for (int c = 0; c < n; ++c) dot += gr[c] * yr[c];
          for (int c = 0; c < n; ++c)
            gi[static_cast<size_t>(r) * n + c] += yr[c] * (gr[c] - dot);
        }
      },
      {&a});
  return out;
}

Tensor log_softmax(const Tensor& a) {
  int m, n;
  rows_of(a, &m, &n, "log_softmax");
  std::vector<double> y(static_cast<size_t>(a.size()));
  const double* x = a.data();
  for (int r = 0; r < m; ++r) {
    const double* xr = x + static_cast<size_t>(r) * n;
    double* yr = y.data() + static_cast<size_t>(r) * n;
    double mx = *std::max_element(xr, xr + n);
    double z = 0.0;
    for (int c = 0; c < n; ++c) z += std::exp(xr[c] - mx);
    double lz = mx + std::log(z);
    for (int c = 0; c < n; ++c) yr[c] = xr[c] - lz;
  }
  Tensor out = make_out(a.shape(), std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, m, n]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (int r = 0; r < m; ++r) {
          const double* yr = out.data() + static_cast<size_t>(r) * n;
          const double* gr = go.data() + static_cast<size_t>(r) * n;
          double gsum = 0.0;
          for (int c = 0; c < n; ++c) gsum += gr[c];
          for (int c = 0; c < n; ++c)
            gi[static_cast<size_t>(r) * n + c] += gr[c] - std::exp(yr[c]) * gsum;
        }
      },
      {&a});
  return out;
}

// ---- indexing --------------------------------------------------------------

Tensor gather_rows(const Tensor& a, const std::vector<int>& rows) {
  if (a.rank() != 1 && a.rank() != 2)
    throw std::invalid_argument("gather_rows: need rank 1 or 2, got " +
                                shape_str(a.shape()));
  int n = a.dim(0);
  int d = a.rank() == 2 ? a.dim(1) : 1;
  for (int r : rows)
    if (r < 0 || r >= n)
      throw std::out_of_range("gather_rows: index " + std::to_string(r) +
                              " outside [0, " + std::to_string(n) + ")");
  int k = static_cast<int>(rows.size());
  std::vector<double> y(static_cast<size_t>(k) * d);
  for (int i = 0; i < k; ++i)
    std::copy_n(a.data() + static_cast<size_t>(rows[static_cast<size_t>(i)]) * d,
                d, y.data() + static_cast<size_t>(i) * d);
  Shape out_shape = a.rank() == 2 ? Shape{k, d} : Shape{k};
  Tensor out = make_out(std::move(out_shape), std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, rows, d]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (size_t i = 0; i < rows.size(); ++i)
          for (int j = 0; j < d; ++j)
            gi[static_cast<size_t>(rows[i]) * d + j] += go[i * d + j];
      },
      {&a});
  return out;
}

Tensor pick(const Tensor& a, const std::vector<int>& cols) {
  if (a.rank() != 2 || static_cast<int>(cols.size()) != a.dim(0))
    throw std::invalid_argument("pick: need rank-2 with one index per row, got " +
                                shape_str(a.shape()) + " and " +
                                std::to_string(cols.size()) + " indices");
  int m = a.dim(0), n = a.dim(1);
  for (int c : cols)
    if (c < 0 || c >= n)
      throw std::out_of_range("pick: index " + std::to_string(c) +
                              " outside [0, " + std::to_string(n) + ")");
  std::vector<double> y(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) y[static_cast<size_t>(r)] = a.at(r, cols[static_cast<size_t>(r)]);
  Tensor out = make_out({m}, std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, cols, n]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (size_t r = 0; r < cols.size(); ++r)
          gi[r * n + static_cast<size_t>(cols[r])] += go[r];
      },
      {&a});
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty input list");
  int rank = parts[0].rank();
  int cols = rank == 2 ? parts[0].dim(1) : 1;
  int rows = 0;
  for (const Tensor& t : parts) {
    if (t.rank() != rank || (rank == 2 && t.dim(1) != cols))
      shape_error("concat", parts[0].shape(), t.shape());
    rows += t.dim(0);
  }
  std::vector<double> y;
  y.reserve(static_cast<size_t>(rows) * cols);
  for (const Tensor& t : parts) y.insert(y.end(), t.vec().begin(), t.vec().end());
  Shape out_shape = rank == 2 ? Shape{rows, cols} : Shape{rows};
  Tensor out = make_out(std::move(out_shape), std::move(y));
  std::vector<Tensor> ins = parts;
  bool any = false;
  for (const Tensor& t : parts) any = any || t.requires_grad();
  Tape* tp = Tape::active();
  if (tp && any) {
    out.set_requires_grad(true);
    tp->record(out, [ins, out]() mutable {
      const auto& go = out.grad();
      size_t off = 0;
      for (Tensor& t : ins) {
        size_t len = static_cast<size_t>(t.size());
        if (t.requires_grad()) {
          auto& gi = t.grad();
          for (size_t i = 0; i < len; ++i) gi[i] += go[off + i];
        }
        off += len;
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size())
    shape_error("reshape", a.shape(), shape);
  Tensor out = make_out(std::move(shape), a.vec());
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
      },
      {&a});
  return out;
}

Tensor l2_norm_rows(const Tensor& a, double floor) {
  int m, n;
  rows_of(a, &m, &n, "l2_norm_rows");
  std::vector<double> y(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) {
    double s = 0.0;
    const double* xr = a.data() + static_cast<size_t>(r) * n;
    for (int c = 0; c < n; ++c) s += xr[c] * xr[c];
    y[static_cast<size_t>(r)] = std::max(std::sqrt(s), floor);
  }
  Shape out_shape = a.rank() == 2 ? Shape{m, 1} : Shape{};
  Tensor out = make_out(std::move(out_shape), std::move(y));
  Tensor ta = a;
  maybe_track(
      out,
      [ta, out, m, n, floor]() mutable {
        if (!ta.requires_grad()) return;
        auto& gi = ta.grad();
        const auto& go = out.grad();
        for (int r = 0; r < m; ++r) {
          double norm = out.at(r);
          if (norm <= floor) continue;  // flat region of the clamp
          const double* xr = ta.data() + static_cast<size_t>(r) * n;
          for (int c = 0; c < n; ++c)
            gi[static_cast<size_t>(r) * n + c] += go[static_cast<size_t>(r)] * xr[c] / norm;
        }
      },
      {&a});
  return out;
}

// ---- operators -------------------------------------------------------------

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }
Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
Tensor operator-(const Tensor& a) { return neg(a); }

}  // namespace refgame
