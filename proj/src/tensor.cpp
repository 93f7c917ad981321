#include "aqqr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aqqr {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

namespace {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

thread_local bool g_grad_enabled = true;

void require_matrix(const Tensor& t, const char* op) {
  if (!t.defined() || t.shape().size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a 2-D tensor, got " +
                                (t.defined() ? shape_str(t.shape()) : std::string("<undefined>")));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor make_op_output(Shape shape, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  node->values.assign(numel(shape), 0.0);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  node->is_op_output = true;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_values(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(numel(shape), value);
  return from_values(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  const std::size_t n = numel(shape);
  if (values.empty()) values.assign(n, 0.0);
  if (values.size() != n) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

Tensor Tensor::uniform_init(Shape shape, int fan_in, std::mt19937_64& rng) {
  if (fan_in <= 0) throw std::invalid_argument("uniform_init: fan_in must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  Tensor t = from_values(std::move(shape), std::move(v), true);
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::runtime_error("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return shape().empty() ? 0 : node_->values.size(); }

int Tensor::rows() const {
  require_matrix(*this, "rows");
  return node_->shape[0];
}

int Tensor::cols() const {
  require_matrix(*this, "cols");
  return node_->shape[1];
}

double Tensor::value() const {
  if (size() != 1) throw std::invalid_argument("value(): tensor " + shape_str(shape()) + " is not scalar");
  return node_->values[0];
}

double Tensor::at(int i) const { return node_->values.at(static_cast<std::size_t>(i)); }

double Tensor::at(int r, int c) const {
  require_matrix(*this, "at");
  return node_->values.at(static_cast<std::size_t>(r) * node_->shape[1] + c);
}

std::vector<double>& Tensor::values() {
  if (!node_) throw std::runtime_error("use of undefined tensor");
  return node_->values;
}

const std::vector<double>& Tensor::values() const {
  if (!node_) throw std::runtime_error("use of undefined tensor");
  return node_->values;
}

std::vector<double>& Tensor::grad() {
  if (!node_) throw std::runtime_error("use of undefined tensor");
  if (node_->grad.size() != node_->values.size()) node_->grad.assign(node_->values.size(), 0.0);
  return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_ || node_->grad.size() != node_->values.size()) {
    throw std::runtime_error("grad(): gradient not populated");
  }
  return node_->grad;
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->values.size(); }

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!node_) throw std::runtime_error("use of undefined tensor");
  node_->requires_grad = on;
  return *this;
}

Tensor Tensor::clone() const {
  if (!node_) return Tensor();
  return from_values(node_->shape, node_->values, node_->requires_grad);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(std::shared_ptr<detail::TensorNode> out, std::function<void()> back) {
  entries_.push_back({std::move(out), std::move(back)});
}

void Tape::reset() { entries_.clear(); }

bool Tape::contains(const std::shared_ptr<detail::TensorNode>& n) const {
  for (const auto& e : entries_) {
    if (e.out == n) return true;
  }
  return false;
}

namespace {

using NodePtr = std::shared_ptr<detail::TensorNode>;

bool tracks(const Tensor& t) { return g_grad_enabled && t.requires_grad(); }

void ensure_grad(const NodePtr& n) {
  if (n->grad.size() != n->values.size()) n->grad.assign(n->values.size(), 0.0);
}

// Accumulates into a parent only when a downstream consumer needs it.
bool wants_grad(const NodePtr& n) { return n->requires_grad; }

Tensor finish_unary(const Tensor& a, Tensor out, std::function<void()> back) {
  if (tracks(a)) {
    out.set_requires_grad(true);
    Tape::active().record(out.node(), std::move(back));
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const int m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) {
    throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
  Tensor out = make_op_output({m, n}, false);
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
    }
  }
  if (tracks(a) || tracks(b)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), bn = b.node(), on = out.node();
    Tape::active().record(on, [an, bn, on, m, k, n] {
      const auto& g = on->grad;
      if (wants_grad(an)) {
        ensure_grad(an);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) {
            const double gij = g[i * n + j];
            if (gij == 0.0) continue;
            for (int p = 0; p < k; ++p) an->grad[i * k + p] += gij * bn->values[p * n + j];
          }
      }
      if (wants_grad(bn)) {
        ensure_grad(bn);
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            const double aip = an->values[i * k + p];
            if (aip == 0.0) continue;
            for (int j = 0; j < n; ++j) bn->grad[p * n + j] += aip * g[i * n + j];
          }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const int m = a.rows(), n = a.cols();
  Tensor out = make_op_output({n, m}, false);
  const auto& av = a.values();
  auto& ov = out.values();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) ov[j * m + i] = av[i * n + j];
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, m, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) an->grad[i * n + j] += on->grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_op_output(a.shape(), false);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + b.values()[i];
  if (tracks(a) || tracks(b)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), bn = b.node(), on = out.node();
    Tape::active().record(on, [an, bn, on, n] {
      if (wants_grad(an)) {
        ensure_grad(an);
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
      }
      if (wants_grad(bn)) {
        ensure_grad(bn);
        for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = make_op_output(a.shape(), false);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] - b.values()[i];
  if (tracks(a) || tracks(b)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), bn = b.node(), on = out.node();
    Tape::active().record(on, [an, bn, on, n] {
      if (wants_grad(an)) {
        ensure_grad(an);
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
      }
      if (wants_grad(bn)) {
        ensure_grad(bn);
        for (std::size_t i = 0; i < n; ++i) bn->grad[i] -= on->grad[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_op_output(a.shape(), false);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * b.values()[i];
  if (tracks(a) || tracks(b)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), bn = b.node(), on = out.node();
    Tape::active().record(on, [an, bn, on, n] {
      if (wants_grad(an)) {
        ensure_grad(an);
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * bn->values[i];
      }
      if (wants_grad(bn)) {
        ensure_grad(bn);
        for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i] * an->values[i];
      }
    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  require_matrix(a, "add_rowvec");
  if (row.shape().size() != 1 || row.shape()[0] != a.cols()) {
    throw std::invalid_argument("add_rowvec: row " + shape_str(row.shape()) +
                                " does not match matrix " + shape_str(a.shape()));
  }
  const int m = a.rows(), n = a.cols();
  Tensor out = make_op_output({m, n}, false);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.values()[i * n + j] = a.values()[i * n + j] + row.values()[j];
  if (tracks(a) || tracks(row)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), rn = row.node(), on = out.node();
    Tape::active().record(on, [an, rn, on, m, n] {
      if (wants_grad(an)) {
        ensure_grad(an);
        for (int i = 0; i < m * n; ++i) an->grad[i] += on->grad[i];
      }
      if (wants_grad(rn)) {
        ensure_grad(rn);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) rn->grad[j] += on->grad[i * n + j];
      }
    });
  }
  return out;
}

Tensor mul_scalar(const Tensor& a, double s) {
  Tensor out = make_op_output(a.shape(), false);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * s;
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, s, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += s * on->grad[i];
  });
}

Tensor relu(const Tensor& a) {
  Tensor out = make_op_output(a.shape(), false);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = std::max(0.0, a.values()[i]);
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    // subgradient at exactly 0 is 0
    for (std::size_t i = 0; i < n; ++i)
      if (an->values[i] > 0.0) an->grad[i] += on->grad[i];
  });
}

Tensor softplus(const Tensor& a) {
  Tensor out = make_op_output(a.shape(), false);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.values()[i];
    out.values()[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = an->values[i];
      const double sig = x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      an->grad[i] += sig * on->grad[i];
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  require_matrix(a, "softmax_rows");
  const int m = a.rows(), n = a.cols();
  for (double v : a.values()) {
    if (std::isnan(v)) throw std::runtime_error("softmax_rows: NaN in input");
  }
  Tensor out = make_op_output({m, n}, false);
  for (int i = 0; i < m; ++i) {
    const double* in = a.values().data() + static_cast<std::size_t>(i) * n;
    double* o = out.values().data() + static_cast<std::size_t>(i) * n;
    double mx = in[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (int j = 0; j < n; ++j) o[j] /= sum;
  }
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, m, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (int i = 0; i < m; ++i) {
      const double* y = on->values.data() + static_cast<std::size_t>(i) * n;
      const double* g = on->grad.data() + static_cast<std::size_t>(i) * n;
      double dotgy = 0.0;
      for (int j = 0; j < n; ++j) dotgy += g[j] * y[j];
      double* da = an->grad.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) da[j] += y[j] * (g[j] - dotgy);
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias) {
  require_matrix(a, "layer_norm");
  const int m = a.rows(), n = a.cols();
  if (n < 2) throw std::invalid_argument("layer_norm: need at least 2 columns, got " + shape_str(a.shape()));
  if (gain.shape() != Shape{n} || bias.shape() != Shape{n}) {
    throw std::invalid_argument("layer_norm: gain/bias must be [" + std::to_string(n) + "], got " +
                                shape_str(gain.shape()) + " and " + shape_str(bias.shape()));
  }
  constexpr double kEps = 1e-5;
  Tensor out = make_op_output({m, n}, false);
  auto xhat = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m) * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (int i = 0; i < m; ++i) {
    const double* x = a.values().data() + static_cast<std::size_t>(i) * n;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= n;
    const double s = 1.0 / std::sqrt(var + kEps);
    (*inv_std)[i] = s;
    for (int j = 0; j < n; ++j) {
      const double xh = (x[j] - mean) * s;
      (*xhat)[static_cast<std::size_t>(i) * n + j] = xh;
      out.values()[static_cast<std::size_t>(i) * n + j] = xh * gain.values()[j] + bias.values()[j];
    }
  }
  if (tracks(a) || tracks(gain) || tracks(bias)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), gn = gain.node(), bn = bias.node(), on = out.node();
    Tape::active().record(on, [an, gn, bn, on, xhat, inv_std, m, n] {
      for (int i = 0; i < m; ++i) {
        const double* g = on->grad.data() + static_cast<std::size_t>(i) * n;
        const double* xh = xhat->data() + static_cast<std::size_t>(i) * n;
        if (wants_grad(gn)) {
          ensure_grad(gn);
          for (int j = 0; j < n; ++j) gn->grad[j] += g[j] * xh[j];
        }
        if (wants_grad(bn)) {
          ensure_grad(bn);
          for (int j = 0; j < n; ++j) bn->grad[j] += g[j];
        }
        if (wants_grad(an)) {
          ensure_grad(an);
          const double s = (*inv_std)[i];
          double mean_gg = 0.0, mean_ggx = 0.0;
          for (int j = 0; j < n; ++j) {
            const double gg = g[j] * gn->values[j];
            mean_gg += gg;
            mean_ggx += gg * xh[j];
          }
          mean_gg /= n;
          mean_ggx /= n;
          double* da = an->grad.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) {
            const double gg = g[j] * gn->values[j];
            da[j] += s * (gg - mean_gg - xh[j] * mean_ggx);
          }
        }
      }
    });
  }
  return out;
}

Tensor mean_rows(const Tensor& a) {
  require_matrix(a, "mean_rows");
  const int m = a.rows(), n = a.cols();
  if (m < 1 || n < 1) throw std::invalid_argument("mean_rows: empty tensor");
  Tensor out = make_op_output({n}, false);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += a.values()[static_cast<std::size_t>(i) * n + j];
    out.values()[j] = s / m;
  }
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, m, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) an->grad[static_cast<std::size_t>(i) * n + j] += on->grad[j] / m;
  });
}

Tensor mean_cols(const Tensor& a) {
  require_matrix(a, "mean_cols");
  const int m = a.rows(), n = a.cols();
  if (m < 1 || n < 1) throw std::invalid_argument("mean_cols: empty tensor");
  Tensor out = make_op_output({m}, false);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a.values()[static_cast<std::size_t>(i) * n + j];
    out.values()[i] = s / n;
  }
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, m, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) an->grad[static_cast<std::size_t>(i) * n + j] += on->grad[i] / n;
  });
}

Tensor mean_all(const Tensor& a) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
  Tensor out = make_op_output({1}, false);
  double s = 0.0;
  for (double v : a.values()) s += v;
  out.values()[0] = s / static_cast<double>(n);
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    const double g = on->grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += g;
  });
}

Tensor sum_all(const Tensor& a) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("sum_all: empty tensor");
  Tensor out = make_op_output({1}, false);
  double s = 0.0;
  for (double v : a.values()) s += v;
  out.values()[0] = s;
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[0];
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1 || a.shape() != b.shape()) {
    throw std::invalid_argument("dot: need equal-length 1-D tensors, got " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  }
  const std::size_t n = a.size();
  Tensor out = make_op_output({1}, false);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a.values()[i] * b.values()[i];
  out.values()[0] = s;
  if (tracks(a) || tracks(b)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), bn = b.node(), on = out.node();
    Tape::active().record(on, [an, bn, on, n] {
      const double g = on->grad[0];
      if (wants_grad(an)) {
        ensure_grad(an);
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += g * bn->values[i];
      }
      if (wants_grad(bn)) {
        ensure_grad(bn);
        for (std::size_t i = 0; i < n; ++i) bn->grad[i] += g * an->values[i];
      }
    });
  }
  return out;
}

Tensor cosine_sim(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1 || a.shape() != b.shape()) {
    throw std::invalid_argument("cosine_sim: need equal-length 1-D tensors, got " +
                                shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  constexpr double kTiny = 1e-12;
  const std::size_t n = a.size();
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ab += a.values()[i] * b.values()[i];
    aa += a.values()[i] * a.values()[i];
    bb += b.values()[i] * b.values()[i];
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  const bool degenerate = na < kTiny || nb < kTiny;
  const double c = degenerate ? 0.0 : ab / (na * nb);
  Tensor out = make_op_output({1}, false);
  out.values()[0] = c;
  if (tracks(a) || tracks(b)) {
    out.set_requires_grad(true);
    NodePtr an = a.node(), bn = b.node(), on = out.node();
    Tape::active().record(on, [an, bn, on, n, na, nb, c, degenerate] {
      if (degenerate) return;  // similarity pinned to 0, zero subgradient
      const double g = on->grad[0];
      if (wants_grad(an)) {
        ensure_grad(an);
        for (std::size_t i = 0; i < n; ++i) {
          an->grad[i] += g * (bn->values[i] / (na * nb) - c * an->values[i] / (na * na));
        }
      }
      if (wants_grad(bn)) {
        ensure_grad(bn);
        for (std::size_t i = 0; i < n; ++i) {
          bn->grad[i] += g * (an->values[i] / (na * nb) - c * bn->values[i] / (nb * nb));
        }
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& a, double p, bool training, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must be in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) {
    // identity pass-through, still differentiable
    return mul_scalar(a, 1.0);
  }
  const std::size_t n = a.size();
  const double scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(n);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Tensor out = make_op_output(a.shape(), false);
  for (std::size_t i = 0; i < n; ++i) {
    (*mask)[i] = dist(rng) < p ? 0.0 : scale;
    out.values()[i] = a.values()[i] * (*mask)[i];
  }
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, mask, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * (*mask)[i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  const std::size_t n = numel(shape);
  if (n != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                shape_str(shape));
  }
  Tensor out = make_op_output(std::move(shape), false);
  out.values() = a.values();
  NodePtr an = a.node(), on = out.node();
  return finish_unary(a, out, [an, on, n] {
    if (!wants_grad(an)) return;
    ensure_grad(an);
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  const int n = static_cast<int>(rows.front().size());
  bool track = false;
  for (const auto& r : rows) {
    if (r.shape().size() != 1 || static_cast<int>(r.size()) != n) {
      throw std::invalid_argument("stack_rows: rows must be 1-D of equal length, got " +
                                  shape_str(r.shape()));
    }
    track = track || tracks(r);
  }
  const int m = static_cast<int>(rows.size());
  Tensor out = make_op_output({m, n}, false);
  for (int i = 0; i < m; ++i)
    std::copy(rows[i].values().begin(), rows[i].values().end(),
              out.values().begin() + static_cast<std::size_t>(i) * n);
  if (track) {
    out.set_requires_grad(true);
    std::vector<NodePtr> parents;
    parents.reserve(rows.size());
    for (const auto& r : rows) parents.push_back(r.node());
    NodePtr on = out.node();
    Tape::active().record(on, [parents, on, n] {
      for (std::size_t i = 0; i < parents.size(); ++i) {
        if (!wants_grad(parents[i])) continue;
        ensure_grad(parents[i]);
        for (int j = 0; j < n; ++j) parents[i]->grad[j] += on->grad[i * n + j];
      }
    });
  }
  return out;
}

Tensor concat_vec(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_vec: no parts");
  std::size_t total = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p.shape().size() != 1) {
      throw std::invalid_argument("concat_vec: parts must be 1-D, got " + shape_str(p.shape()));
    }
    total += p.size();
    track = track || tracks(p);
  }
  Tensor out = make_op_output({static_cast<int>(total)}, false);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(), out.values().begin() + off);
    off += p.size();
  }
  if (track) {
    out.set_requires_grad(true);
    std::vector<NodePtr> parents;
    for (const auto& p : parts) parents.push_back(p.node());
    NodePtr on = out.node();
    Tape::active().record(on, [parents, on] {
      std::size_t o = 0;
      for (const auto& pn : parents) {
        const std::size_t len = pn->values.size();
        if (wants_grad(pn)) {
          ensure_grad(pn);
          for (std::size_t i = 0; i < len; ++i) pn->grad[i] += on->grad[o + i];
        }
        o += len;
      }
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("concat_cols: no blocks");
  const int m = blocks.front().rows();
  int total = 0;
  bool track = false;
  for (const auto& b : blocks) {
    require_matrix(b, "concat_cols");
    if (b.rows() != m) {
      throw std::invalid_argument("concat_cols: row count mismatch, " + shape_str(b.shape()));
    }
    total += b.cols();
    track = track || tracks(b);
  }
  Tensor out = make_op_output({m, total}, false);
  int off = 0;
  for (const auto& b : blocks) {
    const int w = b.cols();
    for (int i = 0; i < m; ++i)
      std::copy(b.values().begin() + static_cast<std::size_t>(i) * w,
                b.values().begin() + static_cast<std::size_t>(i + 1) * w,
                out.values().begin() + static_cast<std::size_t>(i) * total + off);
    off += w;
  }
  if (track) {
    out.set_requires_grad(true);
    std::vector<NodePtr> parents;
    std::vector<int> widths;
    for (const auto& b : blocks) {
      parents.push_back(b.node());
      widths.push_back(b.cols());
    }
    NodePtr on = out.node();
    Tape::active().record(on, [parents, widths, on, m, total] {
      int o = 0;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        const int w = widths[k];
        if (wants_grad(parents[k])) {
          ensure_grad(parents[k]);
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j)
              parents[k]->grad[static_cast<std::size_t>(i) * w + j] +=
                  on->grad[static_cast<std::size_t>(i) * total + o + j];
        }
        o += w;
      }
    });
  }
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  Tape& tape = Tape::active();
  if (!tape.contains(loss.node())) {
    throw std::invalid_argument("backward: loss is not on the active tape");
  }
  // Intermediate grads are transient per pass; leaf grads persist and
  // therefore accumulate across repeated calls.
  for (const auto& e : tape.entries()) e.out->grad.assign(e.out->values.size(), 0.0);
  loss.node()->grad[0] = 1.0;
  const auto& entries = tape.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) it->back();
}

}  // namespace aqqr
