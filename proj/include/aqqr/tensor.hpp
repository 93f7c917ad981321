#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace aqqr {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first touched; then values.size()
  bool requires_grad = false;
  bool is_op_output = false;
};

}  // namespace detail

/// Dense n-dimensional double tensor, row-major. Value-semantic handle over
/// shared storage; operations record backward closures on the active tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], requires_grad on.
  static Tensor uniform_init(Shape shape, int fan_in, std::mt19937_64& rng);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  bool is_scalar() const { return size() == 1; }
  bool is_matrix() const { return shape().size() == 2; }
  int rows() const;
  int cols() const;

  double value() const;  // single-element access; throws otherwise
  double at(int i) const;
  double at(int r, int c) const;

  std::vector<double>& values();
  const std::vector<double>& values() const;
  /// Gradient buffer, allocated (zeroed) on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);

  /// Deep copy of values and requires_grad; grad and tape state are not
  /// carried over.
  Tensor clone() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op_output(Shape shape, bool requires_grad);
};

/// Thread-local flag gating tape recording (eval-mode forward passes run
/// with recording off and produce constant tensors).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Wengert-list tape: ops append entries in execution order, backward()
/// replays them in reverse. One tape per thread; reset() once per step.
class Tape {
 public:
  struct Entry {
    std::shared_ptr<detail::TensorNode> out;
    std::function<void()> back;
  };

  static Tape& active();

  void record(std::shared_ptr<detail::TensorNode> out,
              std::function<void()> back);
  void reset();
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::shared_ptr<detail::TensorNode>& n) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// ---- differentiable operations -------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// a[m x n] + row[n], broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& row);
Tensor mul_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias);
/// Column means: [m x n] -> [n].
Tensor mean_rows(const Tensor& a);
/// Row means: [m x n] -> [m].
Tensor mean_cols(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);
/// Cosine similarity of 1-D vectors; either norm below 1e-12 yields 0.
Tensor cosine_sim(const Tensor& a, const Tensor& b);
Tensor dropout(const Tensor& a, double p, bool training, std::mt19937_64& rng);
Tensor reshape(const Tensor& a, Shape shape);
/// Stack k 1-D tensors of length n into [k x n].
Tensor stack_rows(const std::vector<Tensor>& rows);
/// Concatenate 1-D tensors.
Tensor concat_vec(const std::vector<Tensor>& parts);
/// Concatenate [m x n_i] blocks along columns.
Tensor concat_cols(const std::vector<Tensor>& blocks);

/// Reverse pass from a scalar loss recorded on the active tape. Leaf grads
/// accumulate across calls; intermediate grads are rebuilt each call.
void backward(const Tensor& loss);

}  // namespace aqqr
