#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace affect {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

/// One entry of the recorded computation. Nodes are created in execution
/// order (monotone ids), so descending-id traversal is a reverse
/// topological order of the graph reachable from a loss.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily during backward / accumulation
  bool requires_grad = false;
  bool backward_done = false;  // set on the node backward() was invoked on
  std::uint64_t id = 0;
  // Inputs that require grad; traversal order only. Value lifetimes are
  // kept by the backprop closure captures.
  std::vector<std::shared_ptr<Node>> parents;
  // Pulls this node's grad into its parents' grads.
  std::function<void(Node&)> backprop;

  std::vector<double>& grad_buffer();
};

std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> value, bool requires_grad);
std::uint64_t next_node_id();

}  // namespace detail

/// Dense n-dimensional tensor of 64-bit floats, row-major, with optional
/// reverse-mode gradient tracking. Cheap shared handle; ops are free
/// functions that record the computation for backward().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> data);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t extent(std::size_t axis) const;

  double item() const;  // numel() == 1 only
  std::span<const double> values() const;
  /// Leaf-only in-place access (parameter updates, data loading).
  std::span<double> mutable_values();

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);  // leaf-only

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Reverse traversal of the recorded operations from this scalar;
  /// accumulates into .grad of every requires_grad tensor it reaches.
  void backward() const;

  /// Constant copy sharing nothing with the graph.
  Tensor detached() const;
  /// Fresh leaf with copied values.
  Tensor clone_leaf(bool requires_grad) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Elementwise ops; operands must have equal shapes, except that a
// single-element tensor broadcasts against any shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_n(const std::vector<Tensor>& xs);

Tensor scale(const Tensor& x, double c);
Tensor add_const(const Tensor& x, double c);
Tensor neg(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sine(const Tensor& x);

/// [m x k] * [k x n] -> [m x n]; a 1-D left operand [k] gives [n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

/// Adds a length-n vector to every row of an [m x n] tensor (or to a [n] vector).
Tensor add_rowwise(const Tensor& x, const Tensor& bias);

/// Concatenate along axis 0 (1-D tensors) or axis 1 (2-D, equal row counts).
Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
Tensor select_col(const Tensor& x, std::size_t col);
Tensor reshape(const Tensor& x, Shape shape);

/// Max relative error between the recorded gradient of f at x and central
/// finite differences with step h: max_i |a_i - n_i| / max(1, |a_i|, |n_i|).
double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h);

/// Same check for a loss closed over several leaf parameters; every
/// coordinate of every listed parameter is probed.
double gradient_check_params(const std::function<Tensor()>& loss, const std::vector<Tensor>& params, double h);

}  // namespace affect
