#include "affect/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "affect/errors.hpp"

namespace affect {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace detail {

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (std::size_t e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  if (shape_numel(shape) != value.size())
    throw DimensionError("shape " + shape_str(shape) + " does not match a buffer of " +
                         std::to_string(value.size()) + " values");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->id = next_node_id();
  return n;
}

}  // namespace detail

using detail::Node;

namespace {

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor operand");
}

std::shared_ptr<Node> new_op_node(Shape shape, std::vector<double> value,
                                  std::initializer_list<std::shared_ptr<Node>> inputs,
                                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  for (const auto& in : inputs)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : inputs)
      if (in->requires_grad) n->parents.push_back(in);
    n->backprop = std::move(backprop);
  }
  n->id = detail::next_node_id();
  return n;
}

// Adds g (shaped like the op output) into p's grad, collapsing to a
// single-element p when it was broadcast.
void accumulate(Node& p, const std::vector<double>& g) {
  auto& pg = p.grad_buffer();
  if (pg.size() == g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
  } else {
    double s = 0.0;
    for (double v : g) s += v;
    pg[0] += s;
  }
}

enum class BinKind { Add, Sub, Mul, Div };

Tensor binary_op(const Tensor& a, const Tensor& b, BinKind kind, const char* name) {
  require_defined(a, name);
  require_defined(b, name);
  auto an = a.node();
  auto bn = b.node();
  const bool as = an->value.size() == 1;
  const bool bs = bn->value.size() == 1;
  if (!as && !bs && an->shape != bn->shape)
    throw DimensionError(std::string(name) + ": shape mismatch " + shape_str(an->shape) + " vs " +
                         shape_str(bn->shape));
  const Shape& out_shape = as && !bs ? bn->shape : an->shape;
  const std::size_t n = shape_numel(out_shape);
  std::vector<double> out(n);
  const auto& av = an->value;
  const auto& bv = bn->value;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[as ? 0 : i];
    const double y = bv[bs ? 0 : i];
    switch (kind) {
      case BinKind::Add: out[i] = x + y; break;
      case BinKind::Sub: out[i] = x - y; break;
      case BinKind::Mul: out[i] = x * y; break;
      case BinKind::Div: out[i] = x / y; break;
    }
  }
  auto node = new_op_node(out_shape, std::move(out), {an, bn}, [an, bn, as, bs, kind](Node& self) {
    if (self.grad.empty()) return;
    const auto& g = self.grad;
    const std::size_t n = g.size();
    if (an->requires_grad) {
      std::vector<double> ga(n);
      for (std::size_t i = 0; i < n; ++i) {
        switch (kind) {
          case BinKind::Add:
          case BinKind::Sub: ga[i] = g[i]; break;
          case BinKind::Mul: ga[i] = g[i] * bn->value[bs ? 0 : i]; break;
          case BinKind::Div: ga[i] = g[i] / bn->value[bs ? 0 : i]; break;
        }
      }
      accumulate(*an, ga);
    }
    if (bn->requires_grad) {
      std::vector<double> gb(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = an->value[as ? 0 : i];
        const double y = bn->value[bs ? 0 : i];
        switch (kind) {
          case BinKind::Add: gb[i] = g[i]; break;
          case BinKind::Sub: gb[i] = -g[i]; break;
          case BinKind::Mul: gb[i] = g[i] * x; break;
          case BinKind::Div: gb[i] = -g[i] * x / (y * y); break;
        }
      }
      accumulate(*bn, gb);
    }
  });
  return Tensor(node);
}

}  // namespace

Tensor Tensor::zeros(Shape shape) {
  std::vector<double> v(shape_numel(shape), 0.0);
  return Tensor(detail::make_leaf(std::move(shape), std::move(v), false));
}

Tensor Tensor::full(Shape shape, double x) {
  std::vector<double> v(shape_numel(shape), x);
  return Tensor(detail::make_leaf(std::move(shape), std::move(v), false));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  return Tensor(detail::make_leaf(std::move(shape), std::move(data), false));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

const Shape& Tensor::shape() const {
  require_defined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::numel() const {
  require_defined(*this, "numel");
  return node_->value.size();
}

std::size_t Tensor::extent(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size())
    throw DimensionError("extent: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return s[axis];
}

double Tensor::item() const {
  if (numel() != 1)
    throw ContractError("item: tensor has " + std::to_string(numel()) + " elements, expected 1");
  return node_->value[0];
}

std::span<const double> Tensor::values() const {
  require_defined(*this, "values");
  return {node_->value.data(), node_->value.size()};
}

std::span<double> Tensor::mutable_values() {
  require_defined(*this, "mutable_values");
  if (node_->backprop)
    throw ContractError("mutable_values: only leaf tensors may be mutated in place");
  return {node_->value.data(), node_->value.size()};
}

bool Tensor::requires_grad() const {
  require_defined(*this, "requires_grad");
  return node_->requires_grad;
}

Tensor& Tensor::set_requires_grad(bool on) {
  require_defined(*this, "set_requires_grad");
  if (node_->backprop) throw ContractError("set_requires_grad: not a leaf tensor");
  node_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const {
  require_defined(*this, "has_grad");
  return node_->grad.size() == node_->value.size();
}

std::span<const double> Tensor::grad() const {
  require_defined(*this, "grad");
  if (!has_grad()) throw ContractError("grad: no gradient present; run backward() first");
  return {node_->grad.data(), node_->grad.size()};
}

void Tensor::zero_grad() {
  require_defined(*this, "zero_grad");
  node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::detached() const {
  require_defined(*this, "detached");
  return Tensor(detail::make_leaf(node_->shape, node_->value, false));
}

Tensor Tensor::clone_leaf(bool requires_grad) const {
  require_defined(*this, "clone_leaf");
  return Tensor(detail::make_leaf(node_->shape, node_->value, requires_grad));
}

void Tensor::backward() const {
  require_defined(*this, "backward");
  if (numel() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(node_->shape));
  if (node_->backward_done)
    throw ContractError("backward: already called on this value; run the forward pass again");
  node_->backward_done = true;

  // Reachable requires_grad subgraph; descending creation id is a reverse
  // topological order because inputs always predate their consumers.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents)
      if (seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(), [](const Node* a, const Node* b) { return a->id > b->id; });

  node_->grad_buffer()[0] += 1.0;
  for (Node* n : order)
    if (n->backprop) n->backprop(*n);
}

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Div, "div"); }

Tensor add_n(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("add_n: empty operand list");
  for (const auto& x : xs) require_defined(x, "add_n");
  const Shape& shape = xs[0].shape();
  std::vector<std::shared_ptr<Node>> ins;
  ins.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.shape() != shape)
      throw DimensionError("add_n: shape mismatch " + shape_str(shape) + " vs " + shape_str(x.shape()));
    ins.push_back(x.node());
  }
  std::vector<double> out(xs[0].numel(), 0.0);
  for (const auto& in : ins)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += in->value[i];

  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(out);
  for (const auto& in : ins)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : ins)
      if (in->requires_grad) n->parents.push_back(in);
    n->backprop = [ins](Node& self) {
      if (self.grad.empty()) return;
      for (const auto& in : ins)
        if (in->requires_grad) accumulate(*in, self.grad);
    };
  }
  n->id = detail::next_node_id();
  return Tensor(n);
}

Tensor scale(const Tensor& x, double c) {
  require_defined(x, "scale");
  auto xn = x.node();
  std::vector<double> out(xn->value);
  for (double& v : out) v *= c;
  auto node = new_op_node(xn->shape, std::move(out), {xn}, [xn, c](Node& self) {
    if (self.grad.empty()) return;
    auto& g = xn->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
  return Tensor(node);
}

Tensor add_const(const Tensor& x, double c) {
  require_defined(x, "add_const");
  auto xn = x.node();
  std::vector<double> out(xn->value);
  for (double& v : out) v += c;
  auto node = new_op_node(xn->shape, std::move(out), {xn}, [xn](Node& self) {
    if (self.grad.empty()) return;
    accumulate(*xn, self.grad);
  });
  return Tensor(node);
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  auto xn = x.node();
  double s = 0.0;
  for (double v : xn->value) s += v;
  auto node = new_op_node({1}, {s}, {xn}, [xn](Node& self) {
    if (self.grad.empty()) return;
    auto& g = xn->grad_buffer();
    const double go = self.grad[0];
    for (double& v : g) v += go;
  });
  return Tensor(node);
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor relu(const Tensor& x) {
  require_defined(x, "relu");
  auto xn = x.node();
  std::vector<double> out(xn->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xn->value[i] > 0.0 ? xn->value[i] : 0.0;
  auto node = new_op_node(xn->shape, std::move(out), {xn}, [xn](Node& self) {
    if (self.grad.empty()) return;
    auto& g = xn->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xn->value[i] > 0.0) g[i] += self.grad[i];  // subgradient 0 at 0
  });
  return Tensor(node);
}

Tensor sine(const Tensor& x) {
  require_defined(x, "sine");
  auto xn = x.node();
  std::vector<double> out(xn->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(xn->value[i]);
  auto node = new_op_node(xn->shape, std::move(out), {xn}, [xn](Node& self) {
    if (self.grad.empty()) return;
    auto& g = xn->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += std::cos(xn->value[i]) * self.grad[i];
  });
  return Tensor(node);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  auto an = a.node();
  auto bn = b.node();
  const bool vec_left = an->shape.size() == 1;
  if ((an->shape.size() != 2 && !vec_left) || bn->shape.size() != 2)
    throw DimensionError("matmul: expected [m x k] (or [k]) and [k x n], got " + shape_str(an->shape) +
                         " and " + shape_str(bn->shape));
  const std::size_t m = vec_left ? 1 : an->shape[0];
  const std::size_t k = vec_left ? an->shape[0] : an->shape[1];
  const std::size_t n = bn->shape[1];
  if (bn->shape[0] != k)
    throw DimensionError("matmul: inner extents differ, " + shape_str(an->shape) + " vs " +
                         shape_str(bn->shape));

  std::vector<double> out(m * n, 0.0);
  const double* A = an->value.data();
  const double* B = bn->value.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    const double* arow = A + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = arow[t];
      if (av == 0.0) continue;
      const double* brow = B + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }

  Shape out_shape = vec_left ? Shape{n} : Shape{m, n};
  auto node = new_op_node(std::move(out_shape), std::move(out), {an, bn}, [an, bn, m, k, n](Node& self) {
    if (self.grad.empty()) return;
    const double* G = self.grad.data();
    if (an->requires_grad) {
      auto& ga = an->grad_buffer();
      const double* B = bn->value.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        double* garow = ga.data() + i * k;
        for (std::size_t t = 0; t < k; ++t) {
          const double* brow = B + t * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          garow[t] += s;
        }
      }
    }
    if (bn->requires_grad) {
      auto& gb = bn->grad_buffer();
      const double* A = an->value.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        const double* arow = A + i * k;
        for (std::size_t t = 0; t < k; ++t) {
          const double av = arow[t];
          if (av == 0.0) continue;
          double* gbrow = gb.data() + t * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
  return Tensor(node);
}

Tensor transpose(const Tensor& x) {
  require_defined(x, "transpose");
  auto xn = x.node();
  if (xn->shape.size() != 2)
    throw DimensionError("transpose: expected a 2-D tensor, got " + shape_str(xn->shape));
  const std::size_t m = xn->shape[0], n = xn->shape[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xn->value[i * n + j];
  auto node = new_op_node({n, m}, std::move(out), {xn}, [xn, m, n](Node& self) {
    if (self.grad.empty()) return;
    auto& g = xn->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
  return Tensor(node);
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
  require_defined(x, "add_rowwise");
  require_defined(bias, "add_rowwise");
  auto xn = x.node();
  auto bn = bias.node();
  if (bn->shape.size() != 1)
    throw DimensionError("add_rowwise: bias must be 1-D, got " + shape_str(bn->shape));
  const std::size_t cols = bn->shape[0];
  const std::size_t rank = xn->shape.size();
  if ((rank != 1 && rank != 2) || xn->shape[rank - 1] != cols)
    throw DimensionError("add_rowwise: " + shape_str(xn->shape) + " is not rows of width " +
                         std::to_string(cols));
  const std::size_t rows = rank == 1 ? 1 : xn->shape[0];
  std::vector<double> out(xn->value);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] += bn->value[j];
  auto node = new_op_node(xn->shape, std::move(out), {xn, bn}, [xn, bn, rows, cols](Node& self) {
    if (self.grad.empty()) return;
    if (xn->requires_grad) accumulate(*xn, self.grad);
    if (bn->requires_grad) {
      auto& gb = bn->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) gb[j] += self.grad[r * cols + j];
    }
  });
  return Tensor(node);
}

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) throw ContractError("concat: empty operand list");
  for (const auto& x : xs) require_defined(x, "concat");
  const std::size_t rank = xs[0].rank();
  if (!((rank == 1 && axis == 0) || (rank == 2 && axis == 1)))
    throw DimensionError("concat: supported forms are 1-D axis 0 and 2-D axis 1");

  std::vector<std::shared_ptr<Node>> ins;
  ins.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.rank() != rank)
      throw DimensionError("concat: rank mismatch " + shape_str(xs[0].shape()) + " vs " +
                           shape_str(x.shape()));
    ins.push_back(x.node());
  }

  Shape out_shape;
  std::vector<double> out;
  if (rank == 1) {
    std::size_t total = 0;
    for (const auto& in : ins) total += in->shape[0];
    out.reserve(total);
    for (const auto& in : ins) out.insert(out.end(), in->value.begin(), in->value.end());
    out_shape = {total};
  } else {
    const std::size_t rows = ins[0]->shape[0];
    std::size_t total_cols = 0;
    for (const auto& in : ins) {
      if (in->shape[0] != rows)
        throw DimensionError("concat: row count mismatch " + shape_str(ins[0]->shape) + " vs " +
                             shape_str(in->shape));
      total_cols += in->shape[1];
    }
    out.assign(rows * total_cols, 0.0);
    std::size_t col0 = 0;
    for (const auto& in : ins) {
      const std::size_t c = in->shape[1];
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(in->value.data() + r * c, c, out.data() + r * total_cols + col0);
      col0 += c;
    }
    out_shape = {rows, total_cols};
  }

  auto n = std::make_shared<Node>();
  n->shape = std::move(out_shape);
  n->value = std::move(out);
  for (const auto& in : ins)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : ins)
      if (in->requires_grad) n->parents.push_back(in);
    n->backprop = [ins, rank](Node& self) {
      if (self.grad.empty()) return;
      if (rank == 1) {
        std::size_t off = 0;
        for (const auto& in : ins) {
          if (in->requires_grad) {
            auto& g = in->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
          }
          off += in->value.size();
        }
      } else {
        const std::size_t rows = ins[0]->shape[0];
        const std::size_t total_cols = self.value.size() / rows;
        std::size_t col0 = 0;
        for (const auto& in : ins) {
          const std::size_t c = in->shape[1];
          if (in->requires_grad) {
            auto& g = in->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r * total_cols + col0 + j];
          }
          col0 += c;
        }
      }
    };
  }
  n->id = detail::next_node_id();
  return Tensor(n);
}

Tensor select_col(const Tensor& x, std::size_t col) {
  require_defined(x, "select_col");
  auto xn = x.node();
  if (xn->shape.size() != 2)
    throw DimensionError("select_col: expected a 2-D tensor, got " + shape_str(xn->shape));
  const std::size_t rows = xn->shape[0], cols = xn->shape[1];
  if (col >= cols)
    throw DimensionError("select_col: column " + std::to_string(col) + " out of range for " +
                         shape_str(xn->shape));
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = xn->value[r * cols + col];
  auto node = new_op_node({rows}, std::move(out), {xn}, [xn, rows, cols, col](Node& self) {
    if (self.grad.empty()) return;
    auto& g = xn->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) g[r * cols + col] += self.grad[r];
  });
  return Tensor(node);
}

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  auto xn = x.node();
  if (shape_numel(shape) != xn->value.size())
    throw DimensionError("reshape: " + shape_str(xn->shape) + " to " + shape_str(shape) +
                         " changes the element count");
  auto node = new_op_node(std::move(shape), std::vector<double>(xn->value), {xn}, [xn](Node& self) {
    if (self.grad.empty()) return;
    accumulate(*xn, self.grad);
  });
  return Tensor(node);
}

namespace {

double eval_scalar(const std::function<Tensor()>& f, const char* who) {
  Tensor t = f();
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericError(std::string(who) + ": non-finite loss value");
  return v;
}

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    if (!std::isfinite(a) || !std::isfinite(n))
      throw NumericError("gradient_check: non-finite gradient component");
    const double denom = std::max({1.0, std::fabs(a), std::fabs(n)});
    worst = std::max(worst, std::fabs(a - n) / denom);
  }
  return worst;
}

}  // namespace

double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  if (h <= 0.0) throw ContractError("gradient_check: step must be positive");
  Tensor var = x.clone_leaf(true);
  Tensor loss = f(var);
  if (loss.numel() != 1) throw ContractError("gradient_check: f must be scalar-valued");
  if (!std::isfinite(loss.item())) throw NumericError("gradient_check: non-finite loss");
  loss.backward();
  std::vector<double> analytic(x.numel(), 0.0);
  if (var.has_grad()) {
    auto g = var.grad();
    analytic.assign(g.begin(), g.end());
  }

  Tensor probe = x.clone_leaf(false);
  auto pv = probe.mutable_values();
  std::vector<double> numeric(x.numel());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double orig = pv[i];
    pv[i] = orig + h;
    const double fp = eval_scalar([&] { return f(probe); }, "gradient_check");
    pv[i] = orig - h;
    const double fm = eval_scalar([&] { return f(probe); }, "gradient_check");
    pv[i] = orig;
    numeric[i] = (fp - fm) / (2.0 * h);
  }
  return max_rel_error(analytic, numeric);
}

double gradient_check_params(const std::function<Tensor()>& loss, const std::vector<Tensor>& params,
                             double h) {
  if (h <= 0.0) throw ContractError("gradient_check_params: step must be positive");
  for (auto p : params) p.zero_grad();
  Tensor l = loss();
  if (l.numel() != 1) throw ContractError("gradient_check_params: loss must be scalar-valued");
  if (!std::isfinite(l.item())) throw NumericError("gradient_check_params: non-finite loss");
  l.backward();

  double worst = 0.0;
  for (auto p : params) {
    std::vector<double> analytic(p.numel(), 0.0);
    if (p.has_grad()) {
      auto g = p.grad();
      analytic.assign(g.begin(), g.end());
    }
    auto pv = p.mutable_values();
    std::vector<double> numeric(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double orig = pv[i];
      pv[i] = orig + h;
      const double fp = eval_scalar(loss, "gradient_check_params");
      pv[i] = orig - h;
      const double fm = eval_scalar(loss, "gradient_check_params");
      pv[i] = orig;
      numeric[i] = (fp - fm) / (2.0 * h);
    }
    worst = std::max(worst, max_rel_error(analytic, numeric));
  }
  return worst;
}

}  // namespace affect
