#include "semcom/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "semcom/errors.hpp"

namespace semcom {

using detail::Node;

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "}";
  return os.str();
}

namespace detail {

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

void Node::add_grad(const std::vector<double>& g) {
  ensure_grad();
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

}  // namespace detail

namespace {

std::atomic<std::uint64_t> g_next_node_id{1};

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value,
                                bool requires_grad) {
  if (shape_numel(shape) != value.size())
    throw ContractError("tensor: shape " + shape_to_string(shape) +
                        " does not match data length " +
                        std::to_string(value.size()));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2)
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got shape " +
                     shape_to_string(t.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
}

}  // namespace

Tensor make_op_result(Shape shape, std::vector<double> value,
                      std::vector<Tensor> parents,
                      std::function<void(Node&)> backprop) {
  bool track = false;
  for (const auto& p : parents) track = track || p.requires_grad();
  auto node = make_node(std::move(shape), std::move(value), track);
  if (track) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node_);
    node->backprop = std::move(backprop);
  }
  return Tensor(std::move(node));
}

// --- Tensor basics ---------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0),
                          requires_grad));
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, fill),
                          requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v) { return from_data({}, {v}); }

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("tensor: undefined");
  return node_->shape;
}

std::size_t Tensor::numel() const {
  if (!node_) throw ContractError("tensor: undefined");
  return node_->numel();
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size())
    throw ContractError("tensor: axis " + std::to_string(axis) +
                        " out of range for shape " + shape_to_string(s));
  return s[axis];
}

const std::vector<double>& Tensor::data() const {
  if (!node_) throw ContractError("tensor: undefined");
  return node_->value;
}

std::vector<double>& Tensor::mutable_data() {
  if (!node_) throw ContractError("tensor: undefined");
  return node_->value;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const {
  return node_ && node_->grad.size() == node_->value.size() &&
         !node_->value.empty();
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw ContractError("tensor: gradient not populated");
  return node_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
  if (!has_grad())
    throw ContractError("tensor: gradient not populated");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

double Tensor::item() const {
  if (numel() != 1)
    throw ContractError("tensor: item() on non-scalar shape " +
                        shape_to_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detach_copy(bool requires_grad) const {
  return from_data(shape(), data(), requires_grad);
}

void Tensor::backward() const {
  if (!node_) throw ContractError("backward: undefined tensor");
  if (numel() != 1)
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_to_string(shape()));
  if (!node_->requires_grad) return;  // nothing reachable tracks gradients

  // Collect reachable grad-tracking nodes (iterative DFS).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
    }
  }
  // Descending creation order is a topological order of the DAG.
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  for (Node* n : order) n->grad.assign(n->value.size(), 0.0);
  node_->grad[0] = 1.0;

  for (Node* n : order) {
    if (n->backprop) n->backprop(*n);
  }
}

// --- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined("add", a);
  require_defined("add", b);
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  auto* an = a.node_ptr();
  auto* bn = b.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& n) {
    if (an->requires_grad) an->add_grad(n.grad);
    if (bn->requires_grad) bn->add_grad(n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_defined("sub", a);
  require_defined("sub", b);
  require_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  auto* an = a.node_ptr();
  auto* bn = b.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& n) {
    if (an->requires_grad) an->add_grad(n.grad);
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined("mul", a);
  require_defined("mul", b);
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  auto* an = a.node_ptr();
  auto* bn = b.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        an->grad[i] += n.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        bn->grad[i] += n.grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  require_defined("scale", a);
  std::vector<double> out(a.numel());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  auto* an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an, c](Node& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * c;
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  require_defined("add_scalar", a);
  std::vector<double> out(a.numel());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  auto* an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& n) {
    an->add_grad(n.grad);
  });
}

// --- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw ShapeError("matmul: inner dimensions differ, " +
                     shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  std::vector<double> out(m * n);
  {
    ConstMatMap A(a.data().data(), m, k);
    ConstMatMap B(b.data().data(), k, n);
    MatMap C(out.data(), m, n);
    C.noalias() = A * B;
  }
  auto* an = a.node_ptr();
  auto* bn = b.node_ptr();
  return make_op_result({m, n}, std::move(out), {a, b},
                        [an, bn, m, k, n](Node& node) {
    ConstMatMap G(node.grad.data(), m, n);
    if (an->requires_grad) {
      an->ensure_grad();
      ConstMatMap B(bn->value.data(), k, n);
      MatMap GA(an->grad.data(), m, k);
      GA.noalias() += G * B.transpose();
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      ConstMatMap A(an->value.data(), m, k);
      MatMap GB(bn->grad.data(), k, n);
      GB.noalias() += A.transpose() * G;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined("transpose", a);
  require_rank2("transpose", a);
  std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  const auto& av = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  auto* an = a.node_ptr();
  return make_op_result({n, m}, std::move(out), {a}, [an, m, n](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        an->grad[i * n + j] += node.grad[j * m + i];
  });
}

Tensor add_rowvec(const Tensor& mat, const Tensor& vec) {
  require_defined("add_rowvec", mat);
  require_defined("add_rowvec", vec);
  require_rank2("add_rowvec", mat);
  if (vec.rank() != 1 || vec.dim(0) != mat.dim(1))
    throw ShapeError("add_rowvec: vector shape " + shape_to_string(vec.shape()) +
                     " incompatible with matrix " +
                     shape_to_string(mat.shape()));
  std::size_t m = mat.dim(0), n = mat.dim(1);
  std::vector<double> out(m * n);
  const auto& av = mat.data();
  const auto& vv = vec.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + vv[j];
  auto* an = mat.node_ptr();
  auto* bn = vec.node_ptr();
  return make_op_result({m, n}, std::move(out), {mat, vec},
                        [an, bn, m, n](Node& node) {
    if (an->requires_grad) an->add_grad(node.grad);
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          bn->grad[j] += node.grad[i * n + j];
    }
  });
}

Tensor gather_rows(const Tensor& mat, const std::vector<std::size_t>& rows) {
  require_defined("gather_rows", mat);
  require_rank2("gather_rows", mat);
  std::size_t m = mat.dim(0), n = mat.dim(1);
  for (std::size_t r : rows)
    if (r >= m)
      throw ContractError("gather_rows: row index " + std::to_string(r) +
                          " out of range for " + shape_to_string(mat.shape()));
  std::vector<double> out(rows.size() * n);
  const auto& av = mat.data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(av.begin() + rows[i] * n, n, out.begin() + i * n);
  auto* an = mat.node_ptr();
  auto idx = rows;
  return make_op_result({rows.size(), n}, std::move(out), {mat},
                        [an, idx = std::move(idx), n](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j)
        an->grad[idx[i] * n + j] += node.grad[i * n + j];
  });
}

Tensor scatter_rows_with_fill(const Tensor& features, const Tensor& fill,
                              const std::vector<std::size_t>& positions,
                              std::size_t total_rows) {
  require_defined("scatter_rows_with_fill", features);
  require_defined("scatter_rows_with_fill", fill);
  require_rank2("scatter_rows_with_fill", features);
  std::size_t r = features.dim(0), n = features.dim(1);
  if (fill.rank() != 1 || fill.dim(0) != n)
    throw ShapeError("scatter_rows_with_fill: fill shape " +
                     shape_to_string(fill.shape()) + " incompatible with " +
                     shape_to_string(features.shape()));
  if (positions.size() != r)
    throw ContractError(
        "scatter_rows_with_fill: positions count " +
        std::to_string(positions.size()) + " != feature rows " +
        std::to_string(r));
  std::vector<char> taken(total_rows, 0);
  for (std::size_t p : positions) {
    if (p >= total_rows)
      throw ContractError("scatter_rows_with_fill: position " +
                          std::to_string(p) + " out of range " +
                          std::to_string(total_rows));
    if (taken[p])
      throw ContractError("scatter_rows_with_fill: duplicate position " +
                          std::to_string(p));
    taken[p] = 1;
  }
  std::vector<double> out(total_rows * n);
  const auto& fv = fill.data();
  for (std::size_t i = 0; i < total_rows; ++i)
    std::copy_n(fv.begin(), n, out.begin() + i * n);
  const auto& xv = features.data();
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(xv.begin() + i * n, n, out.begin() + positions[i] * n);
  auto* fn = features.node_ptr();
  auto* gn = fill.node_ptr();
  auto pos = positions;
  auto filled = taken;
  return make_op_result({total_rows, n}, std::move(out), {features, fill},
                        [fn, gn, pos = std::move(pos),
                         filled = std::move(filled), n](Node& node) {
    if (fn->requires_grad) {
      fn->ensure_grad();
      for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = 0; j < n; ++j)
          fn->grad[i * n + j] += node.grad[pos[i] * n + j];
    }
    if (gn->requires_grad) {
      gn->ensure_grad();
      for (std::size_t row = 0; row < filled.size(); ++row) {
        if (filled[row]) continue;
        for (std::size_t j = 0; j < n; ++j)
          gn->grad[j] += node.grad[row * n + j];
      }
    }
  });
}

Tensor slice_cols(const Tensor& mat, std::size_t start, std::size_t count) {
  require_defined("slice_cols", mat);
  require_rank2("slice_cols", mat);
  std::size_t m = mat.dim(0), n = mat.dim(1);
  if (start + count > n)
    throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") exceeds columns " +
                     std::to_string(n));
  std::vector<double> out(m * count);
  const auto& av = mat.data();
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(av.begin() + i * n + start, count, out.begin() + i * count);
  auto* an = mat.node_ptr();
  return make_op_result({m, count}, std::move(out), {mat},
                        [an, m, n, start, count](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j)
        an->grad[i * n + start + j] += node.grad[i * count + j];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  std::size_t m = parts[0].dim(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2("concat_cols", p);
    if (p.dim(0) != m)
      throw ShapeError("concat_cols: row count mismatch " +
                       shape_to_string(p.shape()));
    total += p.dim(1);
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::size_t c = p.dim(1);
    const auto& pv = p.data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pv.begin() + i * c, c, out.begin() + i * total + offset);
    offset += c;
  }
  std::vector<std::size_t> widths;
  std::vector<Node*> nodes;
  for (const auto& p : parts) {
    widths.push_back(p.dim(1));
    nodes.push_back(p.node_ptr());
  }
  return make_op_result({m, total}, std::move(out), parts,
                        [nodes = std::move(nodes), widths = std::move(widths),
                         m, total](Node& node) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      std::size_t c = widths[k];
      if (nodes[k]->requires_grad) {
        nodes[k]->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j)
            nodes[k]->grad[i * c + j] += node.grad[i * total + offset + j];
      }
      offset += c;
    }
  });
}

Tensor reorder(const Tensor& a, const std::vector<std::size_t>& index_map,
               Shape out_shape) {
  require_defined("reorder", a);
  if (index_map.size() != a.numel() ||
      shape_numel(out_shape) != a.numel())
    throw ShapeError("reorder: map size " + std::to_string(index_map.size()) +
                     " and out shape " + shape_to_string(out_shape) +
                     " must both cover " + std::to_string(a.numel()) +
                     " elements");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (index_map[i] >= av.size())
      throw ContractError("reorder: index out of range");
    out[i] = av[index_map[i]];
  }
  auto* an = a.node_ptr();
  auto map = index_map;
  return make_op_result(std::move(out_shape), std::move(out), {a},
                        [an, map = std::move(map)](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < map.size(); ++i)
      an->grad[map[i]] += node.grad[i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined("reshape", a);
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_to_string(a.shape()) +
                     " as " + shape_to_string(shape));
  auto* an = a.node_ptr();
  return make_op_result(std::move(shape), a.data(), {a}, [an](Node& node) {
    an->add_grad(node.grad);
  });
}

// --- nonlinearities --------------------------------------------------------

Tensor softmax_rows(const Tensor& mat) {
  require_defined("softmax_rows", mat);
  require_rank2("softmax_rows", mat);
  std::size_t m = mat.dim(0), n = mat.dim(1);
  std::vector<double> out(m * n);
  const auto& av = mat.data();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = av[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, av[i * n + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(av[i * n + j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  auto* an = mat.node_ptr();
  return make_op_result({m, n}, std::move(out), {mat}, [an, m, n](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        dot += node.grad[i * n + j] * node.value[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        an->grad[i * n + j] +=
            node.value[i * n + j] * (node.grad[i * n + j] - dot);
    }
  });
}

Tensor layer_norm_rows(const Tensor& mat, const Tensor& gamma,
                       const Tensor& beta, double eps) {
  require_defined("layer_norm_rows", mat);
  require_rank2("layer_norm_rows", mat);
  std::size_t m = mat.dim(0), n = mat.dim(1);
  if (gamma.rank() != 1 || gamma.dim(0) != n || beta.rank() != 1 ||
      beta.dim(0) != n)
    throw ShapeError("layer_norm_rows: gamma/beta must be length-" +
                     std::to_string(n) + " vectors");
  const auto& av = mat.data();
  const auto& gv = gamma.data();
  const auto& bv = beta.data();
  std::vector<double> out(m * n);
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += av[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double d = av[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (av[i * n + j] - mean) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gv[j] + bv[j];
    }
  }
  auto* an = mat.node_ptr();
  auto* gn = gamma.node_ptr();
  auto* bn = beta.node_ptr();
  return make_op_result({m, n}, std::move(out), {mat, gamma, beta},
                        [an, gn, bn, m, n, xhat = std::move(xhat),
                         inv_std = std::move(inv_std)](Node& node) {
    for (std::size_t i = 0; i < m; ++i) {
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (std::size_t j = 0; j < n; ++j)
          gn->grad[j] += node.grad[i * n + j] * xhat[i * n + j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) bn->grad[j] += node.grad[i * n + j];
      }
      if (an->requires_grad) {
        an->ensure_grad();
        double mean_dy = 0.0, mean_dy_xhat = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double dy = node.grad[i * n + j] * gn->value[j];
          mean_dy += dy;
          mean_dy_xhat += dy * xhat[i * n + j];
        }
        mean_dy /= static_cast<double>(n);
        mean_dy_xhat /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          double dy = node.grad[i * n + j] * gn->value[j];
          an->grad[i * n + j] +=
              inv_std[i] * (dy - mean_dy - xhat[i * n + j] * mean_dy_xhat);
        }
      }
    }
  });
}

namespace {
// tanh-approximate GELU constants
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;
}  // namespace

Tensor gelu(const Tensor& a) {
  require_defined("gelu", a);
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = av[i];
    double u = kGeluScale * (x + kGeluCubic * x * x * x);
    out[i] = 0.5 * x * (1.0 + std::tanh(u));
  }
  auto* an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      double x = an->value[i];
      double u = kGeluScale * (x + kGeluCubic * x * x * x);
      double t = std::tanh(u);
      double du = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
      double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      an->grad[i] += node.grad[i] * d;
    }
  });
}

Tensor abs_val(const Tensor& a) {
  require_defined("abs_val", a);
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(av[i]);
  auto* an = a.node_ptr();
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      double s = an->value[i] >= 0.0 ? 1.0 : -1.0;
      an->grad[i] += node.grad[i] * s;
    }
  });
}

// --- reductions & losses ---------------------------------------------------

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  auto* an = a.node_ptr();
  return make_op_result({}, {acc}, {a}, [an](Node& node) {
    an->ensure_grad();
    for (double& g : an->grad) g += node.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  require_defined("mean_all", a);
  if (a.numel() == 0) throw ContractError("mean_all: empty tensor");
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  double inv = 1.0 / static_cast<double>(a.numel());
  auto* an = a.node_ptr();
  return make_op_result({}, {acc * inv}, {a}, [an, inv](Node& node) {
    an->ensure_grad();
    for (double& g : an->grad) g += node.grad[0] * inv;
  });
}

Tensor mean_rows(const Tensor& mat) {
  require_defined("mean_rows", mat);
  require_rank2("mean_rows", mat);
  std::size_t m = mat.dim(0), n = mat.dim(1);
  if (m == 0) throw ContractError("mean_rows: empty matrix");
  std::vector<double> out(n, 0.0);
  const auto& av = mat.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
  double inv = 1.0 / static_cast<double>(m);
  for (double& v : out) v *= inv;
  auto* an = mat.node_ptr();
  return make_op_result({n}, std::move(out), {mat}, [an, m, n, inv](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        an->grad[i * n + j] += node.grad[j] * inv;
  });
}

Tensor sum_sq(const Tensor& a) {
  require_defined("sum_sq", a);
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  auto* an = a.node_ptr();
  return make_op_result({}, {acc}, {a}, [an](Node& node) {
    an->ensure_grad();
    for (std::size_t i = 0; i < an->grad.size(); ++i)
      an->grad[i] += 2.0 * an->value[i] * node.grad[0];
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  require_defined("mse", a);
  require_defined("mse", b);
  require_same_shape("mse", a, b);
  if (a.numel() == 0) throw ContractError("mse: empty tensors");
  const auto& av = a.data();
  const auto& bv = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    double d = av[i] - bv[i];
    acc += d * d;
  }
  double inv = 1.0 / static_cast<double>(a.numel());
  auto* an = a.node_ptr();
  auto* bn = b.node_ptr();
  return make_op_result({}, {acc * inv}, {a, b}, [an, bn, inv](Node& node) {
    double g = node.grad[0] * inv * 2.0;
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < an->grad.size(); ++i)
        an->grad[i] += g * (an->value[i] - bn->value[i]);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < bn->grad.size(); ++i)
        bn->grad[i] -= g * (an->value[i] - bn->value[i]);
    }
  });
}

Tensor cross_entropy_logits(const Tensor& logits, std::size_t label) {
  require_defined("cross_entropy_logits", logits);
  std::size_t c;
  if (logits.rank() == 1) {
    c = logits.dim(0);
  } else if (logits.rank() == 2 && logits.dim(0) == 1) {
    c = logits.dim(1);
  } else {
    throw ShapeError("cross_entropy_logits: expected shape {c} or {1,c}, got " +
                     shape_to_string(logits.shape()));
  }
  if (label >= c)
    throw ContractError("cross_entropy_logits: label " + std::to_string(label) +
                        " out of range for " + std::to_string(c) + " classes");
  const auto& lv = logits.data();
  double mx = lv[0];
  for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, lv[j]);
  double z = 0.0;
  for (std::size_t j = 0; j < c; ++j) z += std::exp(lv[j] - mx);
  double loss = std::log(z) + mx - lv[label];
  auto* an = logits.node_ptr();
  return make_op_result({}, {loss}, {logits}, [an, label, c, mx, z](Node& node) {
    an->ensure_grad();
    double g = node.grad[0];
    for (std::size_t j = 0; j < c; ++j) {
      double p = std::exp(an->value[j] - mx) / z;
      an->grad[j] += g * (p - (j == label ? 1.0 : 0.0));
    }
  });
}

Tensor stop_grad(const Tensor& a) {
  require_defined("stop_grad", a);
  // Leaf copy: identity forward, no parents, so zero gradient flows back.
  return Tensor::from_data(a.shape(), a.data(), false);
}

Tensor pass_through_with_values(const Tensor& a, std::vector<double> values) {
  require_defined("pass_through_with_values", a);
  if (values.size() != a.numel())
    throw ShapeError("pass_through_with_values: " +
                     std::to_string(values.size()) +
                     " values for tensor of shape " +
                     shape_to_string(a.shape()));
  auto* an = a.node_ptr();
  return make_op_result(a.shape(), std::move(values), {a}, [an](Node& node) {
    an->add_grad(node.grad);
  });
}

Tensor mean_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw ContractError("mean_of: empty input");
  Tensor acc = scalars[0];
  for (std::size_t i = 1; i < scalars.size(); ++i) acc = add(acc, scalars[i]);
  return scale(acc, 1.0 / static_cast<double>(scalars.size()));
}

}  // namespace semcom
