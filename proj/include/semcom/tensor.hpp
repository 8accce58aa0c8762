#ifndef SEMCOM_TENSOR_HPP
#define SEMCOM_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace semcom {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

// One node of the computation graph. Values are 64-bit floats in row-major
// order. Gradient buffers are allocated lazily during backward().
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward touches this node
  bool requires_grad = false;
  std::uint64_t id = 0;  // creation order; backward runs in descending id
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads

  std::size_t numel() const { return value.size(); }
  void ensure_grad();
  void add_grad(const std::vector<double>& g);
};

}  // namespace detail

// Dense n-dimensional tensor with reverse-mode gradient tracking. Tensor is a
// cheap handle sharing the underlying node; graphs are built by the free
// functions below and differentiated with backward(). Graph construction and
// backward are single-threaded per graph; tensors without grad tracking are
// immutable and safe to share across threads.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double fill, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;

  const std::vector<double>& data() const;
  // In-place mutation of a leaf's values (optimizer updates, attack steps).
  // Must not be called on tensors that participate in a live graph's interior.
  std::vector<double>& mutable_data();

  bool requires_grad() const;
  bool has_grad() const;
  const std::vector<double>& grad() const;  // throws if absent
  std::vector<double>& mutable_grad();      // throws if absent
  void zero_grad();                         // drops the gradient buffer

  double item() const;  // numel() == 1 only

  // Reverse-mode accumulation from a scalar loss. Zeroes the gradients of
  // every reachable node first, then accumulates in descending creation
  // order, so repeated calls never mix gradients from different passes.
  void backward() const;

  // Deep copy with no graph history (leaf).
  Tensor detach_copy(bool requires_grad = false) const;

  detail::Node* node_ptr() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op_result(Shape shape, std::vector<double> value,
                               std::vector<Tensor> parents,
                               std::function<void(detail::Node&)> backprop);
};

// --- primitives ------------------------------------------------------------
// Each op validates shapes and throws ShapeError naming the operation.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);  // {m,k} x {k,n} -> {m,n}
Tensor transpose(const Tensor& a);                // rank 2
Tensor add_rowvec(const Tensor& mat, const Tensor& vec);  // vec broadcast over rows

Tensor gather_rows(const Tensor& mat, const std::vector<std::size_t>& rows);
// Rows of `features` land at `positions` (a set of distinct row indices of the
// output); every other output row is `fill`. Backward routes gradients to the
// feature rows and sums the rest into `fill`.
Tensor scatter_rows_with_fill(const Tensor& features, const Tensor& fill,
                              const std::vector<std::size_t>& positions,
                              std::size_t total_rows);
Tensor slice_cols(const Tensor& mat, std::size_t start, std::size_t count);
Tensor concat_cols(const std::vector<Tensor>& parts);
// out[i] = in[index_map[i]]; index_map must be a bijection on [0, numel).
Tensor reorder(const Tensor& a, const std::vector<std::size_t>& index_map,
               Shape out_shape);
Tensor reshape(const Tensor& a, Shape shape);

Tensor softmax_rows(const Tensor& mat);
Tensor layer_norm_rows(const Tensor& mat, const Tensor& gamma,
                       const Tensor& beta, double eps = 1e-5);
Tensor gelu(const Tensor& a);  // tanh approximation
Tensor abs_val(const Tensor& a);  // d|x|/dx taken as +1 at x = 0

Tensor sum(const Tensor& a);       // -> scalar
Tensor mean_all(const Tensor& a);  // -> scalar
Tensor mean_rows(const Tensor& mat);  // {m,n} -> {n}
Tensor sum_sq(const Tensor& a);    // sum of squares -> scalar
Tensor mse(const Tensor& a, const Tensor& b);  // mean squared error -> scalar
// -log softmax(logits)[label]; logits shape {c} or {1,c}.
Tensor cross_entropy_logits(const Tensor& logits, std::size_t label);

// Identity forward, zero backward ("ng" operator).
Tensor stop_grad(const Tensor& a);

// Straight-through hook: the forward value is `values` verbatim, the incoming
// gradient is passed to `a` unaltered. shape(values) must equal shape(a).
Tensor pass_through_with_values(const Tensor& a, std::vector<double> values);

// Mean of scalar losses, accumulated in argument order.
Tensor mean_of(const std::vector<Tensor>& scalars);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace semcom

#endif  // SEMCOM_TENSOR_HPP
