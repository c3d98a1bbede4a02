#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eegdiff::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Dense double-precision array with an optional place in a recorded
// computation graph. Copies share storage; use clone()/detach() for a
// fresh buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // New leaf holding a copy of the values, outside any graph.
  Tensor detach() const;
  Tensor clone(bool requires_grad) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Whether newly created op results record their inputs.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
// intermediate gradients are recomputed each call.
void backward(const Tensor& loss);

// d(output)/d(input) for each listed leaf, leaving every stored gradient
// in the graph exactly as it was.
std::vector<std::vector<double>> gradients_of(const Tensor& output, std::span<const Tensor> inputs);

namespace detail {

// Builds an op result; records parents only when grad mode is on and some
// parent requires grad.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward_fn);

}  // namespace detail

}  // namespace eegdiff::nn
