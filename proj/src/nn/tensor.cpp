#include "eegdiff/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace eegdiff::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->value.assign(shape_numel(shape), value);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) + " values for shape " +
                                shape_str(shape));
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw std::out_of_range("Tensor::dim: axis " + std::to_string(axis) + " of " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->value;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return clone(false); }

Tensor Tensor::clone(bool requires_grad) const { return from(shape(), node_->value, requires_grad); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value, std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->is_leaf = false;
#ifndef NDEBUG
  for (double v : n->value) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite value in op result");
  }
#endif
  if (g_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const auto& p) { return p && p->requires_grad; });
    if (any) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor(std::move(n));
}

}  // namespace detail

namespace {

// Post-order over nodes that require grad.
std::vector<detail::Node*> topo_order(detail::Node* root) {
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      auto* p = node->parents[next++].get();
      if (p && p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void run_backward(detail::Node* root, const std::vector<detail::Node*>& order) {
  for (auto* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  auto* root = loss.node().get();
  run_backward(root, topo_order(root));
}

std::vector<std::vector<double>> gradients_of(const Tensor& output, std::span<const Tensor> inputs) {
  if (output.numel() != 1) throw std::invalid_argument("gradients_of: output must be scalar");
  std::vector<std::vector<double>> result;
  if (!output.requires_grad()) {
    for (const auto& in : inputs) result.emplace_back(in.numel(), 0.0);
    return result;
  }
  auto* root = output.node().get();
  const auto order = topo_order(root);
  // Stash leaf gradients so the sweep leaves them untouched.
  std::vector<std::pair<detail::Node*, std::vector<double>>> saved;
  for (auto* n : order) {
    if (n->is_leaf) {
      saved.emplace_back(n, std::move(n->grad));
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  run_backward(root, order);
  for (const auto& in : inputs) {
    auto* n = in.node().get();
    const bool reached = std::find(order.begin(), order.end(), n) != order.end();
    result.push_back(reached ? n->grad : std::vector<double>(in.numel(), 0.0));
  }
  for (auto* n : order) {
    if (!n->is_leaf) n->grad.clear();
  }
  for (auto& [n, g] : saved) n->grad = std::move(g);
  return result;
}

}  // namespace eegdiff::nn
