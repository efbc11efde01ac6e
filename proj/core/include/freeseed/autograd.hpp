#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "freeseed/tensor.hpp"

namespace freeseed::ag {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // reads `grad`, accumulates into inputs
  bool requires_grad = false;

  /// Zero-initialized gradient buffer shaped like `value`.
  Tensor<T>& grad_buffer();
  void accumulate(const Tensor<T>& g);
  bool has_grad() const { return !grad.empty(); }
};

/// Handle to a node of the reverse-mode graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  /// Direct mutation is reserved for leaves (parameters, optimizer steps).
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return node_->has_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(int axis) const { return node_->value.dim(axis); }

  void zero_grad() { node_->grad = Tensor<T>(); }
  /// New leaf holding a copy of the value; gradients stop here.
  Var detach() const { return Var(node_->value, false); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Wraps an op result. Records `backward` only if recording is on and an
/// input requires a gradient.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward);

/// Reverse sweep from a scalar root, seeding d(root)/d(root) = 1.
template <typename T>
void backward(const Var<T>& root);

/// Named trainable leaf. `lower`/`upper` are applied after each optimizer step.
template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
  bool clamped = false;
  T lower{};
  T upper{};
};

template <typename T>
using ParameterList = std::vector<Parameter<T>>;

template <typename T>
void zero_grads(ParameterList<T>& params);

}  // namespace freeseed::ag
