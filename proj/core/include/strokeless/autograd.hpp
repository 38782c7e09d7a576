#pragma once

// Reverse-mode automatic differentiation over NCHW arrays.
//
// A Var is a handle to a graph node. Operations on Vars record a backward
// closure whenever gradient recording is enabled and at least one input
// requires a gradient; leaf parameters accumulate gradients across calls to
// backward() until zero_grad() is called.

#include <functional>
#include <memory>
#include <vector>

#include "strokeless/array.hpp"

namespace strokeless::ag {

template <class T>
struct Node {
  Array<T> value;
  Array<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Array<T>& grad_buffer() {
    if (grad.size() != value.size()) grad = Array<T>(value.shape());
    return grad;
  }
};

bool grad_enabled() noexcept;

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Array<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }
  static Var parameter(Array<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
  }

  bool defined() const noexcept { return node_ != nullptr; }
  const Array<T>& value() const { return node_->value; }
  /// Direct access for optimizers and initializers; only valid on leaves.
  Array<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t dim(int i) const { return node_->value.dim(i); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  /// Gradient accumulated so far; zero-filled if nothing was propagated.
  const Array<T>& grad() const { return node_->grad_buffer(); }
  Array<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() {
    if (node_->grad.size() == node_->value.size()) node_->grad.fill(T{0});
  }

  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Back-propagates from a single-element root, seeding d(root)/d(root) = 1.
template <class T>
void backward(const Var<T>& root);

template <class T>
Var<T> detach(const Var<T>& x);

// Elementwise, same shape.
template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
/// x: N×C×H×W, w: N×1×H×W broadcast across channels.
template <class T>
Var<T> mul_channel_broadcast(const Var<T>& x, const Var<T>& w);
template <class T>
Var<T> scale(const Var<T>& x, T s);
template <class T>
Var<T> add_scalar(const Var<T>& x, T s);

template <class T>
Var<T> abs(const Var<T>& x);
template <class T>
Var<T> relu(const Var<T>& x);
template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope);
template <class T>
Var<T> sigmoid(const Var<T>& x);
template <class T>
Var<T> tanh(const Var<T>& x);
/// Natural logarithm; inputs must be positive.
template <class T>
Var<T> log(const Var<T>& x);

/// Mean / sum of all elements, returned as a one-element array.
template <class T>
Var<T> mean(const Var<T>& x);
template <class T>
Var<T> sum(const Var<T>& x);

/// Zero-padded 2-D cross-correlation. x: N×Ci×H×W, w: Co×Ci×k×k, b: Co.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad);

template <class T>
Var<T> upsample_nearest2x(const Var<T>& x);

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

/// w / (uᵀ W v) where W is w viewed as Co × (Ci·k·k). u and v are held
/// constant; the gradient flows through the scale factor.
template <class T>
Var<T> spectral_normalize(const Var<T>& w, const Array<T>& u, const Array<T>& v);

/// Forward-only convolution on plain arrays (no graph).
template <class T>
Array<T> conv2d_forward(const Array<T>& x, const Array<T>& w, const Array<T>& b, int stride,
                        int pad);

inline int64_t conv_out_size(int64_t in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace strokeless::ag
