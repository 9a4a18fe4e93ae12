#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "wl/common.hpp"
#include "wl/rng.hpp"

namespace wl {

/// Dense row-major N-dimensional array with an optional gradient buffer.
/// Copying a Tensor is shallow (shared storage), like the usual autograd
/// tensor handle. The scalar type selects the precision mode: float for
/// training, double for gradient verification.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return Tensor(std::move(shape), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    for (T& x : t.impl_->data) x = value;
    return t;
  }

  static Tensor from(Shape shape, std::vector<T> data,
                     bool requires_grad = false) {
    if (static_cast<std::int64_t>(data.size()) != wl::numel(shape))
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  static Tensor randn(Shape shape, Rng& rng, T mean = T(0), T stddev = T(1),
                      bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    for (T& x : t.impl_->data)
      x = static_cast<T>(rng.normal(static_cast<double>(mean),
                                    static_cast<double>(stddev)));
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t numel() const {
    return static_cast<std::int64_t>(impl_->data.size());
  }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }

  T item() const {
    if (numel() != 1)
      throw ContractError("item() called on tensor with " +
                          std::to_string(numel()) + " elements");
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    impl_->requires_grad = rg;
    return *this;
  }

  /// Gradient buffer, allocated zero-filled on first access.
  std::span<T> grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
    return impl_->grad;
  }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }

  /// Drops accumulated gradients (next backward starts from zero).
  void zero_grad() {
    for (T& g : impl_->grad) g = T(0);
  }

  void accumulate_grad(std::span<const T> delta) {
    auto g = grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
  }

  /// Deep copy of the values (gradient state not copied).
  Tensor clone() const {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = impl_->shape;
    t.impl_->data = impl_->data;
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
  }

  bool all_finite() const {
    for (T x : impl_->data)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  /// Identity of the underlying storage; two handles compare equal iff they
  /// share state.
  const void* id() const { return impl_.get(); }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    impl_->shape = std::move(shape);
    for (int d : impl_->shape)
      if (d <= 0)
        throw ShapeError("nonpositive dimension in shape " +
                         shape_str(impl_->shape));
    impl_->data.assign(static_cast<std::size_t>(wl::numel(impl_->shape)), T(0));
    impl_->requires_grad = requires_grad;
  }

  std::shared_ptr<Impl> impl_;
};

/// Reverse-mode tape. Operations append a backward closure in execution
/// order; backward() replays them in reverse, which is a valid topological
/// order for any single forward pass. Parameter gradients accumulate across
/// backward calls until explicitly zeroed.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  void backward(Tensor<T> loss) {
    if (loss.numel() != 1)
      throw ContractError("backward requires a scalar loss, got shape " +
                          shape_str(loss.shape()));
    loss.grad()[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

}  // namespace wl
