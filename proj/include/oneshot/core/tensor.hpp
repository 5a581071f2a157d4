#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace oneshot::core {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient slot.
///
/// A Tensor is a handle: copies share storage, which is what lets the tape
/// route gradients back to the exact tensors an operation consumed. Use
/// clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<double> values();
  std::span<const double> values() const;
  double item() const;
  double& operator[](std::size_t i) { return values()[i]; }
  double operator[](std::size_t i) const { return values()[i]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  /// Gradient buffer, allocated as zeros on first access. The gradient slot
  /// is writable through const handles; const only protects the values.
  std::span<double> grad() const;
  void zero_grad();
  void drop_grad();

  Tensor clone() const;
  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }
  std::uintptr_t id() const { return reinterpret_cast<std::uintptr_t>(impl_.get()); }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

}  // namespace oneshot::core
