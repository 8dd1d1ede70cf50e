#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace grf {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s);

// Dense double-precision tensor. Tensor is a shared handle: copies alias the
// same storage, like shared_ptr. The gradient buffer is allocated lazily and
// always matches the value buffer in length.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return p_ != nullptr; }
  const Shape& shape() const { return p_->shape; }
  int ndim() const { return static_cast<int>(p_->shape.size()); }
  int64_t dim(int i) const { return p_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(p_->values.size()); }

  double* data() const { return p_->values.data(); }
  std::vector<double>& values() const { return p_->values; }

  bool requires_grad() const { return p_ && p_->requires_grad; }
  void set_requires_grad(bool b) const { p_->requires_grad = b; }

  // Zero-filled on first access.
  std::vector<double>& grad() const;
  bool has_grad() const { return p_ && !p_->grad.empty(); }
  void zero_grad() const;

  double item() const;

 private:
  struct Data {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;
  };
  std::shared_ptr<Data> p_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace grf
