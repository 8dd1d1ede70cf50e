#include "grf/tensor.hpp"

namespace grf {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.p_ = std::make_shared<Data>();
  t.p_->shape = std::move(shape);
  t.p_->values.assign(static_cast<size_t>(shape_numel(t.p_->shape)), 0.0);
  t.p_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.values()) v = value;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (static_cast<int64_t>(values.size()) != shape_numel(shape))
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                " values for shape " + shape_str(shape));
  Tensor t;
  t.p_ = std::make_shared<Data>();
  t.p_->shape = std::move(shape);
  t.p_->values = std::move(values);
  t.p_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

std::vector<double>& Tensor::grad() const {
  if (p_->grad.empty()) p_->grad.assign(p_->values.size(), 0.0);
  return p_->grad;
}

void Tensor::zero_grad() const {
  if (!p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("Tensor::item: tensor has " + std::to_string(size()) + " elements");
  return p_->values[0];
}

}  // namespace grf
