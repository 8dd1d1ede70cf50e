#pragma once

#include <functional>
#include <vector>

#include "grf/tensor.hpp"

namespace grf {

// Reverse-mode tape. Each primitive that produces a grad-tracked output
// records one closure; backward() replays them in exact reverse execution
// order. A closure reads its output's accumulated gradient, adds into its
// inputs' gradients, and clears the output gradient, so repeated backward()
// calls accumulate correctly on leaf tensors (parameters and inputs).
class Tape {
 public:
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

}  // namespace grf
