#include "grf/tape.hpp"

namespace grf {

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  if (nodes_.empty()) throw std::invalid_argument("backward: tape is empty");
  loss.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace grf
