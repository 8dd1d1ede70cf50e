#pragma once

#include <functional>
#include <span>
#include <string>

#include "grf/tape.hpp"
#include "grf/tensor.hpp"

namespace grf {

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  std::string worst_name;
  int64_t worst_index = -1;
  int64_t checked = 0;
};

// Compares analytic gradients against central finite differences.
// `f` rebuilds the forward pass and returns the scalar loss; it is called
// once with a tape for the analytic gradients and twice per probed
// coordinate with tape == nullptr. Per-element error is
// |a - n| / max(1, |a| + |n|); the check passes iff the max stays below
// tol. probes_per_tensor == 0 checks every element, otherwise a seeded
// random subset of each tensor. f must be deterministic (dropout off).
GradCheckReport grad_check(const std::function<Tensor(Tape*)>& f,
                           std::span<const NamedTensor> params, double tol,
                           int64_t probes_per_tensor = 0, uint64_t seed = 0,
                           double step = 1e-5);

}  // namespace grf
