#include "grf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "grf/rng.hpp"

namespace grf {

GradCheckReport grad_check(const std::function<Tensor(Tape*)>& f,
                           std::span<const NamedTensor> params, double tol,
                           int64_t probes_per_tensor, uint64_t seed, double step) {
  for (const NamedTensor& p : params) {
    p.tensor.set_requires_grad(true);
    p.tensor.zero_grad();
  }
  Tape tape;
  Tensor loss = f(&tape);
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const NamedTensor& p : params) analytic.push_back(p.tensor.grad());

  GradCheckReport report;
  SplitMix64 rng = make_stream(seed, Stream::Probe);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& t = params[pi].tensor;
    const int64_t n = t.size();
    std::vector<int64_t> indices;
    if (probes_per_tensor <= 0 || probes_per_tensor >= n) {
      indices.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) indices[static_cast<size_t>(i)] = i;
    } else {
      // sample without replacement
      std::vector<int64_t> pool(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
      for (int64_t i = 0; i < probes_per_tensor; ++i) {
        const uint64_t r = i + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(r)]);
      }
      indices.assign(pool.begin(), pool.begin() + probes_per_tensor);
    }
    double* data = t.data();
    for (int64_t idx : indices) {
      const double saved = data[idx];
      data[idx] = saved + step;
      const double up = f(nullptr).item();
      data[idx] = saved - step;
      const double down = f(nullptr).item();
      data[idx] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][static_cast<size_t>(idx)];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_name = params[pi].name;
        report.worst_index = idx;
      }
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace grf
