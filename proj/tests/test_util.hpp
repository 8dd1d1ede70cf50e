#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "grf/graph.hpp"
#include "grf/rng.hpp"
#include "grf/tensor.hpp"

namespace grf::testutil {

// Naive triple-loop matmul, the reference for every gemm-backed path.
inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                        int64_t m, int64_t k, int64_t n) {
  std::vector<double> c(static_cast<size_t>(m * n), 0.0);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l)
        acc += a[static_cast<size_t>(i * k + l)] * b[static_cast<size_t>(l * n + j)];
      c[static_cast<size_t>(i * n + j)] = acc;
    }
  return c;
}

inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows, b.cols);
  c.data = naive_matmul(a.data, b.data, a.rows, a.cols, b.cols);
  return c;
}

// Chebyshev basis through scalar coefficient expansion and explicit matrix
// powers; independent of the three-term matrix recurrence under test.
inline std::vector<DenseMatrix> cheb_basis_by_coefficients(const DenseMatrix& lt,
                                                           const DenseMatrix& x, int order) {
  // coefficient vectors: T_0 = [1], T_1 = [0, 1], T_k = 2 shift(T_{k-1}) - T_{k-2}
  std::vector<std::vector<double>> coef{{1.0}, {0.0, 1.0}};
  for (int k = 2; k < order; ++k) {
    std::vector<double> c(static_cast<size_t>(k + 1), 0.0);
    for (size_t i = 0; i < coef[static_cast<size_t>(k - 1)].size(); ++i)
      c[i + 1] += 2.0 * coef[static_cast<size_t>(k - 1)][i];
    for (size_t i = 0; i < coef[static_cast<size_t>(k - 2)].size(); ++i)
      c[i] -= coef[static_cast<size_t>(k - 2)][i];
    coef.push_back(std::move(c));
  }
  // explicit powers of lt
  std::vector<DenseMatrix> powers{DenseMatrix::identity(lt.rows)};
  for (int p = 1; p < order; ++p) powers.push_back(naive_matmul(lt, powers.back()));

  std::vector<DenseMatrix> out;
  for (int k = 0; k < order; ++k) {
    DenseMatrix tk(lt.rows, lt.cols);
    for (size_t m = 0; m < coef[static_cast<size_t>(k)].size(); ++m) {
      const double c = coef[static_cast<size_t>(k)][m];
      if (c == 0.0) continue;
      for (size_t i = 0; i < tk.data.size(); ++i) tk.data[i] += c * powers[m].data[i];
    }
    out.push_back(naive_matmul(tk, x));
  }
  return out;
}

// Random connected graph: spanning tree over a shuffled order plus extra
// random edges. Connectivity keeps the zero Laplacian eigenvalue present.
inline SkeletonGraph random_connected_graph(SplitMix64& rng, int min_j = 2, int max_j = 21) {
  SkeletonGraph g;
  g.joint_count = min_j + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_j - min_j + 1)));
  g.root_index = static_cast<int>(rng.next_below(static_cast<uint64_t>(g.joint_count)));
  std::vector<int> order(static_cast<size_t>(g.joint_count));
  for (int i = 0; i < g.joint_count; ++i) order[static_cast<size_t>(i)] = i;
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<size_t>(rng.next_below(i))]);
  std::vector<std::vector<char>> present(static_cast<size_t>(g.joint_count),
                                         std::vector<char>(static_cast<size_t>(g.joint_count), 0));
  for (int i = 1; i < g.joint_count; ++i) {
    const int parent = order[rng.next_below(static_cast<uint64_t>(i))];
    const int child = order[static_cast<size_t>(i)];
    g.edges.emplace_back(parent, child);
    present[static_cast<size_t>(parent)][static_cast<size_t>(child)] = 1;
    present[static_cast<size_t>(child)][static_cast<size_t>(parent)] = 1;
  }
  const int extra = static_cast<int>(rng.next_below(static_cast<uint64_t>(g.joint_count)));
  for (int e = 0; e < extra; ++e) {
    const int a = static_cast<int>(rng.next_below(static_cast<uint64_t>(g.joint_count)));
    const int b = static_cast<int>(rng.next_below(static_cast<uint64_t>(g.joint_count)));
    if (a == b || present[static_cast<size_t>(a)][static_cast<size_t>(b)]) continue;
    g.edges.emplace_back(a, b);
    present[static_cast<size_t>(a)][static_cast<size_t>(b)] = 1;
    present[static_cast<size_t>(b)][static_cast<size_t>(a)] = 1;
  }
  return g;
}

inline SkeletonGraph path_graph(int n) {
  SkeletonGraph g;
  g.joint_count = n;
  g.root_index = 0;
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

inline Tensor random_tensor(Shape shape, SplitMix64& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("grf_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace grf::testutil
