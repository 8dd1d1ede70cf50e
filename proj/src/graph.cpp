#include "grf/graph.hpp"

#include "grf/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace grf {

DenseMatrix DenseMatrix::identity(int64_t n) {
  DenseMatrix m(n, n);
  for (int64_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

double DenseMatrix::max_abs() const {
  double mx = 0.0;
  for (double v : data) mx = std::max(mx, std::abs(v));
  return mx;
}

double DenseMatrix::max_asymmetry() const {
  double mx = 0.0;
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = i + 1; j < cols; ++j) mx = std::max(mx, std::abs(at(i, j) - at(j, i)));
  return mx;
}

void SkeletonGraph::validate() const {
  if (joint_count < 1) throw std::invalid_argument("skeleton: joint_count must be positive");
  if (root_index < 0 || root_index >= joint_count)
    throw std::invalid_argument("skeleton: root_index " + std::to_string(root_index) + " outside [0, " +
                                std::to_string(joint_count) + ")");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || a >= joint_count || b < 0 || b >= joint_count)
      throw std::invalid_argument("skeleton: edge (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") outside [0, " + std::to_string(joint_count) + ")");
    if (a == b) throw std::invalid_argument("skeleton: self-loop at joint " + std::to_string(a));
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second)
      throw std::invalid_argument("skeleton: duplicate edge (" + std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ")");
  }
}

SkeletonGraph SkeletonGraph::human16() {
  SkeletonGraph g;
  g.joint_count = 16;
  g.root_index = 0;
  g.edges = {{0, 1}, {1, 2}, {2, 3},   {0, 4},   {4, 5},   {5, 6},   {0, 7},   {7, 8},
             {8, 9}, {8, 10}, {10, 11}, {11, 12}, {8, 13}, {13, 14}, {14, 15}};
  return g;
}

SkeletonGraph SkeletonGraph::hand21() {
  SkeletonGraph g;
  g.joint_count = 21;
  g.root_index = 0;
  for (int f = 0; f < 5; ++f) {
    int base = 1 + 4 * f;
    g.edges.emplace_back(0, base);
    for (int k = 0; k < 3; ++k) g.edges.emplace_back(base + k, base + k + 1);
  }
  return g;
}

bool SkeletonGraph::is_preset(const std::string& name) { return name == "human16" || name == "hand21"; }

SkeletonGraph SkeletonGraph::preset(const std::string& name) {
  if (name == "human16") return human16();
  if (name == "hand21") return hand21();
  throw std::invalid_argument("unknown skeleton preset '" + name + "' (expected human16 or hand21)");
}

SkeletonGraph SkeletonGraph::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open skeleton file " + path);
  SkeletonGraph g;
  if (!(in >> g.joint_count >> g.root_index))
    throw std::runtime_error("skeleton file " + path + ": expected 'j root_index' on the first line");
  int a, b;
  while (in >> a >> b) g.edges.emplace_back(a, b);
  g.validate();
  return g;
}

void SkeletonGraph::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write skeleton file " + path);
  out << joint_count << " " << root_index << "\n";
  for (auto [a, b] : edges) out << a << " " << b << "\n";
}

DenseMatrix SkeletonGraph::adjacency() const {
  DenseMatrix a(joint_count, joint_count);
  for (auto [i, k] : edges) {
    a.at(i, k) = 1.0;
    a.at(k, i) = 1.0;
  }
  return a;
}

std::vector<int> SkeletonGraph::degrees() const {
  std::vector<int> d(static_cast<size_t>(joint_count), 0);
  for (auto [i, k] : edges) {
    ++d[static_cast<size_t>(i)];
    ++d[static_cast<size_t>(k)];
  }
  return d;
}

DenseMatrix normalized_adjacency(const SkeletonGraph& g) {
  g.validate();
  const int64_t j = g.joint_count;
  DenseMatrix a_tilde = g.adjacency();
  for (int64_t i = 0; i < j; ++i) a_tilde.at(i, i) += 1.0;
  std::vector<double> dinv(static_cast<size_t>(j));
  for (int64_t i = 0; i < j; ++i) {
    double deg = 0.0;
    for (int64_t k = 0; k < j; ++k) deg += a_tilde.at(i, k);
    dinv[static_cast<size_t>(i)] = 1.0 / std::sqrt(deg);  // deg >= 1 from the self-loop
  }
  DenseMatrix out(j, j);
  for (int64_t i = 0; i < j; ++i)
    for (int64_t k = 0; k < j; ++k)
      out.at(i, k) = dinv[static_cast<size_t>(i)] * a_tilde.at(i, k) * dinv[static_cast<size_t>(k)];
  return out;
}

DenseMatrix graph_laplacian(const SkeletonGraph& g) {
  g.validate();
  const int64_t j = g.joint_count;
  DenseMatrix a = g.adjacency();
  std::vector<int> deg = g.degrees();
  std::vector<double> dinv(static_cast<size_t>(j));
  for (int64_t i = 0; i < j; ++i) {
    int d = deg[static_cast<size_t>(i)];
    dinv[static_cast<size_t>(i)] = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
  }
  DenseMatrix out(j, j);
  for (int64_t i = 0; i < j; ++i) {
    for (int64_t k = 0; k < j; ++k) {
      double v = -dinv[static_cast<size_t>(i)] * a.at(i, k) * dinv[static_cast<size_t>(k)];
      if (i == k) v += 1.0;
      out.at(i, k) = v;
    }
  }
  return out;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("symmetric_eigenvalues: matrix is not square");
  const int64_t n = m.rows;
  DenseMatrix a = m;
  // cyclic Jacobi sweeps; n <= 21 here so convergence is fast
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int64_t p = 0; p < n; ++p)
      for (int64_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
    if (off < 1e-30) break;
    for (int64_t p = 0; p < n; ++p) {
      for (int64_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int64_t i = 0; i < n; ++i) {
          const double aip = a.at(i, p), aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(i, q) = s * aip + c * aiq;
        }
        for (int64_t i = 0; i < n; ++i) {
          const double api = a.at(p, i), aqi = a.at(q, i);
          a.at(p, i) = c * api - s * aqi;
          a.at(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) eig[static_cast<size_t>(i)] = a.at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double max_eigenvalue(const DenseMatrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("max_eigenvalue: matrix is not square");
  if (m.max_asymmetry() > 1e-9 * (1.0 + m.max_abs()))
    throw std::invalid_argument("max_eigenvalue: matrix is not symmetric");
  if (m.rows == 0) throw std::invalid_argument("max_eigenvalue: empty matrix");
  return symmetric_eigenvalues(m).back();
}

DenseMatrix rescaled_laplacian(const SkeletonGraph& g) {
  DenseMatrix lap = graph_laplacian(g);
  const double lmax = max_eigenvalue(lap);
  if (lmax <= 0.0) throw std::invalid_argument("rescaled_laplacian: degenerate spectrum (lambda_max = 0)");
  const int64_t j = lap.rows;
  DenseMatrix out(j, j);
  for (int64_t i = 0; i < j; ++i)
    for (int64_t k = 0; k < j; ++k) out.at(i, k) = 2.0 * lap.at(i, k) / lmax - (i == k ? 1.0 : 0.0);
  return out;
}

std::vector<DenseMatrix> chebyshev_basis(const DenseMatrix& lt, const DenseMatrix& x, int order) {
  if (order < 1) throw std::invalid_argument("chebyshev_basis: order must be >= 1");
  if (lt.rows != lt.cols) throw std::invalid_argument("chebyshev_basis: operator matrix is not square");
  if (x.rows != lt.rows)
    throw std::invalid_argument("chebyshev_basis: operand has " + std::to_string(x.rows) +
                                " rows, operator side is " + std::to_string(lt.rows));
  auto lmul = [&](const DenseMatrix& in) {
    DenseMatrix out(in.rows, in.cols);
    for (int64_t i = 0; i < lt.rows; ++i)
      for (int64_t l = 0; l < lt.cols; ++l) {
        const double v = lt.at(i, l);
        for (int64_t c = 0; c < in.cols; ++c) out.at(i, c) += v * in.at(l, c);
      }
    return out;
  };
  std::vector<DenseMatrix> basis;
  basis.push_back(x);
  if (order >= 2) basis.push_back(lmul(x));
  for (int k = 2; k < order; ++k) {
    DenseMatrix next = lmul(basis[static_cast<size_t>(k - 1)]);
    for (size_t i = 0; i < next.data.size(); ++i)
      next.data[i] = 2.0 * next.data[i] - basis[static_cast<size_t>(k - 2)].data[i];
    basis.push_back(std::move(next));
  }
  return basis;
}

std::vector<std::vector<int>> hop_distances(const SkeletonGraph& g) {
  const int j = g.joint_count;
  std::vector<std::vector<int>> adj(static_cast<size_t>(j));
  for (auto [a, b] : g.edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  std::vector<std::vector<int>> dist(static_cast<size_t>(j), std::vector<int>(static_cast<size_t>(j), -1));
  for (int s = 0; s < j; ++s) {
    std::deque<int> queue{s};
    dist[static_cast<size_t>(s)][static_cast<size_t>(s)] = 0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adj[static_cast<size_t>(u)]) {
        if (dist[static_cast<size_t>(s)][static_cast<size_t>(v)] < 0) {
          dist[static_cast<size_t>(s)][static_cast<size_t>(v)] = dist[static_cast<size_t>(s)][static_cast<size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return dist;
}

std::string matrix_to_csv(const DenseMatrix& m) {
  std::string out;
  for (int64_t i = 0; i < m.rows; ++i) {
    for (int64_t j = 0; j < m.cols; ++j) {
      if (j) out += ",";
      out += format_double(m.at(i, j));
    }
    out += "\n";
  }
  return out;
}

void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << matrix_to_csv(m);
}

void write_matrix_pgm(const std::string& path, const DenseMatrix& m) {
  double lo = m.data.empty() ? 0.0 : m.data[0], hi = lo;
  for (double v : m.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << m.cols << " " << m.rows << "\n255\n";
  for (double v : m.data) {
    const int px = static_cast<int>(std::lround((v - lo) / span * 255.0));
    out.put(static_cast<char>(std::clamp(px, 0, 255)));
  }
}

}  // namespace grf
