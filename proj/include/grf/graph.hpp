#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace grf {

// Small dense symmetric-friendly matrix used by the spectral operators.
struct DenseMatrix {
  int64_t rows = 0, cols = 0;
  std::vector<double> data;  // row-major

  DenseMatrix() = default;
  DenseMatrix(int64_t r, int64_t c) : rows(r), cols(c), data(static_cast<size_t>(r * c), 0.0) {}

  double& at(int64_t i, int64_t j) { return data[static_cast<size_t>(i * cols + j)]; }
  double at(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * cols + j)]; }

  static DenseMatrix identity(int64_t n);
  double max_abs() const;
  double max_asymmetry() const;
};

// Kinematic skeleton: joints plus undirected bone edges and the alignment
// root (pelvis for the human preset, wrist for the hand preset).
struct SkeletonGraph {
  int joint_count = 0;
  std::vector<std::pair<int, int>> edges;
  int root_index = 0;

  void validate() const;  // throws std::invalid_argument

  // Human3.6M 16-joint convention: 0 pelvis, 1-3 right leg, 4-6 left leg,
  // 7 spine, 8 thorax, 9 head, 10-12 left arm, 13-15 right arm.
  static SkeletonGraph human16();
  // Wrist plus five 4-joint finger chains.
  static SkeletonGraph hand21();
  static SkeletonGraph preset(const std::string& name);
  static bool is_preset(const std::string& name);

  // Text format: first line "j root_index", then one "i k" edge per line.
  static SkeletonGraph from_file(const std::string& path);
  void write_file(const std::string& path) const;

  DenseMatrix adjacency() const;
  std::vector<int> degrees() const;
};

// D~^{-1/2} (A + I) D~^{-1/2} with D~ the degree matrix of A + I.
DenseMatrix normalized_adjacency(const SkeletonGraph& g);

// I - D^{-1/2} A D^{-1/2} with D the degree matrix of A (no self-loops).
// Isolated nodes contribute L_ii = 1 and zero off-diagonals.
DenseMatrix graph_laplacian(const SkeletonGraph& g);

// All eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& m);

// Largest eigenvalue; throws std::invalid_argument if m is not symmetric.
double max_eigenvalue(const DenseMatrix& m);

// 2 L / lambda_max - I, spectrum mapped into [-1, 1].
DenseMatrix rescaled_laplacian(const SkeletonGraph& g);

// [T_0(Lt) X, ..., T_{K-1}(Lt) X] via the Chebyshev three-term recurrence
// T_k = 2 Lt T_{k-1} - T_{k-2}, T_0 = I, T_1 = Lt.
std::vector<DenseMatrix> chebyshev_basis(const DenseMatrix& lt, const DenseMatrix& x, int order);

// BFS hop distances from every node to every node; -1 for unreachable.
std::vector<std::vector<int>> hop_distances(const SkeletonGraph& g);

// CSV with shortest round-trip double formatting, one row per line.
std::string matrix_to_csv(const DenseMatrix& m);
void write_matrix_csv(const std::string& path, const DenseMatrix& m);
// 8-bit binary PGM heatmap, min-max scaled per matrix.
void write_matrix_pgm(const std::string& path, const DenseMatrix& m);

}  // namespace grf
