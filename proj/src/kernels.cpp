#include "grf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace grf::kernels {

namespace {

int hardware_default() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int& current_threads() {
  static int n = [] {
    int def = hardware_default();
    if (const char* env = std::getenv("GRFK_THREADS")) {
      int v = std::atoi(env);
      if (v > 0) def = v;
    }
    return def;
  }();
  return n;
}

}  // namespace

int thread_count() { return current_threads(); }

void set_thread_count(int n) { current_threads() = n > 0 ? n : hardware_default(); }

namespace serial {

void gemm_nn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a + i * k;
    for (int64_t l = 0; l < k; ++l) {
      double av = arow[l];
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

void gemm_tn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (int64_t l = 0; l < k; ++l) {
      double av = a[l * m + i];
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void block_lmul(double* y, const double* m, const double* x, int64_t blocks, int64_t j, int64_t cols) {
  for (int64_t s = 0; s < blocks; ++s)
    gemm_nn(y + s * j * cols, m, x + s * j * cols, j, cols, j, false);
}

void block_lmul_grad_m(double* dm, const double* g, const double* x, int64_t blocks, int64_t j, int64_t cols) {
  for (int64_t i = 0; i < j; ++i) {
    for (int64_t r = 0; r < j; ++r) {
      double acc = 0.0;
      for (int64_t s = 0; s < blocks; ++s) {
        const double* grow = g + (s * j + i) * cols;
        const double* xrow = x + (s * j + r) * cols;
        for (int64_t d = 0; d < cols; ++d) acc += grow[d] * xrow[d];
      }
      dm[i * j + r] += acc;
    }
  }
}

void block_lmul_grad_x(double* dx, const double* m, const double* g, int64_t blocks, int64_t j, int64_t cols) {
  for (int64_t s = 0; s < blocks; ++s) {
    double* dxs = dx + s * j * cols;
    const double* gs = g + s * j * cols;
    gemm_tn(dxs, m, gs, j, cols, j, true);
  }
}

void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* xi = x + r * cols;
    double* yi = y + r * cols;
    double mx = xi[0];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, xi[c]);
    double sum = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      yi[c] = std::exp(xi[c] - mx);
      sum += yi[c];
    }
    double inv = 1.0 / sum;
    for (int64_t c = 0; c < cols; ++c) yi[c] *= inv;
  }
}

void softmax_backward_rows(double* dx, const double* y, const double* g, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* yi = y + r * cols;
    const double* gi = g + r * cols;
    double* di = dx + r * cols;
    double dot = 0.0;
    for (int64_t c = 0; c < cols; ++c) dot += gi[c] * yi[c];
    for (int64_t c = 0; c < cols; ++c) di[c] += yi[c] * (gi[c] - dot);
  }
}

void layernorm_rows(double* y, double* xhat, double* rstd, const double* x, const double* gain,
                    const double* bias, int64_t rows, int64_t cols, double eps) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* xi = x + r * cols;
    double* yi = y + r * cols;
    double* hi = xhat + r * cols;
    double mean = 0.0;
    for (int64_t c = 0; c < cols; ++c) mean += xi[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double d = xi[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    double inv = 1.0 / std::sqrt(var + eps);
    rstd[r] = inv;
    for (int64_t c = 0; c < cols; ++c) {
      hi[c] = (xi[c] - mean) * inv;
      yi[c] = gain[c] * hi[c] + bias[c];
    }
  }
}

void layernorm_backward_rows(double* dx, double* dgain, double* dbias, const double* g,
                             const double* xhat, const double* rstd, const double* gain,
                             int64_t rows, int64_t cols) {
  // dgain/dbias are whole-tensor sums; kept serial over rows so accumulation
  // order is fixed.
  for (int64_t r = 0; r < rows; ++r) {
    const double* gi = g + r * cols;
    const double* hi = xhat + r * cols;
    for (int64_t c = 0; c < cols; ++c) {
      dgain[c] += gi[c] * hi[c];
      dbias[c] += gi[c];
    }
  }
  for (int64_t r = 0; r < rows; ++r) {
    const double* gi = g + r * cols;
    const double* hi = xhat + r * cols;
    double* di = dx + r * cols;
    double mean_gh = 0.0, mean_ghh = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double gh = gi[c] * gain[c];
      mean_gh += gh;
      mean_ghh += gh * hi[c];
    }
    mean_gh /= static_cast<double>(cols);
    mean_ghh /= static_cast<double>(cols);
    for (int64_t c = 0; c < cols; ++c) {
      double gh = gi[c] * gain[c];
      di[c] += rstd[r] * (gh - mean_gh - hi[c] * mean_ghh);
    }
  }
}

}  // namespace serial

// The parallel bodies repeat the serial inner loops verbatim; only the
// outer row loop is split across threads.

void gemm_nn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (m > 8)
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a + i * k;
    for (int64_t l = 0; l < k; ++l) {
      double av = arow[l];
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (m > 8)
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

void gemm_tn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (m > 8)
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (int64_t l = 0; l < k; ++l) {
      double av = a[l * m + i];
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void block_lmul(double* y, const double* m, const double* x, int64_t blocks, int64_t j, int64_t cols) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (blocks > 1)
  for (int64_t s = 0; s < blocks; ++s)
    serial::gemm_nn(y + s * j * cols, m, x + s * j * cols, j, cols, j, false);
}

void block_lmul_grad_m(double* dm, const double* g, const double* x, int64_t blocks, int64_t j, int64_t cols) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (j > 4)
  for (int64_t i = 0; i < j; ++i) {
    for (int64_t r = 0; r < j; ++r) {
      double acc = 0.0;
      for (int64_t s = 0; s < blocks; ++s) {
        const double* grow = g + (s * j + i) * cols;
        const double* xrow = x + (s * j + r) * cols;
        for (int64_t d = 0; d < cols; ++d) acc += grow[d] * xrow[d];
      }
      dm[i * j + r] += acc;
    }
  }
}

void block_lmul_grad_x(double* dx, const double* m, const double* g, int64_t blocks, int64_t j, int64_t cols) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (blocks > 1)
  for (int64_t s = 0; s < blocks; ++s)
    serial::gemm_tn(dx + s * j * cols, m, g + s * j * cols, j, cols, j, true);
}

void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows > 16)
  for (int64_t r = 0; r < rows; ++r)
    serial::softmax_rows(y + r * cols, x + r * cols, 1, cols);
}

void softmax_backward_rows(double* dx, const double* y, const double* g, int64_t rows, int64_t cols) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows > 16)
  for (int64_t r = 0; r < rows; ++r)
    serial::softmax_backward_rows(dx + r * cols, y + r * cols, g + r * cols, 1, cols);
}

void layernorm_rows(double* y, double* xhat, double* rstd, const double* x, const double* gain,
                    const double* bias, int64_t rows, int64_t cols, double eps) {
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows > 16)
  for (int64_t r = 0; r < rows; ++r)
    serial::layernorm_rows(y + r * cols, xhat + r * cols, rstd + r, x + r * cols, gain, bias, 1, cols, eps);
}

void layernorm_backward_rows(double* dx, double* dgain, double* dbias, const double* g,
                             const double* xhat, const double* rstd, const double* gain,
                             int64_t rows, int64_t cols) {
  // dgain/dbias accumulate across rows; stays serial in row order so the
  // result is independent of the thread count. The dx half is row-parallel.
  for (int64_t r = 0; r < rows; ++r) {
    const double* gi = g + r * cols;
    const double* hi = xhat + r * cols;
    for (int64_t c = 0; c < cols; ++c) {
      dgain[c] += gi[c] * hi[c];
      dbias[c] += gi[c];
    }
  }
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (rows > 16)
  for (int64_t r = 0; r < rows; ++r) {
    const double* gi = g + r * cols;
    const double* hi = xhat + r * cols;
    double* di = dx + r * cols;
    double mean_gh = 0.0, mean_ghh = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double gh = gi[c] * gain[c];
      mean_gh += gh;
      mean_ghh += gh * hi[c];
    }
    mean_gh /= static_cast<double>(cols);
    mean_ghh /= static_cast<double>(cols);
    for (int64_t c = 0; c < cols; ++c) {
      double gh = gi[c] * gain[c];
      di[c] += rstd[r] * (gh - mean_gh - hi[c] * mean_ghh);
    }
  }
}

}  // namespace grf::kernels
