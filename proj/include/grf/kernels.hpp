#pragma once

#include <cstdint>

namespace grf::kernels {

// Worker threads for the parallel kernels. Initialized from GRFK_THREADS
// (when set and positive) or the OpenMP default; set_thread_count overrides
// at runtime. With OpenMP disabled everything runs serially.
int thread_count();
void set_thread_count(int n);

// Serial reference kernels. The parallel versions below split work by output
// row only, so each element is accumulated by a single thread in the same
// order as here; outputs are required to match these bitwise at any thread
// count. The unit tests and the benchmark hold the two sides together.
namespace serial {

// C[m x n] (+)= A[m x k] * B[k x n]
void gemm_nn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate);
// C[m x n] (+)= A[m x k] * B[n x k]^T
void gemm_nt(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate);
// C[m x n] (+)= A[k x m]^T * B[k x n]
void gemm_tn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate);

// y[s] = m * x[s] for `blocks` row blocks of height j; x and y are (blocks*j) x cols.
void block_lmul(double* y, const double* m, const double* x, int64_t blocks, int64_t j, int64_t cols);
// dm[j x j] += sum_s g[s] * x[s]^T
void block_lmul_grad_m(double* dm, const double* g, const double* x, int64_t blocks, int64_t j, int64_t cols);
// dx[s] += m^T * g[s]
void block_lmul_grad_x(double* dx, const double* m, const double* g, int64_t blocks, int64_t j, int64_t cols);

void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols);
// dx += y .* (g - rowdot(g, y))
void softmax_backward_rows(double* dx, const double* y, const double* g, int64_t rows, int64_t cols);

// y = gain .* xhat + bias with xhat the per-row standardization of x;
// xhat and rstd (1/sqrt(var+eps), one per row) are saved for backward.
void layernorm_rows(double* y, double* xhat, double* rstd, const double* x, const double* gain,
                    const double* bias, int64_t rows, int64_t cols, double eps);
void layernorm_backward_rows(double* dx, double* dgain, double* dbias, const double* g,
                             const double* xhat, const double* rstd, const double* gain,
                             int64_t rows, int64_t cols);

}  // namespace serial

void gemm_nn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate);
void gemm_nt(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate);
void gemm_tn(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k, bool accumulate);
void block_lmul(double* y, const double* m, const double* x, int64_t blocks, int64_t j, int64_t cols);
void block_lmul_grad_m(double* dm, const double* g, const double* x, int64_t blocks, int64_t j, int64_t cols);
void block_lmul_grad_x(double* dx, const double* m, const double* g, int64_t blocks, int64_t j, int64_t cols);
void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols);
void softmax_backward_rows(double* dx, const double* y, const double* g, int64_t rows, int64_t cols);
void layernorm_rows(double* y, double* xhat, double* rstd, const double* x, const double* gain,
                    const double* bias, int64_t rows, int64_t cols, double eps);
void layernorm_backward_rows(double* dx, double* dgain, double* dbias, const double* g,
                             const double* xhat, const double* rstd, const double* gain,
                             int64_t rows, int64_t cols);

}  // namespace grf::kernels
