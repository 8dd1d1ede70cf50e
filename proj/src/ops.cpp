#include "grf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "grf/kernels.hpp"

namespace grf::ops {

namespace {

[[noreturn]] void shape_error(const char* prim, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(prim) + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

[[noreturn]] void shape_error(const char* prim, const Shape& a) {
  throw std::invalid_argument(std::string(prim) + ": bad shape " + shape_str(a));
}

bool track(Tape* tape, std::initializer_list<Tensor> inputs) {
  if (!tape) return false;
  for (const Tensor& t : inputs)
    if (t.requires_grad()) return true;
  return false;
}

void axpy(std::vector<double>& y, const std::vector<double>& x, double c) {
  const int64_t n = static_cast<int64_t>(x.size());
  double* yd = y.data();
  const double* xd = x.data();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (n > 65536)
  for (int64_t i = 0; i < n; ++i) yd[i] += c * xd[i];
}

// Rows-by-last-axis framing shared by softmax, layer_norm, row_normalize.
std::pair<int64_t, int64_t> row_frame(const char* prim, const Tensor& a) {
  if (a.ndim() < 1 || a.size() == 0) shape_error(prim, a.shape());
  int64_t cols = a.dim(a.ndim() - 1);
  return {a.size() / cols, cols};
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  kernels::gemm_nn(out.data(), a.data(), b.data(), m, n, k, false);
  if (track(tape, {a, b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out, m, k, n] {
      const double* g = out.grad().data();
      if (a.requires_grad()) kernels::gemm_nt(a.grad().data(), g, b.data(), m, k, n, true);
      if (b.requires_grad()) kernels::gemm_tn(b.grad().data(), a.data(), g, k, n, m, true);
      out.zero_grad();
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.size();
  double* o = out.data();
  const double* ad = a.data();
  const double* bd = b.data();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (n > 65536)
  for (int64_t i = 0; i < n; ++i) o[i] = ad[i] + bd[i];
  if (track(tape, {a, b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out] {
      if (a.requires_grad()) axpy(a.grad(), out.grad(), 1.0);
      if (b.requires_grad()) axpy(b.grad(), out.grad(), 1.0);
      out.zero_grad();
    });
  }
  return out;
}

Tensor add_bias(Tape* tape, const Tensor& a, const Tensor& bias) {
  if (bias.ndim() != 1 || a.ndim() < 1 || a.dim(a.ndim() - 1) != bias.dim(0))
    shape_error("add_bias", a.shape(), bias.shape());
  auto [rows, cols] = row_frame("add_bias", a);
  Tensor out = Tensor::zeros(a.shape());
  double* o = out.data();
  const double* ad = a.data();
  const double* bd = bias.data();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (rows > 64)
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) o[r * cols + c] = ad[r * cols + c] + bd[c];
  if (track(tape, {a, bias})) {
    out.set_requires_grad(true);
    tape->record([a, bias, out, rows, cols] {
      const double* g = out.grad().data();
      if (a.requires_grad()) axpy(a.grad(), out.grad(), 1.0);
      if (bias.requires_grad()) {
        double* db = bias.grad().data();
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < cols; ++c) db[c] += g[r * cols + c];
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor scale(Tape* tape, const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.size();
  double* o = out.data();
  const double* ad = a.data();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (n > 65536)
  for (int64_t i = 0; i < n; ++i) o[i] = c * ad[i];
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, c] {
      if (a.requires_grad()) axpy(a.grad(), out.grad(), c);
      out.zero_grad();
    });
  }
  return out;
}

Tensor transpose_last_two(Tape* tape, const Tensor& a) {
  if (a.ndim() != 2 && a.ndim() != 3) shape_error("transpose_last_two", a.shape());
  const int64_t blocks = a.ndim() == 3 ? a.dim(0) : 1;
  const int64_t r = a.dim(a.ndim() - 2), c = a.dim(a.ndim() - 1);
  Shape out_shape = a.shape();
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  Tensor out = Tensor::zeros(out_shape);
  const double* ad = a.data();
  double* o = out.data();
  for (int64_t s = 0; s < blocks; ++s)
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < c; ++j) o[s * r * c + j * r + i] = ad[s * r * c + i * c + j];
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, blocks, r, c] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        const double* g = out.grad().data();
        for (int64_t s = 0; s < blocks; ++s)
          for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < c; ++j) da[s * r * c + i * c + j] += g[s * r * c + j * r + i];
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor reshape(Tape* tape, const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size()) shape_error("reshape", a.shape(), shape);
  Tensor out = Tensor::from(std::move(shape), a.values());
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out] {
      if (a.requires_grad()) axpy(a.grad(), out.grad(), 1.0);
      out.zero_grad();
    });
  }
  return out;
}

Tensor concat_last(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_last: no inputs");
  Shape lead = parts[0].shape();
  lead.pop_back();
  int64_t total = 0;
  for (const Tensor& p : parts) {
    Shape pl = p.shape();
    if (pl.empty()) shape_error("concat_last", p.shape());
    int64_t w = pl.back();
    pl.pop_back();
    if (pl != lead) shape_error("concat_last", parts[0].shape(), p.shape());
    total += w;
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out = Tensor::zeros(out_shape);
  const int64_t rows = out.size() / total;
  int64_t off = 0;
  for (const Tensor& p : parts) {
    const int64_t w = p.dim(p.ndim() - 1);
    const double* pd = p.data();
    double* o = out.data();
    for (int64_t r = 0; r < rows; ++r)
      std::memcpy(o + r * total + off, pd + r * w, static_cast<size_t>(w) * sizeof(double));
    off += w;
  }
  bool need = false;
  for (const Tensor& p : parts) need = need || (tape && p.requires_grad());
  if (need) {
    out.set_requires_grad(true);
    tape->record([parts, out, rows, total] {
      const double* g = out.grad().data();
      int64_t off = 0;
      for (const Tensor& p : parts) {
        const int64_t w = p.dim(p.ndim() - 1);
        if (p.requires_grad()) {
          double* dp = p.grad().data();
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < w; ++c) dp[r * w + c] += g[r * total + off + c];
        }
        off += w;
      }
      out.zero_grad();
    });
  }
  return out;
}

std::vector<Tensor> split_last(Tape* tape, const Tensor& a, const std::vector<int64_t>& widths) {
  if (a.ndim() < 1) shape_error("split_last", a.shape());
  const int64_t last = a.dim(a.ndim() - 1);
  int64_t total = 0;
  for (int64_t w : widths) total += w;
  if (total != last) shape_error("split_last", a.shape(), Shape(widths));
  const int64_t rows = a.size() / last;
  std::vector<Tensor> outs;
  int64_t off = 0;
  for (int64_t w : widths) {
    Shape s = a.shape();
    s.back() = w;
    Tensor o = Tensor::zeros(s);
    double* od = o.data();
    const double* ad = a.data();
    for (int64_t r = 0; r < rows; ++r)
      std::memcpy(od + r * w, ad + r * last + off, static_cast<size_t>(w) * sizeof(double));
    outs.push_back(o);
    off += w;
  }
  if (track(tape, {a})) {
    for (Tensor& o : outs) o.set_requires_grad(true);
    tape->record([a, outs, widths, rows, last] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        int64_t off = 0;
        for (size_t i = 0; i < outs.size(); ++i) {
          const int64_t w = widths[i];
          const double* g = outs[i].grad().data();
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < w; ++c) da[r * last + off + c] += g[r * w + c];
          off += w;
        }
      }
      for (const Tensor& o : outs) o.zero_grad();
    });
  }
  return outs;
}

Tensor relu(Tape* tape, const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.size();
  double* o = out.data();
  const double* ad = a.data();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (n > 65536)
  for (int64_t i = 0; i < n; ++i) o[i] = ad[i] > 0.0 ? ad[i] : 0.0;
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, n] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        const double* ad = a.data();
        const double* g = out.grad().data();
        for (int64_t i = 0; i < n; ++i)
          if (ad[i] > 0.0) da[i] += g[i];
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor sigmoid(Tape* tape, const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.size();
  double* o = out.data();
  const double* ad = a.data();
  for (int64_t i = 0; i < n; ++i) o[i] = 1.0 / (1.0 + std::exp(-ad[i]));
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, n] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        const double* y = out.data();
        const double* g = out.grad().data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor softmax_last_axis(Tape* tape, const Tensor& a) {
  auto [rows, cols] = row_frame("softmax_last_axis", a);
  Tensor out = Tensor::zeros(a.shape());
  kernels::softmax_rows(out.data(), a.data(), rows, cols);
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, rows = rows, cols = cols] {
      if (a.requires_grad())
        kernels::softmax_backward_rows(a.grad().data(), out.data(), out.grad().data(), rows, cols);
      out.zero_grad();
    });
  }
  return out;
}

Tensor row_normalize(Tape* tape, const Tensor& a) {
  auto [rows, cols] = row_frame("row_normalize", a);
  Tensor out = Tensor::zeros(a.shape());
  std::vector<double> sums(static_cast<size_t>(rows));
  const double* ad = a.data();
  double* o = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int64_t c = 0; c < cols; ++c) s += ad[r * cols + c];
    if (!(s > 0.0)) throw std::invalid_argument("row_normalize: row " + std::to_string(r) + " has non-positive sum");
    sums[static_cast<size_t>(r)] = s;
    for (int64_t c = 0; c < cols; ++c) o[r * cols + c] = ad[r * cols + c] / s;
  }
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, sums = std::move(sums), rows = rows, cols = cols] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        const double* y = out.data();
        const double* g = out.grad().data();
        for (int64_t r = 0; r < rows; ++r) {
          double dot = 0.0;
          for (int64_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
          const double inv = 1.0 / sums[static_cast<size_t>(r)];
          for (int64_t c = 0; c < cols; ++c) da[r * cols + c] += (g[r * cols + c] - dot) * inv;
        }
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor layer_norm(Tape* tape, const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  auto [rows, cols] = row_frame("layer_norm", a);
  if (gain.ndim() != 1 || gain.dim(0) != cols) shape_error("layer_norm", a.shape(), gain.shape());
  if (bias.ndim() != 1 || bias.dim(0) != cols) shape_error("layer_norm", a.shape(), bias.shape());
  Tensor out = Tensor::zeros(a.shape());
  std::vector<double> xhat(static_cast<size_t>(a.size()));
  std::vector<double> rstd(static_cast<size_t>(rows));
  kernels::layernorm_rows(out.data(), xhat.data(), rstd.data(), a.data(), gain.data(), bias.data(),
                          rows, cols, eps);
  if (track(tape, {a, gain, bias})) {
    out.set_requires_grad(true);
    tape->record([a, gain, bias, out, xhat = std::move(xhat), rstd = std::move(rstd), rows = rows,
                  cols = cols] {
      const double* g = out.grad().data();
      std::vector<double> dgain_scratch, dbias_scratch;
      double* dgain = gain.requires_grad() ? gain.grad().data()
                                           : (dgain_scratch.assign(static_cast<size_t>(cols), 0.0),
                                              dgain_scratch.data());
      double* dbias = bias.requires_grad() ? bias.grad().data()
                                           : (dbias_scratch.assign(static_cast<size_t>(cols), 0.0),
                                              dbias_scratch.data());
      std::vector<double> dx_scratch;
      double* dx = a.requires_grad() ? a.grad().data()
                                     : (dx_scratch.assign(static_cast<size_t>(rows * cols), 0.0),
                                        dx_scratch.data());
      kernels::layernorm_backward_rows(dx, dgain, dbias, g, xhat.data(), rstd.data(), gain.data(),
                                       rows, cols);
      out.zero_grad();
    });
  }
  return out;
}

Tensor dropout(Tape* tape, const Tensor& a, double rate, SplitMix64& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  if (!training || rate == 0.0) return a;
  const int64_t n = a.size();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) mask[static_cast<size_t>(i)] = rng.uniform() >= rate ? keep_scale : 0.0;
  Tensor out = Tensor::zeros(a.shape());
  double* o = out.data();
  const double* ad = a.data();
  for (int64_t i = 0; i < n; ++i) o[i] = ad[i] * mask[static_cast<size_t>(i)];
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, mask = std::move(mask), n] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        const double* g = out.grad().data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i] * mask[static_cast<size_t>(i)];
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor sum_all(Tape* tape, const Tensor& a) {
  double s = 0.0;
  const double* ad = a.data();
  for (int64_t i = 0; i < a.size(); ++i) s += ad[i];
  Tensor out = Tensor::scalar(s);
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out] {
      if (a.requires_grad()) {
        const double g = out.grad()[0];
        double* da = a.grad().data();
        for (int64_t i = 0; i < a.size(); ++i) da[i] += g;
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor mean_all(Tape* tape, const Tensor& a) {
  if (a.size() == 0) shape_error("mean_all", a.shape());
  double s = 0.0;
  const double* ad = a.data();
  for (int64_t i = 0; i < a.size(); ++i) s += ad[i];
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out = Tensor::scalar(s * inv);
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, inv] {
      if (a.requires_grad()) {
        const double g = out.grad()[0] * inv;
        double* da = a.grad().data();
        for (int64_t i = 0; i < a.size(); ++i) da[i] += g;
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor square(Tape* tape, const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.size();
  double* o = out.data();
  const double* ad = a.data();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (n > 65536)
  for (int64_t i = 0; i < n; ++i) o[i] = ad[i] * ad[i];
  if (track(tape, {a})) {
    out.set_requires_grad(true);
    tape->record([a, out, n] {
      if (a.requires_grad()) {
        double* da = a.grad().data();
        const double* ad = a.data();
        const double* g = out.grad().data();
        for (int64_t i = 0; i < n; ++i) da[i] += 2.0 * ad[i] * g[i];
      }
      out.zero_grad();
    });
  }
  return out;
}

Tensor block_lmul(Tape* tape, const Tensor& m, const Tensor& x, int64_t blocks) {
  if (m.ndim() != 2 || m.dim(0) != m.dim(1)) shape_error("block_lmul", m.shape());
  const int64_t j = m.dim(0);
  if (x.ndim() != 2 || x.dim(0) != blocks * j) shape_error("block_lmul", m.shape(), x.shape());
  const int64_t cols = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  kernels::block_lmul(out.data(), m.data(), x.data(), blocks, j, cols);
  if (track(tape, {m, x})) {
    out.set_requires_grad(true);
    tape->record([m, x, out, blocks, j, cols] {
      const double* g = out.grad().data();
      if (m.requires_grad()) kernels::block_lmul_grad_m(m.grad().data(), g, x.data(), blocks, j, cols);
      if (x.requires_grad()) kernels::block_lmul_grad_x(x.grad().data(), m.data(), g, blocks, j, cols);
      out.zero_grad();
    });
  }
  return out;
}

namespace {

// Gather/scatter between the (batch*joints) x dim layout and a contiguous
// j x dh head slice.
void gather_head(double* dst, const double* src, int64_t s, int64_t h, int64_t joints, int64_t dim, int64_t dh) {
  for (int64_t i = 0; i < joints; ++i)
    std::memcpy(dst + i * dh, src + (s * joints + i) * dim + h * dh, static_cast<size_t>(dh) * sizeof(double));
}

void scatter_head_add(double* dst, const double* src, int64_t s, int64_t h, int64_t joints, int64_t dim, int64_t dh) {
  for (int64_t i = 0; i < joints; ++i) {
    double* drow = dst + (s * joints + i) * dim + h * dh;
    const double* srow = src + i * dh;
    for (int64_t c = 0; c < dh; ++c) drow[c] += srow[c];
  }
}

}  // namespace

Tensor attention(Tape* tape, const Tensor& q, const Tensor& k, const Tensor& v,
                 int64_t batch, int64_t joints, int64_t heads, Tensor* attn_out) {
  if (q.shape() != k.shape() || q.shape() != v.shape()) shape_error("attention", q.shape(), k.shape());
  if (q.ndim() != 2 || q.dim(0) != batch * joints) shape_error("attention", q.shape());
  const int64_t dim = q.dim(1);
  if (heads < 1 || dim % heads != 0)
    throw std::invalid_argument("attention: dim " + std::to_string(dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  const int64_t dh = dim / heads;
  const double alpha = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor out = Tensor::zeros(q.shape());
  Tensor attn = Tensor::zeros({batch * heads * joints, joints});

  const int64_t groups = batch * heads;
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (groups > 1)
  for (int64_t grp = 0; grp < groups; ++grp) {
    const int64_t s = grp / heads, h = grp % heads;
    std::vector<double> qh(static_cast<size_t>(joints * dh)), kh(qh.size()), vh(qh.size());
    std::vector<double> scores(static_cast<size_t>(joints * joints));
    std::vector<double> yh(qh.size());
    gather_head(qh.data(), q.data(), s, h, joints, dim, dh);
    gather_head(kh.data(), k.data(), s, h, joints, dim, dh);
    gather_head(vh.data(), v.data(), s, h, joints, dim, dh);
    kernels::serial::gemm_nt(scores.data(), qh.data(), kh.data(), joints, joints, dh, false);
    for (double& sc : scores) sc *= alpha;
    double* arows = attn.data() + grp * joints * joints;
    kernels::serial::softmax_rows(arows, scores.data(), joints, joints);
    kernels::serial::gemm_nn(yh.data(), arows, vh.data(), joints, dh, joints, false);
    scatter_head_add(out.data(), yh.data(), s, h, joints, dim, dh);
  }
  if (attn_out) *attn_out = attn;

  if (track(tape, {q, k, v})) {
    out.set_requires_grad(true);
    tape->record([q, k, v, out, attn, batch, joints, heads, dim, dh, alpha, groups] {
      const double* g = out.grad().data();
      double* dq = q.requires_grad() ? q.grad().data() : nullptr;
      double* dk = k.requires_grad() ? k.grad().data() : nullptr;
      double* dv = v.requires_grad() ? v.grad().data() : nullptr;
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (groups > 1)
      for (int64_t grp = 0; grp < groups; ++grp) {
        const int64_t s = grp / heads, h = grp % heads;
        std::vector<double> qh(static_cast<size_t>(joints * dh)), kh(qh.size()), vh(qh.size());
        std::vector<double> gh(qh.size()), dqh(qh.size(), 0.0), dkh(qh.size(), 0.0), dvh(qh.size(), 0.0);
        std::vector<double> da(static_cast<size_t>(joints * joints));
        std::vector<double> ds(static_cast<size_t>(joints * joints), 0.0);
        gather_head(qh.data(), q.data(), s, h, joints, dim, dh);
        gather_head(kh.data(), k.data(), s, h, joints, dim, dh);
        gather_head(vh.data(), v.data(), s, h, joints, dim, dh);
        gather_head(gh.data(), g, s, h, joints, dim, dh);
        const double* arows = attn.data() + grp * joints * joints;
        // dV_h = A^T G_h ; dA = G_h V_h^T ; dS = softmax'(A, dA) * alpha
        kernels::serial::gemm_tn(dvh.data(), arows, gh.data(), joints, dh, joints, false);
        kernels::serial::gemm_nt(da.data(), gh.data(), vh.data(), joints, joints, dh, false);
        kernels::serial::softmax_backward_rows(ds.data(), arows, da.data(), joints, joints);
        for (double& x : ds) x *= alpha;
        kernels::serial::gemm_nn(dqh.data(), ds.data(), kh.data(), joints, dh, joints, false);
        kernels::serial::gemm_tn(dkh.data(), ds.data(), qh.data(), joints, dh, joints, false);
        if (dq) scatter_head_add(dq, dqh.data(), s, h, joints, dim, dh);
        if (dk) scatter_head_add(dk, dkh.data(), s, h, joints, dim, dh);
        if (dv) scatter_head_add(dv, dvh.data(), s, h, joints, dim, dh);
      }
      out.zero_grad();
    });
  }
  return out;
}

}  // namespace grf::ops
