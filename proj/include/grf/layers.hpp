#pragma once

#include "grf/graph.hpp"
#include "grf/ops.hpp"
#include "grf/rng.hpp"
#include "grf/tape.hpp"
#include "grf/tensor.hpp"

namespace grf {

struct LayerNormParams {
  Tensor gain;  // init 1
  Tensor bias;  // init 0
  static LayerNormParams make(int64_t dim);
};

// Chebyshev graph convolution: sum_k T_k(Lt) X theta_k + bias, where the
// T_k(Lt) X terms come from the three-term recurrence applied to X.
struct ChebGConvLayer {
  int order = 2;
  std::vector<Tensor> theta;  // order matrices, d_in x d_out
  Tensor bias;                // d_out; undefined when built without bias

  static ChebGConvLayer make(int order, int64_t d_in, int64_t d_out, SplitMix64& rng, bool with_bias = true);
  // lt: j x j rescaled Laplacian; x: (batch*j) x d_in
  Tensor forward(Tape* tape, const Tensor& lt, const Tensor& x, int64_t batch) const;
  int64_t parameter_count() const;
};

// GCN layer with a learnable aggregation matrix: the unconstrained logits
// pass through a sigmoid and a row normalization, so aggregation stays a
// convex combination while training reshapes it freely.
struct LamGConvLayer {
  Tensor adjacency_logits;  // j x j
  Tensor weight;            // d_in x d_out
  Tensor bias;              // d_out

  // Logits start at +2 on self/neighbor cells and -2 elsewhere so the
  // initial aggregation follows the skeleton's normalized adjacency pattern.
  static LamGConvLayer make(const SkeletonGraph& g, int64_t d_in, int64_t d_out, SplitMix64& rng);
  Tensor effective_adjacency(Tape* tape) const;
  Tensor forward(Tape* tape, const Tensor& x, int64_t batch) const;
  int64_t parameter_count() const;
};

struct MultiHeadSelfAttention {
  int heads = 4;
  int64_t dim = 96;
  Tensor qkv_weight;   // dim x 3*dim
  Tensor qkv_bias;     // 3*dim
  Tensor proj_weight;  // dim x dim
  Tensor proj_bias;    // dim

  static MultiHeadSelfAttention make(int64_t dim, int heads, SplitMix64& rng);
  Tensor forward(Tape* tape, const Tensor& x, int64_t batch, int64_t joints, Tensor* attn_out = nullptr) const;
  int64_t parameter_count() const;
};

// Pre-norm residual pair: attention then the learnable-adjacency GCN stack,
// each behind its own shortcut, no MLP.
//   y = x + dropout(mhsa(ln1(x)))
//   z = y + dropout(lam2(relu(lam1(ln2(y)))))
struct GraAttentionBlock {
  LayerNormParams ln1, ln2;
  MultiHeadSelfAttention mhsa;
  LamGConvLayer lam1;  // dim -> hidden
  LamGConvLayer lam2;  // hidden -> dim

  static GraAttentionBlock make(const SkeletonGraph& g, int64_t dim, int heads, int64_t hidden, SplitMix64& rng);
  Tensor forward(Tape* tape, const Tensor& x, int64_t batch, int64_t joints, bool training,
                 double dropout_rate, SplitMix64* dropout_rng, Tensor* attn_out = nullptr) const;
  int64_t parameter_count() const;
};

// Pre-norm residual Chebyshev stack:
//   z = x + dropout(conv2(relu(conv1(ln(x)))))
struct ChebGConvResBlock {
  LayerNormParams ln;
  ChebGConvLayer conv1, conv2;

  static ChebGConvResBlock make(int order, int64_t dim, SplitMix64& rng);
  Tensor forward(Tape* tape, const Tensor& lt, const Tensor& x, int64_t batch, bool training,
                 double dropout_rate, SplitMix64* dropout_rng) const;
  int64_t parameter_count() const;
};

}  // namespace grf
