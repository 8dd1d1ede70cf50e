#pragma once

#include <vector>

#include "grf/rng.hpp"
#include "grf/tape.hpp"
#include "grf/tensor.hpp"

namespace grf::ops {

// Differentiable primitives. Every function computes the forward value and,
// when `tape` is non-null and any input tracks gradients, records the
// matching backward step. Passing tape == nullptr gives a plain forward
// evaluation. Shape violations throw std::invalid_argument naming the
// primitive and the offending shapes.

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
// a: (... x d), bias: (d); adds bias to every row.
Tensor add_bias(Tape* tape, const Tensor& a, const Tensor& bias);
Tensor scale(Tape* tape, const Tensor& a, double c);
Tensor transpose_last_two(Tape* tape, const Tensor& a);
Tensor reshape(Tape* tape, const Tensor& a, Shape shape);
Tensor concat_last(Tape* tape, const std::vector<Tensor>& parts);
std::vector<Tensor> split_last(Tape* tape, const Tensor& a, const std::vector<int64_t>& widths);
Tensor relu(Tape* tape, const Tensor& a);
Tensor sigmoid(Tape* tape, const Tensor& a);
Tensor softmax_last_axis(Tape* tape, const Tensor& a);
// Divides each row by its sum; rows must have positive sums.
Tensor row_normalize(Tape* tape, const Tensor& a);
Tensor layer_norm(Tape* tape, const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
// Inverted dropout: training mode zeroes each element with probability
// `rate` and scales survivors by 1/(1-rate); eval mode is the identity.
Tensor dropout(Tape* tape, const Tensor& a, double rate, SplitMix64& rng, bool training);
Tensor mean_all(Tape* tape, const Tensor& a);
Tensor sum_all(Tape* tape, const Tensor& a);
Tensor square(Tape* tape, const Tensor& a);

// Per-sample left product: x is (blocks*j) x d, m is j x j; out[s] = m * x[s].
// Gradients flow to both m and x.
Tensor block_lmul(Tape* tape, const Tensor& m, const Tensor& x, int64_t blocks);

// Multi-head scaled dot-product attention over per-sample row blocks.
// q/k/v: (batch*joints) x dim with dim % heads == 0. Per sample and head:
// softmax(Q K^T / sqrt(dim/heads)) V, heads re-concatenated. When attn_out
// is non-null it receives the (batch*heads*joints) x joints attention
// weights (detached).
Tensor attention(Tape* tape, const Tensor& q, const Tensor& k, const Tensor& v,
                 int64_t batch, int64_t joints, int64_t heads, Tensor* attn_out = nullptr);

}  // namespace grf::ops
