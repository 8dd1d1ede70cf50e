#include "grf/layers.hpp"

#include <cmath>

namespace grf {

namespace {

Tensor uniform_init(Shape shape, double bound, SplitMix64& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  return ops::add(tape, a, ops::scale(tape, b, -1.0));
}

Tensor maybe_dropout(Tape* tape, const Tensor& x, bool training, double rate, SplitMix64* rng) {
  if (!training || rate == 0.0) return x;
  if (!rng) throw std::invalid_argument("dropout: training forward needs an RNG stream");
  return ops::dropout(tape, x, rate, *rng, true);
}

}  // namespace

LayerNormParams LayerNormParams::make(int64_t dim) {
  LayerNormParams p;
  p.gain = Tensor::full({dim}, 1.0, true);
  p.bias = Tensor::zeros({dim}, true);
  return p;
}

ChebGConvLayer ChebGConvLayer::make(int order, int64_t d_in, int64_t d_out, SplitMix64& rng, bool with_bias) {
  if (order < 1) throw std::invalid_argument("ChebGConvLayer: order must be >= 1");
  ChebGConvLayer layer;
  layer.order = order;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (int k = 0; k < order; ++k) layer.theta.push_back(uniform_init({d_in, d_out}, bound, rng));
  if (with_bias) layer.bias = Tensor::zeros({d_out}, true);
  return layer;
}

Tensor ChebGConvLayer::forward(Tape* tape, const Tensor& lt, const Tensor& x, int64_t batch) const {
  if (x.ndim() != 2 || x.dim(0) != batch * lt.dim(0))
    throw std::invalid_argument("chebgconv: input rows " + shape_str(x.shape()) +
                                " do not match batch " + std::to_string(batch) + " of " +
                                std::to_string(lt.dim(0)) + " joints");
  Tensor acc = ops::matmul(tape, x, theta[0]);
  if (order >= 2) {
    Tensor prev = x;
    Tensor cur = ops::block_lmul(tape, lt, x, batch);
    acc = ops::add(tape, acc, ops::matmul(tape, cur, theta[1]));
    for (int k = 2; k < order; ++k) {
      Tensor next = sub(tape, ops::scale(tape, ops::block_lmul(tape, lt, cur, batch), 2.0), prev);
      acc = ops::add(tape, acc, ops::matmul(tape, next, theta[static_cast<size_t>(k)]));
      prev = cur;
      cur = next;
    }
  }
  if (bias.defined()) acc = ops::add_bias(tape, acc, bias);
  return acc;
}

int64_t ChebGConvLayer::parameter_count() const {
  int64_t n = 0;
  for (const Tensor& t : theta) n += t.size();
  if (bias.defined()) n += bias.size();
  return n;
}

LamGConvLayer LamGConvLayer::make(const SkeletonGraph& g, int64_t d_in, int64_t d_out, SplitMix64& rng) {
  LamGConvLayer layer;
  const int64_t j = g.joint_count;
  layer.adjacency_logits = Tensor::full({j, j}, -2.0, true);
  double* logits = layer.adjacency_logits.data();
  for (int64_t i = 0; i < j; ++i) logits[i * j + i] = 2.0;
  for (auto [a, b] : g.edges) {
    logits[a * j + b] = 2.0;
    logits[b * j + a] = 2.0;
  }
  layer.weight = uniform_init({d_in, d_out}, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
  layer.bias = Tensor::zeros({d_out}, true);
  return layer;
}

Tensor LamGConvLayer::effective_adjacency(Tape* tape) const {
  return ops::row_normalize(tape, ops::sigmoid(tape, adjacency_logits));
}

Tensor LamGConvLayer::forward(Tape* tape, const Tensor& x, int64_t batch) const {
  Tensor a_hat = effective_adjacency(tape);
  Tensor y = ops::block_lmul(tape, a_hat, x, batch);
  y = ops::matmul(tape, y, weight);
  return ops::add_bias(tape, y, bias);
}

int64_t LamGConvLayer::parameter_count() const {
  return adjacency_logits.size() + weight.size() + bias.size();
}

MultiHeadSelfAttention MultiHeadSelfAttention::make(int64_t dim, int heads, SplitMix64& rng) {
  if (heads < 1 || dim % heads != 0)
    throw std::invalid_argument("mhsa: dim " + std::to_string(dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  MultiHeadSelfAttention m;
  m.heads = heads;
  m.dim = dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  m.qkv_weight = uniform_init({dim, 3 * dim}, bound, rng);
  m.qkv_bias = Tensor::zeros({3 * dim}, true);
  m.proj_weight = uniform_init({dim, dim}, bound, rng);
  m.proj_bias = Tensor::zeros({dim}, true);
  return m;
}

Tensor MultiHeadSelfAttention::forward(Tape* tape, const Tensor& x, int64_t batch, int64_t joints,
                                       Tensor* attn_out) const {
  if (x.ndim() != 2 || x.dim(1) != dim) throw std::invalid_argument("mhsa: input " + shape_str(x.shape()) +
                                                                    " does not match dim " + std::to_string(dim));
  Tensor qkv = ops::add_bias(tape, ops::matmul(tape, x, qkv_weight), qkv_bias);
  std::vector<Tensor> parts = ops::split_last(tape, qkv, {dim, dim, dim});
  Tensor y = ops::attention(tape, parts[0], parts[1], parts[2], batch, joints, heads, attn_out);
  return ops::add_bias(tape, ops::matmul(tape, y, proj_weight), proj_bias);
}

int64_t MultiHeadSelfAttention::parameter_count() const {
  return qkv_weight.size() + qkv_bias.size() + proj_weight.size() + proj_bias.size();
}

GraAttentionBlock GraAttentionBlock::make(const SkeletonGraph& g, int64_t dim, int heads, int64_t hidden,
                                          SplitMix64& rng) {
  GraAttentionBlock b;
  b.ln1 = LayerNormParams::make(dim);
  b.mhsa = MultiHeadSelfAttention::make(dim, heads, rng);
  b.ln2 = LayerNormParams::make(dim);
  b.lam1 = LamGConvLayer::make(g, dim, hidden, rng);
  b.lam2 = LamGConvLayer::make(g, hidden, dim, rng);
  return b;
}

Tensor GraAttentionBlock::forward(Tape* tape, const Tensor& x, int64_t batch, int64_t joints, bool training,
                                  double dropout_rate, SplitMix64* dropout_rng, Tensor* attn_out) const {
  Tensor h = ops::layer_norm(tape, x, ln1.gain, ln1.bias);
  h = mhsa.forward(tape, h, batch, joints, attn_out);
  h = maybe_dropout(tape, h, training, dropout_rate, dropout_rng);
  Tensor y = ops::add(tape, x, h);

  Tensor z = ops::layer_norm(tape, y, ln2.gain, ln2.bias);
  z = lam1.forward(tape, z, batch);
  z = ops::relu(tape, z);
  z = lam2.forward(tape, z, batch);
  z = maybe_dropout(tape, z, training, dropout_rate, dropout_rng);
  return ops::add(tape, y, z);
}

int64_t GraAttentionBlock::parameter_count() const {
  return ln1.gain.size() + ln1.bias.size() + mhsa.parameter_count() + ln2.gain.size() +
         ln2.bias.size() + lam1.parameter_count() + lam2.parameter_count();
}

ChebGConvResBlock ChebGConvResBlock::make(int order, int64_t dim, SplitMix64& rng) {
  ChebGConvResBlock b;
  b.ln = LayerNormParams::make(dim);
  b.conv1 = ChebGConvLayer::make(order, dim, dim, rng);
  b.conv2 = ChebGConvLayer::make(order, dim, dim, rng);
  return b;
}

Tensor ChebGConvResBlock::forward(Tape* tape, const Tensor& lt, const Tensor& x, int64_t batch,
                                  bool training, double dropout_rate, SplitMix64* dropout_rng) const {
  Tensor h = ops::layer_norm(tape, x, ln.gain, ln.bias);
  h = conv1.forward(tape, lt, h, batch);
  h = ops::relu(tape, h);
  h = conv2.forward(tape, lt, h, batch);
  h = maybe_dropout(tape, h, training, dropout_rate, dropout_rng);
  return ops::add(tape, x, h);
}

int64_t ChebGConvResBlock::parameter_count() const {
  return ln.gain.size() + ln.bias.size() + conv1.parameter_count() + conv2.parameter_count();
}

}  // namespace grf
