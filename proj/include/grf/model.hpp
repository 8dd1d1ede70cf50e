#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grf/graph.hpp"
#include "grf/layers.hpp"

namespace grf {

struct ModelConfig {
  std::string skeleton_name = "human16";
  int num_layers = 5;  // stacked (GraAttention, ChebGConv block) pairs
  int dim = 96;
  int heads = 4;
  int cheb_order = 2;
  double dropout = 0.25;
  // GraAttention's GCN pair widens to dim * lam_hidden_multiple between the
  // two LAM-GConv layers.
  int lam_hidden_multiple = 2;
  // Ablation switches: model-AT drops the ChebGConv blocks, model-C drops
  // GraAttention.
  bool use_graattention = true;
  bool use_chebblock = true;

  static ModelConfig defaults();
  static ModelConfig small();
  static ModelConfig preset(const std::string& name);  // "default" | "small"
  void validate() const;

  std::string to_json(const SkeletonGraph& skeleton) const;
  // Parses the config and the embedded skeleton.
  static std::pair<ModelConfig, SkeletonGraph> from_json(const std::string& text);
};

// Embedding ChebGConv (2 -> dim), N stacked {GraAttention, ChebGConv block},
// ChebGConv head (dim -> 3), all driven by one skeleton's rescaled Laplacian.
class GraFormerModel {
 public:
  GraFormerModel(SkeletonGraph skeleton, ModelConfig cfg, uint64_t init_seed);

  // x2d: {batch, j, 2} or {batch*j, 2}. Returns {batch, j, 3}.
  // dropout_override < 0 uses the config rate.
  Tensor forward(Tape* tape, const Tensor& x2d, bool training = false,
                 SplitMix64* dropout_rng = nullptr, double dropout_override = -1.0,
                 std::vector<Tensor>* attn_out = nullptr) const;

  const std::vector<NamedTensor>& parameters() const { return params_; }
  int64_t parameter_count() const;
  std::vector<std::pair<std::string, int64_t>> parameter_breakdown() const;

  const SkeletonGraph& skeleton() const { return skeleton_; }
  const ModelConfig& config() const { return cfg_; }
  const Tensor& laplacian() const { return lt_; }

  // Effective (sigmoid + row-normalized) aggregation matrices of every
  // LAM-GConv layer, keyed by parameter-path prefix.
  std::vector<std::pair<std::string, DenseMatrix>> lam_adjacencies() const;

  void load_state(const std::vector<NamedTensor>& entries);

  struct StackBlock {
    std::optional<GraAttentionBlock> graatt;
    std::optional<ChebGConvResBlock> cheb;
  };

  ChebGConvLayer embed;
  std::vector<StackBlock> blocks;
  ChebGConvLayer head;

 private:
  SkeletonGraph skeleton_;
  ModelConfig cfg_;
  Tensor lt_;  // j x j rescaled Laplacian, constant
  std::vector<NamedTensor> params_;

  void register_params();
};

}  // namespace grf
