#include "grf/model.hpp"

#include <json.hpp>

namespace grf {

using nlohmann::json;

ModelConfig ModelConfig::defaults() { return ModelConfig{}; }

ModelConfig ModelConfig::small() {
  ModelConfig c;
  c.num_layers = 2;
  c.dim = 64;
  c.dropout = 0.1;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "default") return defaults();
  if (name == "small") return small();
  throw std::invalid_argument("unknown model preset '" + name + "' (expected default or small)");
}

void ModelConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("config: num_layers must be >= 1");
  if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
  if (heads < 1 || dim % heads != 0)
    throw std::invalid_argument("config: dim " + std::to_string(dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  if (cheb_order < 1) throw std::invalid_argument("config: cheb_order must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("config: dropout outside [0, 1)");
  if (lam_hidden_multiple < 1) throw std::invalid_argument("config: lam_hidden_multiple must be >= 1");
  if (!use_graattention && !use_chebblock)
    throw std::invalid_argument("config: at least one of the block types must be enabled");
}

std::string ModelConfig::to_json(const SkeletonGraph& skeleton) const {
  json j;
  j["skeleton"] = skeleton_name;
  j["num_layers"] = num_layers;
  j["dim"] = dim;
  j["heads"] = heads;
  j["cheb_order"] = cheb_order;
  j["dropout"] = dropout;
  j["lam_hidden_multiple"] = lam_hidden_multiple;
  j["use_graattention"] = use_graattention;
  j["use_chebblock"] = use_chebblock;
  j["joint_count"] = skeleton.joint_count;
  j["root_index"] = skeleton.root_index;
  json edges = json::array();
  for (auto [a, b] : skeleton.edges) edges.push_back(json::array({a, b}));
  j["edges"] = edges;
  return j.dump(2);
}

std::pair<ModelConfig, SkeletonGraph> ModelConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  c.skeleton_name = j.at("skeleton").get<std::string>();
  c.num_layers = j.at("num_layers").get<int>();
  c.dim = j.at("dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.cheb_order = j.at("cheb_order").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.lam_hidden_multiple = j.value("lam_hidden_multiple", 2);
  c.use_graattention = j.value("use_graattention", true);
  c.use_chebblock = j.value("use_chebblock", true);
  SkeletonGraph g;
  g.joint_count = j.at("joint_count").get<int>();
  g.root_index = j.at("root_index").get<int>();
  for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  g.validate();
  c.validate();
  return {c, g};
}

GraFormerModel::GraFormerModel(SkeletonGraph skeleton, ModelConfig cfg, uint64_t init_seed)
    : skeleton_(std::move(skeleton)), cfg_(std::move(cfg)) {
  skeleton_.validate();
  cfg_.validate();
  DenseMatrix lt = rescaled_laplacian(skeleton_);
  lt_ = Tensor::from({lt.rows, lt.cols}, lt.data);

  SplitMix64 rng = make_stream(init_seed, Stream::WeightInit);
  embed = ChebGConvLayer::make(cfg_.cheb_order, 2, cfg_.dim, rng);
  const int64_t hidden = static_cast<int64_t>(cfg_.dim) * cfg_.lam_hidden_multiple;
  for (int i = 0; i < cfg_.num_layers; ++i) {
    StackBlock block;
    if (cfg_.use_graattention)
      block.graatt = GraAttentionBlock::make(skeleton_, cfg_.dim, cfg_.heads, hidden, rng);
    if (cfg_.use_chebblock) block.cheb = ChebGConvResBlock::make(cfg_.cheb_order, cfg_.dim, rng);
    blocks.push_back(std::move(block));
  }
  head = ChebGConvLayer::make(cfg_.cheb_order, cfg_.dim, 3, rng);
  register_params();
}

namespace {

void add_cheb(std::vector<NamedTensor>& out, const std::string& prefix, const ChebGConvLayer& layer) {
  for (size_t k = 0; k < layer.theta.size(); ++k)
    out.push_back({prefix + ".theta." + std::to_string(k), layer.theta[k]});
  if (layer.bias.defined()) out.push_back({prefix + ".bias", layer.bias});
}

void add_lam(std::vector<NamedTensor>& out, const std::string& prefix, const LamGConvLayer& layer) {
  out.push_back({prefix + ".adj", layer.adjacency_logits});
  out.push_back({prefix + ".weight", layer.weight});
  out.push_back({prefix + ".bias", layer.bias});
}

void add_ln(std::vector<NamedTensor>& out, const std::string& prefix, const LayerNormParams& ln) {
  out.push_back({prefix + ".gain", ln.gain});
  out.push_back({prefix + ".bias", ln.bias});
}

}  // namespace

void GraFormerModel::register_params() {
  params_.clear();
  add_cheb(params_, "embed", embed);
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string base = "blocks." + std::to_string(i);
    if (blocks[i].graatt) {
      const GraAttentionBlock& b = *blocks[i].graatt;
      add_ln(params_, base + ".graatt.ln1", b.ln1);
      params_.push_back({base + ".graatt.mhsa.qkv.weight", b.mhsa.qkv_weight});
      params_.push_back({base + ".graatt.mhsa.qkv.bias", b.mhsa.qkv_bias});
      params_.push_back({base + ".graatt.mhsa.proj.weight", b.mhsa.proj_weight});
      params_.push_back({base + ".graatt.mhsa.proj.bias", b.mhsa.proj_bias});
      add_ln(params_, base + ".graatt.ln2", b.ln2);
      add_lam(params_, base + ".graatt.lam1", b.lam1);
      add_lam(params_, base + ".graatt.lam2", b.lam2);
    }
    if (blocks[i].cheb) {
      const ChebGConvResBlock& b = *blocks[i].cheb;
      add_ln(params_, base + ".cheb.ln", b.ln);
      add_cheb(params_, base + ".cheb.conv1", b.conv1);
      add_cheb(params_, base + ".cheb.conv2", b.conv2);
    }
  }
  add_cheb(params_, "head", head);
  for (NamedTensor& p : params_) p.tensor.set_requires_grad(true);
}

Tensor GraFormerModel::forward(Tape* tape, const Tensor& x2d, bool training, SplitMix64* dropout_rng,
                               double dropout_override, std::vector<Tensor>* attn_out) const {
  const int64_t j = skeleton_.joint_count;
  int64_t batch = 0;
  Tensor x = x2d;
  if (x2d.ndim() == 3 && x2d.dim(1) == j && x2d.dim(2) == 2) {
    batch = x2d.dim(0);
    x = ops::reshape(tape, x2d, {batch * j, 2});
  } else if (x2d.ndim() == 2 && x2d.dim(1) == 2 && x2d.dim(0) % j == 0) {
    batch = x2d.dim(0) / j;
  } else {
    throw std::invalid_argument("model forward: input " + shape_str(x2d.shape()) +
                                " does not match " + std::to_string(j) + " joints x 2");
  }
  const double rate = dropout_override >= 0.0 ? dropout_override : cfg_.dropout;

  Tensor h = embed.forward(tape, lt_, x, batch);
  for (const StackBlock& block : blocks) {
    if (block.graatt) {
      Tensor attn;
      h = block.graatt->forward(tape, h, batch, j, training, rate, dropout_rng,
                                attn_out ? &attn : nullptr);
      if (attn_out) attn_out->push_back(attn);
    }
    if (block.cheb) h = block.cheb->forward(tape, lt_, h, batch, training, rate, dropout_rng);
  }
  Tensor out = head.forward(tape, lt_, h, batch);
  return ops::reshape(tape, out, {batch, j, 3});
}

int64_t GraFormerModel::parameter_count() const {
  int64_t n = 0;
  for (const NamedTensor& p : params_) n += p.tensor.size();
  return n;
}

std::vector<std::pair<std::string, int64_t>> GraFormerModel::parameter_breakdown() const {
  std::vector<std::pair<std::string, int64_t>> out;
  out.emplace_back("embed", embed.parameter_count());
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string base = "blocks." + std::to_string(i);
    if (blocks[i].graatt) out.emplace_back(base + ".graatt", blocks[i].graatt->parameter_count());
    if (blocks[i].cheb) out.emplace_back(base + ".cheb", blocks[i].cheb->parameter_count());
  }
  out.emplace_back("head", head.parameter_count());
  return out;
}

std::vector<std::pair<std::string, DenseMatrix>> GraFormerModel::lam_adjacencies() const {
  std::vector<std::pair<std::string, DenseMatrix>> out;
  const int64_t j = skeleton_.joint_count;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (!blocks[i].graatt) continue;
    const std::string base = "blocks." + std::to_string(i) + ".graatt";
    for (const auto& [tag, layer] :
         {std::pair<const char*, const LamGConvLayer*>{".lam1", &blocks[i].graatt->lam1},
          std::pair<const char*, const LamGConvLayer*>{".lam2", &blocks[i].graatt->lam2}}) {
      Tensor a_hat = layer->effective_adjacency(nullptr);
      DenseMatrix m(j, j);
      m.data = a_hat.values();
      out.emplace_back(base + tag, std::move(m));
    }
  }
  return out;
}

void GraFormerModel::load_state(const std::vector<NamedTensor>& entries) {
  std::map<std::string, const Tensor*> by_name;
  for (const NamedTensor& e : entries) by_name[e.name] = &e.tensor;
  for (NamedTensor& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: missing entry " + p.name);
    if (it->second->shape() != p.tensor.shape())
      throw std::runtime_error("checkpoint: entry " + p.name + " has shape " +
                               shape_str(it->second->shape()) + ", expected " +
                               shape_str(p.tensor.shape()));
    p.tensor.values() = it->second->values();
  }
}

}  // namespace grf
