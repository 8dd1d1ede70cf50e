#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "grf/checkpoint.hpp"
#include "grf/data.hpp"
#include "grf/format.hpp"
#include "grf/graph.hpp"
#include "grf/kernels.hpp"
#include "grf/model.hpp"
#include "grf/train.hpp"

namespace fs = std::filesystem;
using namespace grf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SkeletonGraph resolve_skeleton(const std::string& name, const std::string& skeleton_file) {
  if (!skeleton_file.empty()) return SkeletonGraph::from_file(skeleton_file);
  return SkeletonGraph::preset(name);
}

Dataset load_data(const std::string& path, const std::string& skeleton_file) {
  if (!skeleton_file.empty()) return load_dataset(path, SkeletonGraph::from_file(skeleton_file));
  return load_dataset(path);
}

struct CheckpointBundle {
  ModelConfig cfg;
  SkeletonGraph skeleton;
  std::vector<NamedTensor> state;
};

CheckpointBundle load_checkpoint(const std::string& checkpoint, std::string config_path) {
  if (config_path.empty()) config_path = (fs::path(checkpoint).parent_path() / "config.json").string();
  auto [cfg, skeleton] = ModelConfig::from_json(read_file(config_path));
  CheckpointBundle b{std::move(cfg), std::move(skeleton), load_snapshot(checkpoint)};
  return b;
}

struct ModelFlags {
  std::string preset = "default";
  std::string config_file;
  int layers = 0;
  int dim = 0;
  int heads = 0;
  int cheb_order = 0;
  double dropout = -1.0;
  std::string ablation = "none";
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--preset", f.preset, "Model preset: default (N=5, dim=96) or small (N=2, dim=64)")
      ->check(CLI::IsMember({"default", "small"}));
  cmd->add_option("--config", f.config_file, "Model config JSON (overrides the preset)");
  cmd->add_option("--layers", f.layers, "Stacked block pairs N");
  cmd->add_option("--dim", f.dim, "Feature dimension");
  cmd->add_option("--heads", f.heads, "Attention heads");
  cmd->add_option("--cheb-order", f.cheb_order, "Chebyshev order K");
  cmd->add_option("--dropout", f.dropout, "Dropout rate");
  cmd->add_option("--ablation", f.ablation, "none, no-chebblock (model-AT), or no-graattention (model-C)")
      ->check(CLI::IsMember({"none", "no-chebblock", "no-graattention"}));
}

// precedence: preset < config file < explicit flags
ModelConfig assemble_config(const CLI::App* cmd, const ModelFlags& f, SkeletonGraph* skeleton_out) {
  ModelConfig cfg = ModelConfig::preset(f.preset);
  if (!f.config_file.empty()) {
    auto [file_cfg, file_skeleton] = ModelConfig::from_json(read_file(f.config_file));
    cfg = file_cfg;
    if (skeleton_out) *skeleton_out = file_skeleton;
  }
  if (cmd->count("--layers")) cfg.num_layers = f.layers;
  if (cmd->count("--dim")) cfg.dim = f.dim;
  if (cmd->count("--heads")) cfg.heads = f.heads;
  if (cmd->count("--cheb-order")) cfg.cheb_order = f.cheb_order;
  if (cmd->count("--dropout")) cfg.dropout = f.dropout;
  if (f.ablation == "no-chebblock") cfg.use_chebblock = false;
  if (f.ablation == "no-graattention") cfg.use_graattention = false;
  return cfg;
}

int cmd_gen(const std::string& skeleton_name, const std::string& skeleton_file, int count,
            uint64_t seed, const std::string& out, double focal, double depth, double max_angle) {
  SkeletonGraph g = resolve_skeleton(skeleton_name, skeleton_file);
  const std::string name = skeleton_file.empty() ? skeleton_name : "custom";
  Dataset ds = generate_synthetic(g, name, count, seed, CameraParams{focal, depth}, max_angle);
  save_dataset(out, ds);
  std::printf("wrote %zu samples to %s\n", ds.samples.size(), out.c_str());
  return kExitOk;
}

int cmd_train(const CLI::App* cmd, const ModelFlags& mf, const std::string& data_path,
              const std::string& skeleton_file, const std::string& out_dir, TrainConfig tc,
              const std::string& schedule, double eval_frac, const std::string& eval_data) {
  tc.schedule = schedule == "epoch" ? TrainConfig::Schedule::Epoch : TrainConfig::Schedule::Step;

  Dataset full = load_data(data_path, skeleton_file);
  SkeletonGraph skeleton = full.skeleton;
  ModelConfig cfg = assemble_config(cmd, mf, nullptr);
  if (cmd->count("--dropout")) tc.dropout = mf.dropout;
  else tc.dropout = cfg.dropout;
  cfg.dropout = tc.dropout;
  tc.validate();
  cfg.validate();

  Dataset train_set = full, eval_set;
  eval_set.skeleton = skeleton;
  if (!eval_data.empty()) {
    eval_set = load_data(eval_data, skeleton_file);
  } else if (eval_frac > 0.0) {
    std::tie(train_set, eval_set) = split_dataset(full, eval_frac, tc.seed);
  }

  GraFormerModel model(skeleton, cfg, tc.seed);
  std::printf("training on %zu samples (%zu eval), %lld parameters\n", train_set.samples.size(),
              eval_set.samples.size(), static_cast<long long>(model.parameter_count()));

  TrainOptions options;
  options.out_dir = out_dir;
  options.log_stream = &std::cout;
  TrainResult res = train(model, train_set, eval_set, tc, options);

  // echo the effective training setup next to the checkpoints
  {
    std::ofstream echo(fs::path(out_dir) / "train_config.json");
    echo << "{\n"
         << "  \"data\": \"" << data_path << "\",\n"
         << "  \"learning_rate\": " << format_double(tc.learning_rate) << ",\n"
         << "  \"batch_size\": " << tc.batch_size << ",\n"
         << "  \"dropout\": " << format_double(tc.dropout) << ",\n"
         << "  \"epochs\": " << tc.epochs << ",\n"
         << "  \"schedule\": \"" << (tc.schedule == TrainConfig::Schedule::Step ? "step" : "epoch") << "\",\n"
         << "  \"seed\": " << tc.seed << ",\n"
         << "  \"eval_fraction\": " << format_double(eval_frac) << ",\n"
         << "  \"stop_below_mpjpe\": " << format_double(tc.stop_below_mpjpe) << "\n"
         << "}\n";
  }
  std::printf("final train loss %s, eval MPJPE %.2f mm (best %.2f mm at epoch %d)\n",
              format_double(res.final_train_loss).c_str(), res.final_eval_mpjpe, res.best_eval_mpjpe,
              res.best_epoch);
  std::printf("checkpoints written to %s\n", out_dir.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path, const std::string& data_path,
             const std::string& skeleton_file, bool identity_check) {
  Dataset ds = load_data(data_path, skeleton_file);
  if (identity_check) {
    double total = 0.0;
    for (const PoseSample& s : ds.samples)
      total += mpjpe(s.joints_3d, s.joints_3d, 1, ds.skeleton.joint_count, ds.skeleton.root_index);
    std::printf("MPJPE: %.2f mm (identity check, %zu samples)\n", total / static_cast<double>(ds.samples.size()),
                ds.samples.size());
    return kExitOk;
  }
  CheckpointBundle b = load_checkpoint(checkpoint, config_path);
  if (b.skeleton.joint_count != ds.skeleton.joint_count)
    throw std::invalid_argument("checkpoint skeleton has " + std::to_string(b.skeleton.joint_count) +
                                " joints, dataset has " + std::to_string(ds.skeleton.joint_count));
  GraFormerModel model(b.skeleton, b.cfg, 0);
  model.load_state(b.state);
  const double err = evaluate_mpjpe(model, ds);
  std::printf("MPJPE: %.2f mm (%zu samples)\n", err, ds.samples.size());

  bool tagged = false;
  for (const PoseSample& s : ds.samples) tagged = tagged || !s.action.empty();
  if (tagged) {
    std::printf("%-20s %10s %8s\n", "action", "MPJPE(mm)", "samples");
    for (const auto& [action, e, count] : evaluate_mpjpe_by_action(model, ds))
      std::printf("%-20s %10.2f %8lld\n", action.empty() ? "(untagged)" : action.c_str(), e,
                  static_cast<long long>(count));
  }
  return kExitOk;
}

int cmd_inspect(const CLI::App* cmd, const ModelFlags& mf, const std::string& checkpoint,
                const std::string& config_path) {
  ModelConfig cfg;
  SkeletonGraph skeleton = SkeletonGraph::human16();
  if (!checkpoint.empty()) {
    CheckpointBundle b = load_checkpoint(checkpoint, config_path);
    cfg = b.cfg;
    skeleton = b.skeleton;
  } else {
    cfg = assemble_config(cmd, mf, &skeleton);
    if (cfg.skeleton_name != "human16" && SkeletonGraph::is_preset(cfg.skeleton_name))
      skeleton = SkeletonGraph::preset(cfg.skeleton_name);
  }
  GraFormerModel model(skeleton, cfg, 0);
  int64_t sum = 0;
  for (const auto& [name, count] : model.parameter_breakdown()) {
    std::printf("%-24s %10lld\n", name.c_str(), static_cast<long long>(count));
    sum += count;
  }
  std::printf("%-24s %10lld\n", "total", static_cast<long long>(model.parameter_count()));
  if (sum != model.parameter_count()) throw std::runtime_error("inspect: breakdown does not add up");
  return kExitOk;
}

int cmd_export_viz(const std::string& checkpoint, const std::string& config_path, const std::string& out_dir) {
  CheckpointBundle b = load_checkpoint(checkpoint, config_path);
  GraFormerModel model(b.skeleton, b.cfg, 0);
  model.load_state(b.state);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  auto dump = [&](const std::string& name, const DenseMatrix& m) {
    write_matrix_csv((dir / (name + ".csv")).string(), m);
    write_matrix_pgm((dir / (name + ".pgm")).string(), m);
  };

  dump("normalized_adjacency", normalized_adjacency(b.skeleton));
  DenseMatrix lt = rescaled_laplacian(b.skeleton);
  auto cheb = chebyshev_basis(lt, DenseMatrix::identity(lt.rows), 3);
  for (size_t k = 0; k < cheb.size(); ++k) dump("cheb_T" + std::to_string(k), cheb[k]);
  int written = 2 + static_cast<int>(cheb.size());
  for (const auto& [name, mat] : model.lam_adjacencies()) {
    dump(name, mat);
    written += 2;
  }
  std::printf("wrote %d files to %s\n", written * 2 - 2, out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::thread_count();  // honor GRFK_THREADS before any parallel region

  CLI::App app{"graformer: 2D-to-3D pose lifting with graph attention and Chebyshev graph convolutions"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic pose dataset");
  std::string gen_skeleton = "human16", gen_skeleton_file, gen_out;
  int gen_count = 0;
  uint64_t gen_seed = 0;
  double gen_focal = 1000.0, gen_depth = 5000.0, gen_angle = 0.35;
  gen->add_option("--skeleton", gen_skeleton, "Skeleton preset (human16 or hand21)");
  gen->add_option("--skeleton-file", gen_skeleton_file, "Custom skeleton graph file");
  gen->add_option("--count", gen_count, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output dataset path")->required();
  gen->add_option("--focal", gen_focal, "Pinhole focal length (pixel units)")->check(CLI::PositiveNumber);
  gen->add_option("--depth", gen_depth, "Root depth in mm")->check(CLI::PositiveNumber);
  gen->add_option("--max-angle", gen_angle, "Max per-joint rotation (radians)");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a dataset");
  ModelFlags tr_model;
  std::string tr_data, tr_skeleton_file, tr_out = "run", tr_schedule = "step", tr_eval_data;
  double tr_eval_frac = 0.0;
  TrainConfig tc;
  add_model_flags(tr, tr_model);
  tr->add_option("--data", tr_data, "Training dataset (.grfd)")->required();
  tr->add_option("--skeleton-file", tr_skeleton_file, "Custom skeleton graph file");
  tr->add_option("--out", tr_out, "Output directory");
  tr->add_option("--lr", tc.learning_rate, "Initial learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--batch", tc.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  tr->add_option("--epochs", tc.epochs, "Training epochs")->check(CLI::PositiveNumber);
  tr->add_option("--schedule", tr_schedule, "LR schedule: step (x0.9 every 75000 steps) or epoch (x0.9 every 30)")
      ->check(CLI::IsMember({"step", "epoch"}));
  tr->add_option("--seed", tc.seed, "Seed for init, shuffling, and dropout");
  tr->add_option("--eval-frac", tr_eval_frac, "Held-out fraction (0 evaluates on the training set)");
  tr->add_option("--eval-data", tr_eval_data, "Explicit eval dataset");
  tr->add_option("--stop-mpjpe", tc.stop_below_mpjpe, "Stop early once eval MPJPE (mm) drops below this");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint (MPJPE in mm)");
  std::string ev_checkpoint, ev_config, ev_data, ev_skeleton_file;
  bool ev_identity = false;
  ev->add_option("--checkpoint", ev_checkpoint, "Checkpoint .grfk");
  ev->add_option("--config", ev_config, "Model config JSON (default: config.json next to the checkpoint)");
  ev->add_option("--data", ev_data, "Dataset to evaluate")->required();
  ev->add_option("--skeleton-file", ev_skeleton_file, "Custom skeleton graph file");
  ev->add_flag("--identity-check", ev_identity, "Score the targets against themselves (sanity: 0.00 mm)");

  // inspect
  auto* in = app.add_subcommand("inspect", "Report trainable parameter counts");
  ModelFlags in_model;
  std::string in_checkpoint, in_config;
  add_model_flags(in, in_model);
  in->add_option("--checkpoint", in_checkpoint, "Checkpoint .grfk (overrides model flags)");
  in->add_option("--checkpoint-config", in_config, "Config JSON for the checkpoint");

  // export-viz
  auto* xv = app.add_subcommand("export-viz", "Export adjacency/Laplacian heatmaps as CSV and PGM");
  std::string xv_checkpoint, xv_config, xv_out = "viz";
  xv->add_option("--checkpoint", xv_checkpoint, "Checkpoint .grfk")->required();
  xv->add_option("--config", xv_config, "Model config JSON");
  xv->add_option("--out", xv_out, "Output directory");

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen(gen_skeleton, gen_skeleton_file, gen_count, gen_seed, gen_out, gen_focal, gen_depth, gen_angle);
    if (tr->parsed())
      return cmd_train(tr, tr_model, tr_data, tr_skeleton_file, tr_out, tc, tr_schedule, tr_eval_frac, tr_eval_data);
    if (ev->parsed()) return cmd_eval(ev_checkpoint, ev_config, ev_data, ev_skeleton_file, ev_identity);
    if (in->parsed()) return cmd_inspect(in, in_model, in_checkpoint, in_config);
    if (xv->parsed()) return cmd_export_viz(xv_checkpoint, xv_config, xv_out);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
