#include "grf/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "grf/checkpoint.hpp"
#include "grf/format.hpp"
#include "grf/kernels.hpp"

namespace grf {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("train config: learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("train config: dropout outside [0, 1)");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (decay <= 0.0 || decay > 1.0) throw std::invalid_argument("train config: decay outside (0, 1]");
  if (decay_interval_steps < 1 || decay_interval_epochs < 1)
    throw std::invalid_argument("train config: decay intervals must be >= 1");
}

AdamState AdamState::init(std::span<const NamedTensor> params) {
  AdamState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const NamedTensor& p : params) {
    st.m.emplace_back(static_cast<size_t>(p.tensor.size()), 0.0);
    st.v.emplace_back(static_cast<size_t>(p.tensor.size()), 0.0);
  }
  return st;
}

void adam_step(std::span<const NamedTensor> params, AdamState& state, double lr, double beta1,
               double beta2, double epsilon) {
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state holds " + std::to_string(state.m.size()) +
                                " slots for " + std::to_string(params.size()) + " parameters");
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& p = params[pi].tensor;
    if (static_cast<int64_t>(state.m[pi].size()) != p.size())
      throw std::invalid_argument("adam_step: state shape mismatch for " + params[pi].name);
    double* data = p.data();
    const std::vector<double>& grad = p.grad();
    double* m = state.m[pi].data();
    double* v = state.v[pi].data();
    const int64_t n = p.size();
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count()) if (n > 16384)
    for (int64_t i = 0; i < n; ++i) {
      const double g = grad[static_cast<size_t>(i)];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      data[i] -= lr * mhat / (std::sqrt(vhat) + epsilon);
    }
  }
}

double lr_at(const TrainConfig& cfg, int64_t step, int epoch) {
  if (step < 0 || epoch < 0) throw std::invalid_argument("lr_at: step and epoch must be >= 0");
  const int64_t k = cfg.schedule == TrainConfig::Schedule::Step
                        ? step / cfg.decay_interval_steps
                        : static_cast<int64_t>(epoch / cfg.decay_interval_epochs);
  return cfg.learning_rate * std::pow(cfg.decay, static_cast<double>(k));
}

Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape() || pred.ndim() != 3)
    throw std::invalid_argument("mse_loss: shapes " + shape_str(pred.shape()) + " and " +
                                shape_str(target.shape()) + " (want matching {batch, j, 3})");
  const int64_t batch = pred.dim(0);
  Tensor diff = ops::add(tape, pred, ops::scale(tape, target, -1.0));
  Tensor total = ops::sum_all(tape, ops::square(tape, diff));
  return ops::scale(tape, total, 1.0 / static_cast<double>(batch));
}

double mpjpe(const std::vector<double>& pred, const std::vector<double>& target, int64_t batch,
             int joints, int root_index) {
  if (pred.size() != target.size() ||
      static_cast<int64_t>(pred.size()) != batch * joints * 3)
    throw std::invalid_argument("mpjpe: size mismatch");
  if (root_index < 0 || root_index >= joints) throw std::invalid_argument("mpjpe: bad root index");
  double total = 0.0;
  for (int64_t s = 0; s < batch; ++s) {
    const double* p = pred.data() + s * joints * 3;
    const double* t = target.data() + s * joints * 3;
    const double* pr = p + root_index * 3;
    const double* tr = t + root_index * 3;
    for (int i = 0; i < joints; ++i) {
      const double dx = (p[3 * i] - pr[0]) - (t[3 * i] - tr[0]);
      const double dy = (p[3 * i + 1] - pr[1]) - (t[3 * i + 1] - tr[1]);
      const double dz = (p[3 * i + 2] - pr[2]) - (t[3 * i + 2] - tr[2]);
      total += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  }
  return total / static_cast<double>(batch * joints);
}

Tensor batch_inputs(const Dataset& ds, std::span<const size_t> indices) {
  const int j = ds.skeleton.joint_count;
  Tensor x = Tensor::zeros({static_cast<int64_t>(indices.size()), j, 2});
  double* d = x.data();
  for (size_t s = 0; s < indices.size(); ++s)
    std::copy(ds.samples[indices[s]].joints_2d.begin(), ds.samples[indices[s]].joints_2d.end(),
              d + s * static_cast<size_t>(2 * j));
  return x;
}

Tensor batch_targets(const Dataset& ds, std::span<const size_t> indices) {
  const int j = ds.skeleton.joint_count;
  Tensor y = Tensor::zeros({static_cast<int64_t>(indices.size()), j, 3});
  double* d = y.data();
  for (size_t s = 0; s < indices.size(); ++s)
    std::copy(ds.samples[indices[s]].joints_3d.begin(), ds.samples[indices[s]].joints_3d.end(),
              d + s * static_cast<size_t>(3 * j));
  return y;
}

namespace {

std::vector<double> predict(const GraFormerModel& model, const Dataset& ds,
                            std::span<const size_t> indices) {
  Tensor x = batch_inputs(ds, indices);
  Tensor out = model.forward(nullptr, x, /*training=*/false);
  return out.values();
}

}  // namespace

double evaluate_mpjpe(const GraFormerModel& model, const Dataset& ds, int batch_size) {
  if (ds.samples.empty()) throw std::invalid_argument("evaluate_mpjpe: empty dataset");
  const int j = ds.skeleton.joint_count;
  const int root = ds.skeleton.root_index;
  double total = 0.0;
  int64_t count = 0;
  std::vector<size_t> indices;
  for (size_t start = 0; start < ds.samples.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(ds.samples.size(), start + static_cast<size_t>(batch_size));
    indices.resize(end - start);
    for (size_t i = start; i < end; ++i) indices[i - start] = i;
    std::vector<double> pred = predict(model, ds, indices);
    Tensor target = batch_targets(ds, indices);
    total += mpjpe(pred, target.values(), static_cast<int64_t>(indices.size()), j, root) *
             static_cast<double>(indices.size());
    count += static_cast<int64_t>(indices.size());
  }
  return total / static_cast<double>(count);
}

std::vector<std::tuple<std::string, double, int64_t>> evaluate_mpjpe_by_action(
    const GraFormerModel& model, const Dataset& ds, int batch_size) {
  const int j = ds.skeleton.joint_count;
  const int root = ds.skeleton.root_index;
  std::map<std::string, std::pair<double, int64_t>> agg;
  std::vector<size_t> indices;
  for (size_t start = 0; start < ds.samples.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(ds.samples.size(), start + static_cast<size_t>(batch_size));
    indices.resize(end - start);
    for (size_t i = start; i < end; ++i) indices[i - start] = i;
    std::vector<double> pred = predict(model, ds, indices);
    Tensor target = batch_targets(ds, indices);
    for (size_t s = 0; s < indices.size(); ++s) {
      std::vector<double> p(pred.begin() + static_cast<int64_t>(s) * j * 3,
                            pred.begin() + static_cast<int64_t>(s + 1) * j * 3);
      std::vector<double> t(target.values().begin() + static_cast<int64_t>(s) * j * 3,
                            target.values().begin() + static_cast<int64_t>(s + 1) * j * 3);
      const double err = mpjpe(p, t, 1, j, root);
      auto& slot = agg[ds.samples[indices[s]].action];
      slot.first += err;
      slot.second += 1;
    }
  }
  std::vector<std::tuple<std::string, double, int64_t>> out;
  for (const auto& [action, slot] : agg)
    out.emplace_back(action, slot.first / static_cast<double>(slot.second), slot.second);
  return out;
}

namespace {

void write_log_row(std::ostream& out, const TrainLogRow& row) {
  out << row.epoch << "," << row.step << "," << format_double(row.lr) << ","
      << format_double(row.train_loss) << "," << format_double(row.eval_mpjpe) << ","
      << format_double(row.wall_ms) << "\n";
}

}  // namespace

TrainResult train(GraFormerModel& model, const Dataset& train_set, const Dataset& eval_set,
                  const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (train_set.samples.empty()) throw std::invalid_argument("train: empty dataset");
  if (train_set.skeleton.joint_count != model.skeleton().joint_count)
    throw std::invalid_argument("train: dataset has " + std::to_string(train_set.skeleton.joint_count) +
                                " joints, model expects " + std::to_string(model.skeleton().joint_count));
  const Dataset& eval = eval_set.samples.empty() ? train_set : eval_set;

  SplitMix64 shuffle_rng = make_stream(cfg.seed, Stream::Shuffle);
  SplitMix64 dropout_rng = make_stream(cfg.seed, Stream::Dropout);

  std::span<const NamedTensor> params(model.parameters());
  AdamState adam = AdamState::init(params);

  const size_t n = train_set.samples.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  std::vector<NamedTensor> best_params;
  const auto t0 = std::chrono::steady_clock::now();
  int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = n; i > 1; --i) {
      const size_t r = static_cast<size_t>(shuffle_rng.next_below(i));
      std::swap(order[i - 1], order[r]);
    }
    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(n, start + static_cast<size_t>(cfg.batch_size));
      std::span<const size_t> batch(order.data() + start, end - start);
      const double lr = lr_at(cfg, step, epoch);

      Tensor x = batch_inputs(train_set, batch);
      Tensor target = batch_targets(train_set, batch);
      Tape tape;
      Tensor pred = model.forward(&tape, x, /*training=*/true, &dropout_rng, cfg.dropout);
      Tensor loss = mse_loss(&tape, pred, target);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value))
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                             std::to_string(step));
      for (const NamedTensor& p : params) p.tensor.zero_grad();
      tape.backward(loss);
      adam_step(params, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);

      epoch_loss += loss_value * static_cast<double>(end - start);
      ++step;
    }
    epoch_loss /= static_cast<double>(n);

    TrainLogRow row;
    row.epoch = epoch;
    row.step = step;
    row.lr = lr_at(cfg, step - 1, epoch);
    row.train_loss = epoch_loss;
    row.eval_mpjpe = evaluate_mpjpe(model, eval);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(row);
    if (options.log_stream) write_log_row(*options.log_stream, row);

    if (result.best_epoch < 0 || row.eval_mpjpe < result.best_eval_mpjpe) {
      result.best_eval_mpjpe = row.eval_mpjpe;
      result.best_epoch = epoch;
      best_params.clear();
      for (const NamedTensor& p : params)
        best_params.push_back({p.name, Tensor::from(p.tensor.shape(), p.tensor.values())});
    }
    result.final_train_loss = epoch_loss;
    result.final_eval_mpjpe = row.eval_mpjpe;
    result.epochs_run = epoch + 1;
    if (cfg.stop_below_mpjpe > 0.0 && row.eval_mpjpe < cfg.stop_below_mpjpe) break;
  }

  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    const std::filesystem::path dir(options.out_dir);
    save_snapshot((dir / "final.grfk").string(), params);
    save_snapshot((dir / "best.grfk").string(), best_params);
    std::ofstream cfg_out(dir / "config.json");
    cfg_out << model.config().to_json(model.skeleton());
    std::ofstream log_out(dir / "train_log.csv");
    log_out << "epoch,step,lr,train_loss,eval_mpjpe_mm,wall_ms\n";
    for (const TrainLogRow& row : result.log) write_log_row(log_out, row);
  }
  return result;
}

}  // namespace grf
