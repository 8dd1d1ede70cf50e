#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "grf/data.hpp"
#include "grf/model.hpp"

namespace grf {

// Raised when the loss stops being finite; the CLI maps it to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 64;
  double dropout = 0.25;
  int epochs = 50;
  enum class Schedule { Step, Epoch };
  Schedule schedule = Schedule::Step;
  double decay = 0.9;
  int64_t decay_interval_steps = 75000;
  int decay_interval_epochs = 30;
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // > 0: stop once the per-epoch eval MPJPE drops below this (mm). The
  // caller picks the eval split; pass the training set for overfit runs.
  double stop_below_mpjpe = 0.0;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;

  static AdamState init(std::span<const NamedTensor> params);
};

// Bias-corrected Adam update; reads each parameter's .grad().
void adam_step(std::span<const NamedTensor> params, AdamState& state, double lr, double beta1,
               double beta2, double epsilon);

// lr0 * decay^floor(step / interval) or lr0 * decay^floor(epoch / interval).
double lr_at(const TrainConfig& cfg, int64_t step, int epoch);

// Mean over the batch of each sample's squared Frobenius error.
// pred/target: {batch, j, 3}.
Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target);

// Mean per-joint position error in mm after root alignment of both sides.
// pred/target: batch * j * 3 values, row-major.
double mpjpe(const std::vector<double>& pred, const std::vector<double>& target, int64_t batch,
             int joints, int root_index);

struct TrainLogRow {
  int epoch = 0;
  int64_t step = 0;
  double lr = 0;
  double train_loss = 0;
  double eval_mpjpe = 0;
  double wall_ms = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double final_train_loss = 0;
  double final_eval_mpjpe = 0;
  double best_eval_mpjpe = 0;
  int best_epoch = -1;
  int epochs_run = 0;
};

struct TrainOptions {
  // When set, final.grfk / best.grfk / config.json / train_log.csv land here.
  std::string out_dir;
  std::ostream* log_stream = nullptr;  // per-epoch rows as they happen
};

// Eval-mode forward over a dataset; returns MPJPE in mm.
double evaluate_mpjpe(const GraFormerModel& model, const Dataset& ds, int batch_size = 256);
// Per-action MPJPE for tagged datasets, (action, mpjpe, count).
std::vector<std::tuple<std::string, double, int64_t>> evaluate_mpjpe_by_action(
    const GraFormerModel& model, const Dataset& ds, int batch_size = 256);

// Minibatch Adam training; deterministic for a fixed seed (shuffle and
// dropout streams both derive from it). eval_set empty -> evaluates on the
// training set. Throws NumericalError on non-finite loss.
TrainResult train(GraFormerModel& model, const Dataset& train_set, const Dataset& eval_set,
                  const TrainConfig& cfg, const TrainOptions& options = {});

// Builds {batch, j, 2} inputs and {batch, j, 3} targets from samples.
Tensor batch_inputs(const Dataset& ds, std::span<const size_t> indices);
Tensor batch_targets(const Dataset& ds, std::span<const size_t> indices);

}  // namespace grf
