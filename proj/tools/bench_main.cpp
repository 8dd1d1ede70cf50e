// Benchmark comparing the serial reference kernels against the OpenMP
// versions, plus an end-to-end training step at different thread counts.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "grf/data.hpp"
#include "grf/kernels.hpp"
#include "grf/model.hpp"
#include "grf/rng.hpp"
#include "grf/train.hpp"

using namespace grf;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(size_t n, SplitMix64& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.3f %10.3f %9.2fx\n", name, serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = kernels::thread_count();
  if (argc > 1) threads = std::max(1, std::atoi(argv[1]));
  kernels::set_thread_count(threads);

  SplitMix64 rng(1);
  // shapes taken from the default model: batch 64 of 16 joints at dim 96
  const int64_t rows = 64 * 16, dim = 96, qkv = 288, j = 16;
  auto a = random_vec(static_cast<size_t>(rows * dim), rng);
  auto w = random_vec(static_cast<size_t>(dim * qkv), rng);
  auto m = random_vec(static_cast<size_t>(j * j), rng);
  std::vector<double> out(static_cast<size_t>(rows * qkv));
  std::vector<double> out2(static_cast<size_t>(rows * dim));
  std::vector<double> xhat(a.size()), rstd(static_cast<size_t>(rows));
  auto gain = random_vec(static_cast<size_t>(dim), rng);
  auto bias = random_vec(static_cast<size_t>(dim), rng);

  std::printf("kernel benchmark, %d thread(s) parallel vs serial reference\n", threads);
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  row("gemm_nn 1024x96x288",
      time_ms([&] { kernels::serial::gemm_nn(out.data(), a.data(), w.data(), rows, qkv, dim, false); }, 20),
      time_ms([&] { kernels::gemm_nn(out.data(), a.data(), w.data(), rows, qkv, dim, false); }, 20));

  row("block_lmul 64x16x16x96",
      time_ms([&] { kernels::serial::block_lmul(out2.data(), m.data(), a.data(), 64, j, dim); }, 50),
      time_ms([&] { kernels::block_lmul(out2.data(), m.data(), a.data(), 64, j, dim); }, 50));

  row("softmax_rows 1024x96",
      time_ms([&] { kernels::serial::softmax_rows(out2.data(), a.data(), rows, dim); }, 50),
      time_ms([&] { kernels::softmax_rows(out2.data(), a.data(), rows, dim); }, 50));

  row("layernorm_rows 1024x96",
      time_ms([&] {
        kernels::serial::layernorm_rows(out2.data(), xhat.data(), rstd.data(), a.data(), gain.data(),
                                        bias.data(), rows, dim, 1e-5);
      }, 50),
      time_ms([&] {
        kernels::layernorm_rows(out2.data(), xhat.data(), rstd.data(), a.data(), gain.data(),
                                bias.data(), rows, dim, 1e-5);
      }, 50));

  // end-to-end: one forward/backward/adam step of the default model on a
  // 64-sample batch, single thread vs the requested count
  SkeletonGraph g = SkeletonGraph::human16();
  Dataset ds = generate_synthetic(g, "human16", 64, 7);
  GraFormerModel model(g, ModelConfig::defaults(), 7);
  std::vector<size_t> idx(64);
  for (size_t i = 0; i < 64; ++i) idx[i] = i;
  Tensor x = batch_inputs(ds, idx);
  Tensor target = batch_targets(ds, idx);
  AdamState adam = AdamState::init(model.parameters());
  SplitMix64 drop(7);

  auto step = [&] {
    Tape tape;
    Tensor pred = model.forward(&tape, x, true, &drop, 0.25);
    Tensor loss = mse_loss(&tape, pred, target);
    for (const NamedTensor& p : model.parameters()) p.tensor.zero_grad();
    tape.backward(loss);
    adam_step(model.parameters(), adam, 1e-3, 0.9, 0.999, 1e-8);
  };

  kernels::set_thread_count(1);
  const double step1 = time_ms(step, 5);
  kernels::set_thread_count(threads);
  const double stepN = time_ms(step, 5);
  std::printf("%-28s %10.3f %10.3f %9.2fx\n", "train step b=64 (1 vs N)", step1, stepN, step1 / stepN);
  return 0;
}
