// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the
// longer training-based criteria share their runs through lazy caches.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "grf/data.hpp"
#include "grf/gradcheck.hpp"
#include "grf/graph.hpp"
#include "grf/model.hpp"
#include "grf/train.hpp"
#include "test_util.hpp"

using namespace grf;

namespace {

bool report(int criterion, const std::string& what, bool ok) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
  return ok;
}

std::string mm(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f mm", v);
  return buf;
}

}  // namespace

TEST_CASE("criterion 01: parameter counts against the published targets") {
  GraFormerModel def(SkeletonGraph::human16(), ModelConfig::defaults(), 1);
  GraFormerModel small(SkeletonGraph::human16(), ModelConfig::small(), 1);
  const int64_t nd = def.parameter_count();
  const int64_t ns = small.parameter_count();
  const bool ok = nd >= 520000 && nd <= 780000 && ns >= 96000 && ns <= 144000;
  CHECK(report(1, "default preset " + std::to_string(nd) + " in [0.52M, 0.78M], small preset " +
                      std::to_string(ns) + " in [0.096M, 0.144M]",
               ok));
}

TEST_CASE("criterion 02: gradient fidelity (full model 1e-4, layers 1e-5)") {
  SplitMix64 rng(202);
  SkeletonGraph g = SkeletonGraph::human16();

  // full default model on a batch of 4 random samples, dropout off
  GraFormerModel model(g, ModelConfig::defaults(), 202);
  Tensor x = testutil::random_tensor({4, 16, 2}, rng);
  Tensor target = testutil::random_tensor({4, 16, 3}, rng);
  auto full = grad_check(
      [&](Tape* t) { return mse_loss(t, model.forward(t, x, false, nullptr, 0.0), target); },
      model.parameters(), 1e-4, /*probes_per_tensor=*/3, /*seed=*/11);
  bool ok = report(2, "full model max rel err " + std::to_string(full.max_rel_error) +
                          " <= 1e-4 over " + std::to_string(full.checked) + " probed coordinates",
                   full.pass);

  // per-layer checks at 1e-5
  Tensor lt_small;
  {
    DenseMatrix lt = rescaled_laplacian(testutil::path_graph(5));
    lt_small = Tensor::from({5, 5}, lt.data);
  }
  SkeletonGraph p5 = testutil::path_graph(5);

  ChebGConvLayer cheb = ChebGConvLayer::make(3, 6, 6, rng);
  Tensor cx = testutil::random_tensor({10, 6}, rng);
  std::vector<NamedTensor> cheb_params{{"t0", cheb.theta[0]}, {"t1", cheb.theta[1]},
                                       {"t2", cheb.theta[2]}, {"b", cheb.bias}};
  auto cheb_rep = grad_check(
      [&](Tape* t) { return ops::mean_all(t, ops::square(t, cheb.forward(t, lt_small, cx, 2))); },
      cheb_params, 1e-5);
  ok = report(2, "chebgconv layer (K=3) max rel err " + std::to_string(cheb_rep.max_rel_error) + " <= 1e-5",
              cheb_rep.pass) && ok;

  LamGConvLayer lam = LamGConvLayer::make(p5, 6, 6, rng);
  std::vector<NamedTensor> lam_params{{"adj", lam.adjacency_logits}, {"w", lam.weight}, {"b", lam.bias}};
  auto lam_rep = grad_check(
      [&](Tape* t) { return ops::mean_all(t, ops::square(t, lam.forward(t, cx, 2))); }, lam_params, 1e-5);
  ok = report(2, "lam-gconv layer max rel err " + std::to_string(lam_rep.max_rel_error) + " <= 1e-5",
              lam_rep.pass) && ok;

  MultiHeadSelfAttention mhsa = MultiHeadSelfAttention::make(8, 2, rng);
  Tensor mx = testutil::random_tensor({10, 8}, rng);
  std::vector<NamedTensor> mhsa_params{{"qkv.w", mhsa.qkv_weight}, {"qkv.b", mhsa.qkv_bias},
                                       {"proj.w", mhsa.proj_weight}, {"proj.b", mhsa.proj_bias}};
  auto mhsa_rep = grad_check(
      [&](Tape* t) { return ops::mean_all(t, ops::square(t, mhsa.forward(t, mx, 2, 5))); }, mhsa_params, 1e-5);
  ok = report(2, "mhsa max rel err " + std::to_string(mhsa_rep.max_rel_error) + " <= 1e-5", mhsa_rep.pass) && ok;

  LayerNormParams ln = LayerNormParams::make(8);
  for (double& v : ln.gain.values()) v = rng.uniform(0.5, 1.5);
  for (double& v : ln.bias.values()) v = rng.uniform(-0.5, 0.5);
  std::vector<NamedTensor> ln_params{{"gain", ln.gain}, {"bias", ln.bias}};
  auto ln_rep = grad_check(
      [&](Tape* t) { return ops::mean_all(t, ops::square(t, ops::layer_norm(t, mx, ln.gain, ln.bias))); },
      ln_params, 1e-5);
  ok = report(2, "layer norm max rel err " + std::to_string(ln_rep.max_rel_error) + " <= 1e-5", ln_rep.pass) && ok;

  CHECK(ok);
}

TEST_CASE("criterion 03: spectral oracle suite on 200 random graphs") {
  SplitMix64 rng(203);
  bool sym_ok = true, lap_ok = true, resc_ok = true, cheb_ok = true;
  double worst_sym = 0, worst_min = 0, worst_max = 0, worst_resc = 0, worst_cheb = 0;
  for (int trial = 0; trial < 200; ++trial) {
    SkeletonGraph g = testutil::random_connected_graph(rng);
    DenseMatrix a = normalized_adjacency(g);
    worst_sym = std::max(worst_sym, a.max_asymmetry());
    sym_ok = sym_ok && a.max_asymmetry() <= 1e-12;

    auto eig = symmetric_eigenvalues(graph_laplacian(g));
    worst_min = std::max(worst_min, std::abs(eig.front()));
    worst_max = std::max(worst_max, eig.back());
    lap_ok = lap_ok && eig.front() >= -1e-9 && eig.front() <= 1e-9 && eig.back() <= 2.0 + 1e-9;

    auto reig = symmetric_eigenvalues(rescaled_laplacian(g));
    worst_resc = std::max({worst_resc, std::abs(reig.front()) - 1.0, std::abs(reig.back()) - 1.0});
    resc_ok = resc_ok && reig.front() >= -1.0 - 1e-9 && reig.back() <= 1.0 + 1e-9;
  }
  for (int trial = 0; trial < 40; ++trial) {
    SkeletonGraph g = testutil::random_connected_graph(rng, 5, 5);
    DenseMatrix lt = rescaled_laplacian(g);
    DenseMatrix x(5, 4);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    auto got = chebyshev_basis(lt, x, 5);
    auto want = testutil::cheb_basis_by_coefficients(lt, x, 5);
    for (size_t k = 0; k < got.size(); ++k)
      for (size_t i = 0; i < got[k].data.size(); ++i) {
        const double d = std::abs(got[k].data[i] - want[k].data[i]);
        worst_cheb = std::max(worst_cheb, d);
        cheb_ok = cheb_ok && d <= 1e-10;
      }
  }
  bool ok = report(3, "adjacency symmetry worst " + std::to_string(worst_sym) + " <= 1e-12", sym_ok);
  ok = report(3, "laplacian spectrum in [0, 2], zero mode worst |min| " + std::to_string(worst_min), lap_ok) && ok;
  ok = report(3, "rescaled spectrum within [-1, 1] + 1e-9", resc_ok) && ok;
  ok = report(3, "chebyshev recurrence vs coefficient oracle worst " + std::to_string(worst_cheb) + " <= 1e-10",
              cheb_ok) && ok;
  CHECK(ok);
}

TEST_CASE("criterion 04: order-K receptive field on a 16-node path") {
  SplitMix64 rng(204);
  SkeletonGraph g = testutil::path_graph(16);
  DenseMatrix ltm = rescaled_laplacian(g);
  Tensor lt = Tensor::from({16, 16}, ltm.data);
  bool ok = true;
  for (int order : {2, 3, 4}) {
    ChebGConvLayer layer = ChebGConvLayer::make(order, 4, 4, rng);
    Tensor x = testutil::random_tensor({16, 4}, rng);
    Tensor x2 = Tensor::from(x.shape(), x.values());
    x2.data()[0] += 0.5;  // perturb joint 0
    Tensor a = layer.forward(nullptr, lt, x, 1);
    Tensor b = layer.forward(nullptr, lt, x2, 1);
    bool far_quiet = true;
    double boundary = 0.0;
    for (int64_t q = 0; q < 16; ++q) {
      double diff = 0.0;
      for (int64_t c = 0; c < 4; ++c) diff = std::max(diff, std::abs(a.data()[q * 4 + c] - b.data()[q * 4 + c]));
      if (q > order - 1) far_quiet = far_quiet && diff <= 1e-12;
      if (q == order - 1) boundary = diff;
    }
    const bool this_ok = far_quiet && boundary > 1e-6;
    ok = report(4, "K=" + std::to_string(order) + ": silent beyond " + std::to_string(order - 1) +
                       " hops, boundary response " + std::to_string(boundary),
                this_ok) && ok;
  }
  CHECK(ok);
}

namespace {

void zero_blocks(GraFormerModel& model) {
  for (auto& block : model.blocks) {
    if (block.graatt) {
      for (Tensor t : {block.graatt->mhsa.qkv_weight, block.graatt->mhsa.qkv_bias,
                       block.graatt->mhsa.proj_weight, block.graatt->mhsa.proj_bias,
                       block.graatt->lam1.weight, block.graatt->lam1.bias,
                       block.graatt->lam2.weight, block.graatt->lam2.bias})
        std::fill(t.values().begin(), t.values().end(), 0.0);
    }
    if (block.cheb) {
      for (const ChebGConvLayer* conv : {&block.cheb->conv1, &block.cheb->conv2}) {
        for (Tensor t : conv->theta) std::fill(t.values().begin(), t.values().end(), 0.0);
        std::fill(conv->bias.values().begin(), conv->bias.values().end(), 0.0);
      }
    }
  }
}

}  // namespace

TEST_CASE("criterion 05: zeroed blocks reduce the model to head(embed(x))") {
  SplitMix64 rng(205);
  GraFormerModel model(SkeletonGraph::human16(), ModelConfig::defaults(), 205);
  zero_blocks(model);
  Tensor x = testutil::random_tensor({3, 16, 2}, rng);
  Tensor got = model.forward(nullptr, x);

  Tensor flat = ops::reshape(nullptr, x, {3 * 16, 2});
  Tensor want = model.head.forward(nullptr, model.laplacian(),
                                   model.embed.forward(nullptr, model.laplacian(), flat, 3), 3);
  double max_diff = 0.0;
  for (int64_t i = 0; i < got.size(); ++i) max_diff = std::max(max_diff, std::abs(got.data()[i] - want.data()[i]));
  bool ok = report(5, "model forward equals head(embed(x)) exactly (max diff " + std::to_string(max_diff) + ")",
                   max_diff == 0.0);

  // each zeroed block is an exact identity on its own
  Tensor h = testutil::random_tensor({32, 96}, rng);
  bool blocks_ok = true;
  for (auto& block : model.blocks) {
    Tensor ya = block.graatt->forward(nullptr, h, 2, 16, false, 0.0, nullptr);
    blocks_ok = blocks_ok && ya.values() == h.values();
    Tensor yc = block.cheb->forward(nullptr, model.laplacian(), h, 2, false, 0.0, nullptr);
    blocks_ok = blocks_ok && yc.values() == h.values();
  }
  ok = report(5, "every zeroed block returns its input bit-exactly", blocks_ok) && ok;
  CHECK(ok);
}

namespace {

struct OverfitRun {
  double final_mpjpe = 1e300;
  int epochs_run = 0;
  double minutes = 0;
};

// Memorization protocol: default architecture, regularization off, and an
// annealed learning-rate ladder, capped at 2000 epochs total. Dropout stays
// off because the oracle tests capacity, not generalization; with the
// training-default dropout of 0.25 the run plateaus near 17 mm.
const OverfitRun& overfit_run() {
  static OverfitRun run = [] {
    SkeletonGraph g = SkeletonGraph::human16();
    Dataset ds = generate_synthetic(g, "human16", 64, /*seed=*/7);
    GraFormerModel model(g, ModelConfig::defaults(), /*seed=*/7);
    struct Phase {
      double lr;
      int epochs;
    };
    const Phase ladder[] = {{2e-3, 550}, {5e-4, 350}, {1.2e-4, 300}, {3e-5, 300}};
    const auto t0 = std::chrono::steady_clock::now();
    OverfitRun r;
    for (const Phase& phase : ladder) {
      TrainConfig tc;
      tc.epochs = phase.epochs;
      tc.batch_size = 16;
      tc.learning_rate = phase.lr;
      tc.adam_beta2 = 0.99;
      tc.seed = 7;
      tc.dropout = 0.0;
      tc.stop_below_mpjpe = 0.8;
      TrainResult res = train(model, ds, {}, tc);  // eval split = train set
      r.final_mpjpe = res.final_eval_mpjpe;
      r.epochs_run += res.epochs_run;
      if (r.final_mpjpe < 0.8) break;
    }
    r.minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    return r;
  }();
  return run;
}

struct SyntheticBenchmark {
  double untrained = 0;
  double full = 0;
  double model_at = 0;  // ChebGConv blocks removed
  double model_c = 0;   // GraAttention removed
  int epochs = 0;
};

const SyntheticBenchmark& synthetic_benchmark() {
  static SyntheticBenchmark bench = [] {
    SkeletonGraph g = SkeletonGraph::human16();
    Dataset all = generate_synthetic(g, "human16", 4608, /*seed=*/11);
    auto [train_set, eval_set] = split_dataset(all, 512.0 / 4608.0, /*seed=*/11);

    SyntheticBenchmark b;
    b.epochs = 12;
    auto run_one = [&](ModelConfig cfg, bool record_untrained) {
      GraFormerModel model(g, cfg, /*seed=*/13);
      if (record_untrained) b.untrained = evaluate_mpjpe(model, eval_set);
      TrainConfig tc;
      tc.epochs = b.epochs;
      tc.seed = 13;
      TrainResult res = train(model, train_set, eval_set, tc);
      return res.final_eval_mpjpe;
    };

    b.full = run_one(ModelConfig::defaults(), true);
    ModelConfig at = ModelConfig::defaults();
    at.use_chebblock = false;
    b.model_at = run_one(at, false);
    ModelConfig c = ModelConfig::defaults();
    c.use_graattention = false;
    b.model_c = run_one(c, false);
    return b;
  }();
  return bench;
}

}  // namespace

TEST_CASE("criterion 06: overfit 64 synthetic samples below 1 mm") {
  const OverfitRun& run = overfit_run();
  const bool ok = run.final_mpjpe < 1.0 && run.epochs_run <= 2000;
  CHECK(report(6, "train-set MPJPE " + mm(run.final_mpjpe) + " after " +
                      std::to_string(run.epochs_run) + " epochs (" +
                      std::to_string(run.minutes).substr(0, 4) + " min)",
               ok));
}

TEST_CASE("criterion 07: held-out MPJPE at most 0.2x the untrained model") {
  const SyntheticBenchmark& b = synthetic_benchmark();
  const bool ok = b.full <= 0.2 * b.untrained;
  CHECK(report(7, "trained " + mm(b.full) + " vs untrained " + mm(b.untrained) + " on 512 held-out samples (" +
                      std::to_string(b.epochs) + " epochs)",
               ok));
}

TEST_CASE("criterion 08: full model not worse than its ablations by more than 5%") {
  const SyntheticBenchmark& b = synthetic_benchmark();
  const bool vs_at = b.full <= 1.05 * b.model_at;
  const bool vs_c = b.full <= 1.05 * b.model_c;
  bool ok = report(8, "graformer " + mm(b.full) + " vs model-AT (no chebgconv blocks) " + mm(b.model_at), vs_at);
  ok = report(8, "graformer " + mm(b.full) + " vs model-C (no graattention) " + mm(b.model_c), vs_c) && ok;
  CHECK(ok);
}

TEST_CASE("criterion 09: mpjpe invariances on 1000 random tensors") {
  SplitMix64 rng(209);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int64_t batch = 1 + static_cast<int64_t>(rng.next_below(3));
    const int joints = 2 + static_cast<int>(rng.next_below(15));
    const int root = static_cast<int>(rng.next_below(static_cast<uint64_t>(joints)));
    std::vector<double> a(static_cast<size_t>(batch * joints * 3)), b(a.size());
    for (double& v : a) v = rng.uniform(-500.0, 500.0);
    for (double& v : b) v = rng.uniform(-500.0, 500.0);
    const double base = mpjpe(a, b, batch, joints, root);

    const double tx = rng.uniform(-100, 100), ty = rng.uniform(-100, 100), tz = rng.uniform(-100, 100);
    std::vector<double> a_shift = a, b_shift = b;
    for (size_t i = 0; i < a.size(); i += 3) {
      a_shift[i] += tx;
      a_shift[i + 1] += ty;
      a_shift[i + 2] += tz;
      b_shift[i] -= ty;
      b_shift[i + 1] += tz;
      b_shift[i + 2] -= tx;
    }
    worst = std::max(worst, std::abs(mpjpe(a_shift, b, batch, joints, root) - base));
    worst = std::max(worst, std::abs(mpjpe(a, b_shift, batch, joints, root) - base));
    worst = std::max(worst, std::abs(mpjpe(b, a, batch, joints, root) - base));
  }
  CHECK(report(9, "translation invariance and symmetry, worst deviation " + std::to_string(worst) + " <= 1e-9",
               worst <= 1e-9));
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string last_loss_from_log(const std::string& path) {
  std::ifstream in(path);
  std::string line, last;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  // epoch,step,lr,train_loss,...
  std::istringstream ls(last);
  std::string field;
  for (int i = 0; i < 4; ++i) std::getline(ls, field, ',');
  return field;
}

}  // namespace

TEST_CASE("criterion 10: cmd_train is deterministic across identical runs") {
  auto dir = testutil::scratch_dir("acceptance_det");
  const std::string data = (dir / "d64.grfd").string();
  const std::string bin(GRAFORMER_BIN);
  auto sh = [&](const std::string& args) {
    const std::string cmd = bin + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    return std::system(cmd.c_str());
  };
  bool ok = sh("gen --skeleton human16 --count 64 --seed 7 --out " + data) == 0;
  const std::string flags = "train --data " + data + " --epochs 30 --seed 7 --out ";
  ok = sh(flags + (dir / "runA").string()) == 0 && ok;
  ok = sh(flags + (dir / "runB").string()) == 0 && ok;

  const bool final_same = slurp((dir / "runA/final.grfk").string()) == slurp((dir / "runB/final.grfk").string());
  const bool best_same = slurp((dir / "runA/best.grfk").string()) == slurp((dir / "runB/best.grfk").string());
  const std::string loss_a = last_loss_from_log((dir / "runA/train_log.csv").string());
  const std::string loss_b = last_loss_from_log((dir / "runB/train_log.csv").string());
  const bool loss_same = !loss_a.empty() && loss_a == loss_b;

  ok = report(10, "byte-identical final.grfk and best.grfk across identical cmd_train runs",
              ok && final_same && best_same);
  ok = report(10, "identical final train loss (" + loss_a + ")", loss_same) && ok;
  CHECK(ok);
}
