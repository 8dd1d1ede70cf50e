#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "grf/data.hpp"
#include "test_util.hpp"

using namespace grf;

TEST_CASE("dataset save/load round trip is exact") {
  auto dir = testutil::scratch_dir("data_rt");
  SkeletonGraph g = SkeletonGraph::human16();
  Dataset ds = generate_synthetic(g, "human16", 12, 71);
  const std::string path = (dir / "d.grfd").string();
  save_dataset(path, ds);
  Dataset loaded = load_dataset(path);
  REQUIRE(loaded.samples.size() == ds.samples.size());
  CHECK(loaded.skeleton_name == "human16");
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(loaded.samples[i].id == ds.samples[i].id);
    CHECK(loaded.samples[i].joints_2d == ds.samples[i].joints_2d);  // bit-exact
    CHECK(loaded.samples[i].joints_3d == ds.samples[i].joints_3d);
  }
}

TEST_CASE("dataset loader rejects malformed input with line numbers") {
  auto dir = testutil::scratch_dir("data_err");

  {
    std::ofstream out(dir / "empty.grfd");
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "empty.grfd").string()), doctest::Contains("no samples"),
                       std::runtime_error);

  {
    std::ofstream out(dir / "headeronly.grfd");
    out << "GRFD v1 j=16 skeleton=human16\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "headeronly.grfd").string()), doctest::Contains("no samples"),
                       std::runtime_error);

  {
    // 15-joint record against the 16-joint header: wrong field count
    std::ofstream out(dir / "short.grfd");
    out << "GRFD v1 j=16 skeleton=human16\n";
    out << "bad";
    for (int i = 0; i < 15 * 5; ++i) out << ",0";
    out << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "short.grfd").string()), doctest::Contains(":2:"),
                       std::runtime_error);

  {
    std::ofstream out(dir / "nan.grfd");
    out << "GRFD v1 j=1 skeleton=p1\n";
    out << "s0,nan,0,0,0,0\n";
  }
  SkeletonGraph p1;
  p1.joint_count = 1;
  p1.root_index = 0;
  CHECK_THROWS_AS(load_dataset((dir / "nan.grfd").string(), p1), std::runtime_error);

  {
    std::ofstream out(dir / "badheader.grfd");
    out << "GRXD v1 j=16 skeleton=human16\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "badheader.grfd").string()), doctest::Contains("bad header"),
                       std::runtime_error);
}

TEST_CASE("normalize_2d: formula cases and exact-inverse round trip") {
  // center pixel maps to the origin
  std::vector<double> center{500.0, 400.0};
  auto n = normalize_2d(center, 1000.0, 800.0);
  CHECK(n[0] == doctest::Approx(0.0));
  CHECK(n[1] == doctest::Approx(0.0));

  auto corner = normalize_2d({0.0, 0.0}, 1000.0, 1000.0);
  CHECK(corner[0] == doctest::Approx(-1.0));
  CHECK(corner[1] == doctest::Approx(-1.0));

  auto right = normalize_2d({1000.0, 0.0}, 1000.0, 800.0);
  CHECK(right[0] == doctest::Approx(1.0));
  CHECK(right[1] == doctest::Approx(-0.8));  // -h/w

  SplitMix64 rng(72);
  std::vector<double> pixels(32);
  for (double& v : pixels) v = rng.uniform(0.0, 1920.0);
  auto back = denormalize_2d(normalize_2d(pixels, 1920.0, 1080.0), 1920.0, 1080.0);
  for (size_t i = 0; i < pixels.size(); ++i) CHECK(std::abs(back[i] - pixels[i]) <= 1e-9);

  CHECK_THROWS_AS(normalize_2d(pixels, 0.0, 100.0), std::invalid_argument);
}

TEST_CASE("root_relative_3d zeroes the root row") {
  std::vector<double> joints{5, 5, 5, 6, 7, 8};
  auto rel = root_relative_3d(joints, 0);
  CHECK(rel == std::vector<double>{0, 0, 0, 1, 2, 3});

  auto same = root_relative_3d(rel, 0);
  CHECK(same == rel);  // already centered

  std::vector<double> constant{5, 5, 5, 5, 5, 5};
  CHECK(root_relative_3d(constant, 1) == std::vector<double>(6, 0.0));

  CHECK_THROWS_AS(root_relative_3d(joints, 2), std::invalid_argument);
}

TEST_CASE("synthetic generator: determinism, rigid bones, pinhole consistency") {
  SkeletonGraph g = SkeletonGraph::human16();
  CameraParams cam;
  Dataset a = generate_synthetic(g, "human16", 24, 7, cam);
  Dataset b = generate_synthetic(g, "human16", 24, 7, cam);
  REQUIRE(a.samples.size() == 24);
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].joints_2d == b.samples[i].joints_2d);
    CHECK(a.samples[i].joints_3d == b.samples[i].joints_3d);
  }

  // bone lengths constant across samples (rigid articulation)
  std::vector<double> ref_lengths;
  for (const PoseSample& s : a.samples) {
    std::vector<double> lengths;
    for (auto [u, v] : g.edges) {
      const double dx = s.joints_3d[static_cast<size_t>(3 * u)] - s.joints_3d[static_cast<size_t>(3 * v)];
      const double dy = s.joints_3d[static_cast<size_t>(3 * u) + 1] - s.joints_3d[static_cast<size_t>(3 * v) + 1];
      const double dz = s.joints_3d[static_cast<size_t>(3 * u) + 2] - s.joints_3d[static_cast<size_t>(3 * v) + 2];
      lengths.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    if (ref_lengths.empty()) {
      ref_lengths = lengths;
      for (double l : lengths) CHECK(l > 1.0);
    } else {
      for (size_t e = 0; e < lengths.size(); ++e)
        CHECK(std::abs(lengths[e] - ref_lengths[e]) / ref_lengths[e] <= 1e-9);
    }
  }

  // reprojection: recover the world offset from the root's 2D position,
  // then every joint's 2D must equal focal * X / Z
  const int root = g.root_index;
  for (const PoseSample& s : a.samples) {
    const double dx = s.joints_2d[static_cast<size_t>(2 * root)] * cam.depth / cam.focal;
    const double dy = s.joints_2d[static_cast<size_t>(2 * root) + 1] * cam.depth / cam.focal;
    for (int i = 0; i < g.joint_count; ++i) {
      const double wx = s.joints_3d[static_cast<size_t>(3 * i)] + dx;
      const double wy = s.joints_3d[static_cast<size_t>(3 * i) + 1] + dy;
      const double wz = s.joints_3d[static_cast<size_t>(3 * i) + 2] + cam.depth;
      CHECK(s.joints_2d[static_cast<size_t>(2 * i)] == doctest::Approx(cam.focal * wx / wz).epsilon(1e-12));
      CHECK(s.joints_2d[static_cast<size_t>(2 * i) + 1] == doctest::Approx(cam.focal * wy / wz).epsilon(1e-12));
    }
    // stored 3D is root-relative
    CHECK(s.joints_3d[static_cast<size_t>(3 * root)] == 0.0);
  }

  CHECK_THROWS_AS(generate_synthetic(g, "human16", 0, 7), std::invalid_argument);
}

TEST_CASE("synthetic generator works for the hand preset and custom graphs") {
  Dataset hand = generate_synthetic(SkeletonGraph::hand21(), "hand21", 3, 5);
  CHECK(hand.samples.size() == 3);
  CHECK(hand.samples[0].joints_2d.size() == 42);

  SplitMix64 rng(73);
  SkeletonGraph custom = testutil::random_connected_graph(rng, 4, 9);
  Dataset ds = generate_synthetic(custom, "custom", 2, 9);
  CHECK(ds.samples[0].joints_3d.size() == static_cast<size_t>(3 * custom.joint_count));
}

TEST_CASE("split_dataset: deterministic disjoint partition") {
  SkeletonGraph g = SkeletonGraph::human16();
  Dataset ds = generate_synthetic(g, "human16", 40, 11);
  auto [train, eval] = split_dataset(ds, 0.25, 3);
  CHECK(train.samples.size() == 30);
  CHECK(eval.samples.size() == 10);
  CHECK(train.split == "train");
  CHECK(eval.split == "eval");

  auto [train2, eval2] = split_dataset(ds, 0.25, 3);
  for (size_t i = 0; i < eval.samples.size(); ++i) CHECK(eval2.samples[i].id == eval.samples[i].id);

  std::set<std::string> ids;
  for (const auto& s : train.samples) ids.insert(s.id);
  for (const auto& s : eval.samples) CHECK(ids.count(s.id) == 0);

  auto [all, none] = split_dataset(ds, 0.0, 3);
  CHECK(all.samples.size() == 40);
  CHECK(none.samples.empty());
}

TEST_CASE("sample ids of the form subject:action:rest carry tags") {
  auto dir = testutil::scratch_dir("data_tags");
  {
    std::ofstream out(dir / "t.grfd");
    out << "GRFD v1 j=1 skeleton=p1\n";
    out << "S1:Walking:0001,1,2,3,4,5\n";
    out << "plain,1,2,3,4,5\n";
  }
  SkeletonGraph p1;
  p1.joint_count = 1;
  p1.root_index = 0;
  Dataset ds = load_dataset((dir / "t.grfd").string(), p1);
  CHECK(ds.samples[0].subject == "S1");
  CHECK(ds.samples[0].action == "Walking");
  CHECK(ds.samples[1].subject.empty());
  CHECK(ds.samples[1].action.empty());
}
