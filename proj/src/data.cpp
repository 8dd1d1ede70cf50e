#include "grf/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "grf/format.hpp"
#include "grf/rng.hpp"

namespace grf {

namespace {

double parse_double(const std::string& field, const std::string& path, int line_no) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number '" + field + "'");
  if (!std::isfinite(v))
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-finite value '" + field + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void parse_tags(PoseSample& s) {
  const size_t first = s.id.find(':');
  if (first == std::string::npos) return;
  const size_t second = s.id.find(':', first + 1);
  if (second == std::string::npos) return;
  s.subject = s.id.substr(0, first);
  s.action = s.id.substr(first + 1, second - first - 1);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  out << "GRFD v1 j=" << ds.skeleton.joint_count << " skeleton=" << ds.skeleton_name << "\n";
  for (const PoseSample& s : ds.samples) {
    out << s.id;
    for (double v : s.joints_2d) out << "," << format_double(v);
    for (double v : s.joints_3d) out << "," << format_double(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("dataset write failed for " + path);
}

namespace {

Dataset load_dataset_impl(const std::string& path, const SkeletonGraph* skeleton_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": no samples (empty file)");

  int j = 0;
  std::string skeleton_name;
  {
    std::string magic, version, jfield, sfield;
    std::istringstream hs(header);
    hs >> magic >> version >> jfield >> sfield;
    if (magic != "GRFD" || version != "v1" || jfield.rfind("j=", 0) != 0 || sfield.rfind("skeleton=", 0) != 0)
      throw std::runtime_error(path + ":1: bad header '" + header + "' (expected GRFD v1 j=<j> skeleton=<name>)");
    j = std::stoi(jfield.substr(2));
    skeleton_name = sfield.substr(9);
  }

  Dataset ds;
  ds.skeleton_name = skeleton_name;
  if (skeleton_override) {
    ds.skeleton = *skeleton_override;
  } else if (SkeletonGraph::is_preset(skeleton_name)) {
    ds.skeleton = SkeletonGraph::preset(skeleton_name);
  } else {
    throw std::runtime_error(path + ": skeleton '" + skeleton_name +
                             "' is not a preset; pass the skeleton graph explicitly");
  }
  if (ds.skeleton.joint_count != j)
    throw std::runtime_error(path + ": header says j=" + std::to_string(j) + " but skeleton '" +
                             skeleton_name + "' has " + std::to_string(ds.skeleton.joint_count) + " joints");

  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_commas(line);
    const size_t expected = 1 + static_cast<size_t>(5 * j);
    if (fields.size() != expected)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(expected) + " fields (id + " + std::to_string(5 * j) +
                               " numbers), got " + std::to_string(fields.size()));
    PoseSample s;
    s.id = fields[0];
    parse_tags(s);
    s.joints_2d.reserve(static_cast<size_t>(2 * j));
    s.joints_3d.reserve(static_cast<size_t>(3 * j));
    for (int i = 0; i < 2 * j; ++i) s.joints_2d.push_back(parse_double(fields[1 + i], path, line_no));
    for (int i = 0; i < 3 * j; ++i) s.joints_3d.push_back(parse_double(fields[1 + 2 * j + i], path, line_no));
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error(path + ": no samples");
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path) { return load_dataset_impl(path, nullptr); }

Dataset load_dataset(const std::string& path, const SkeletonGraph& skeleton) {
  return load_dataset_impl(path, &skeleton);
}

std::vector<double> normalize_2d(const std::vector<double>& raw_pixels, double image_width, double image_height) {
  if (image_width <= 0.0 || image_height <= 0.0)
    throw std::invalid_argument("normalize_2d: image dimensions must be positive");
  std::vector<double> out(raw_pixels.size());
  for (size_t i = 0; i + 1 < raw_pixels.size(); i += 2) {
    out[i] = (2.0 * raw_pixels[i] - image_width) / image_width;
    out[i + 1] = (2.0 * raw_pixels[i + 1] - image_height) / image_width;
  }
  return out;
}

std::vector<double> denormalize_2d(const std::vector<double>& normalized, double image_width, double image_height) {
  if (image_width <= 0.0 || image_height <= 0.0)
    throw std::invalid_argument("denormalize_2d: image dimensions must be positive");
  std::vector<double> out(normalized.size());
  for (size_t i = 0; i + 1 < normalized.size(); i += 2) {
    out[i] = (normalized[i] * image_width + image_width) / 2.0;
    out[i + 1] = (normalized[i + 1] * image_width + image_height) / 2.0;
  }
  return out;
}

std::vector<double> root_relative_3d(const std::vector<double>& joints_3d, int root_index) {
  if (joints_3d.size() % 3 != 0) throw std::invalid_argument("root_relative_3d: length not a multiple of 3");
  const int j = static_cast<int>(joints_3d.size() / 3);
  if (root_index < 0 || root_index >= j)
    throw std::invalid_argument("root_relative_3d: root index " + std::to_string(root_index) + " outside [0, " +
                                std::to_string(j) + ")");
  std::vector<double> out(joints_3d.size());
  const double rx = joints_3d[static_cast<size_t>(3 * root_index)];
  const double ry = joints_3d[static_cast<size_t>(3 * root_index) + 1];
  const double rz = joints_3d[static_cast<size_t>(3 * root_index) + 2];
  for (int i = 0; i < j; ++i) {
    out[static_cast<size_t>(3 * i)] = joints_3d[static_cast<size_t>(3 * i)] - rx;
    out[static_cast<size_t>(3 * i) + 1] = joints_3d[static_cast<size_t>(3 * i) + 1] - ry;
    out[static_cast<size_t>(3 * i) + 2] = joints_3d[static_cast<size_t>(3 * i) + 2] - rz;
  }
  return out;
}

namespace {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }

struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec3 apply(Vec3 v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 mul(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0;
        for (int k = 0; k < 3; ++k) acc += m[static_cast<size_t>(3 * i + k)] * o.m[static_cast<size_t>(3 * k + j)];
        r.m[static_cast<size_t>(3 * i + j)] = acc;
      }
    return r;
  }

  // Rodrigues rotation about a unit axis.
  static Mat3 axis_angle(Vec3 axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r.m = {t * axis.x * axis.x + c,          t * axis.x * axis.y - s * axis.z, t * axis.x * axis.z + s * axis.y,
           t * axis.x * axis.y + s * axis.z, t * axis.y * axis.y + c,          t * axis.y * axis.z - s * axis.x,
           t * axis.x * axis.z - s * axis.y, t * axis.y * axis.z + s * axis.x, t * axis.z * axis.z + c};
    return r;
  }
};

Vec3 random_axis(SplitMix64& rng) {
  while (true) {
    Vec3 v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    if (n > 1e-6) return {v.x / n, v.y / n, v.z / n};
  }
}

std::vector<Vec3> rest_pose(const SkeletonGraph& g, const std::string& name) {
  if (name == "human16") {
    return {{0, 0, 0},      {-130, 0, 0},   {-130, -450, 0}, {-130, -900, 0},
            {130, 0, 0},    {130, -450, 0}, {130, -900, 0},  {0, 230, 0},
            {0, 460, 0},    {0, 650, 0},    {200, 430, 0},   {200, 150, 0},
            {200, -100, 0}, {-200, 430, 0}, {-200, 150, 0},  {-200, -100, 0}};
  }
  if (name == "hand21") {
    const double angles[5] = {-1.05, -0.44, 0.0, 0.44, 0.87};
    const double radii[5][4] = {{45, 80, 110, 135},
                                {90, 130, 160, 185},
                                {95, 140, 172, 198},
                                {90, 132, 162, 186},
                                {80, 112, 136, 155}};
    std::vector<Vec3> pose(21, Vec3{});
    for (int f = 0; f < 5; ++f) {
      const double sx = std::sin(angles[f]), cy = std::cos(angles[f]);
      const double z = f == 0 ? -20.0 : 0.0;
      for (int k = 0; k < 4; ++k)
        pose[static_cast<size_t>(1 + 4 * f + k)] = {sx * radii[f][k], cy * radii[f][k], z};
    }
    return pose;
  }
  // Procedural layout for custom skeletons: each joint 150 mm from its BFS
  // parent along a deterministic direction.
  std::vector<Vec3> pose(static_cast<size_t>(g.joint_count), Vec3{});
  for (int i = 1; i < g.joint_count; ++i) {
    const double theta = 2.399963229728653 * i;
    const double phi = std::acos(1.0 - 2.0 * std::fmod(0.6180339887498949 * i, 1.0));
    pose[static_cast<size_t>(i)] = {150.0 * std::cos(theta) * std::sin(phi),
                                    150.0 * std::sin(theta) * std::sin(phi), 150.0 * std::cos(phi)};
  }
  return pose;
}

// BFS forest over the skeleton; parent[root] = -1 per component.
std::vector<int> bfs_parents(const SkeletonGraph& g) {
  std::vector<std::vector<int>> adj(static_cast<size_t>(g.joint_count));
  for (auto [a, b] : g.edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  std::vector<int> parent(static_cast<size_t>(g.joint_count), -2);
  auto bfs = [&](int start) {
    parent[static_cast<size_t>(start)] = -1;
    std::deque<int> queue{start};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adj[static_cast<size_t>(u)]) {
        if (parent[static_cast<size_t>(v)] == -2) {
          parent[static_cast<size_t>(v)] = u;
          queue.push_back(v);
        }
      }
    }
  };
  bfs(g.root_index);
  for (int i = 0; i < g.joint_count; ++i)
    if (parent[static_cast<size_t>(i)] == -2) bfs(i);
  return parent;
}

// Topological order: parents before children.
std::vector<int> chain_order(const std::vector<int>& parent) {
  std::vector<int> order;
  std::vector<char> placed(parent.size(), 0);
  for (size_t i = 0; i < parent.size(); ++i)
    if (parent[i] == -1) {
      order.push_back(static_cast<int>(i));
      placed[i] = 1;
    }
  while (order.size() < parent.size()) {
    for (size_t i = 0; i < parent.size(); ++i) {
      if (!placed[i] && placed[static_cast<size_t>(parent[i])]) {
        order.push_back(static_cast<int>(i));
        placed[i] = 1;
      }
    }
  }
  return order;
}

}  // namespace

Dataset generate_synthetic(const SkeletonGraph& skeleton, const std::string& skeleton_name,
                           int n_samples, uint64_t seed, const CameraParams& camera,
                           double max_joint_angle_rad) {
  skeleton.validate();
  if (n_samples < 1) throw std::invalid_argument("generate_synthetic: n_samples must be >= 1");
  if (camera.focal <= 0.0 || camera.depth <= 0.0)
    throw std::invalid_argument("generate_synthetic: camera focal and depth must be positive");

  const int j = skeleton.joint_count;
  const std::vector<Vec3> rest = rest_pose(skeleton, skeleton_name);
  const std::vector<int> parent = bfs_parents(skeleton);
  const std::vector<int> order = chain_order(parent);
  SplitMix64 rng = make_stream(seed, Stream::Synthetic);

  Dataset ds;
  ds.skeleton_name = skeleton_name;
  ds.skeleton = skeleton;

  for (int n = 0; n < n_samples; ++n) {
    std::vector<Mat3> rot(static_cast<size_t>(j));
    std::vector<Vec3> pos(static_cast<size_t>(j));
    for (int node : order) {
      const Mat3 perturb = Mat3::axis_angle(random_axis(rng), rng.uniform(-max_joint_angle_rad, max_joint_angle_rad));
      const int p = parent[static_cast<size_t>(node)];
      if (p < 0) {
        rot[static_cast<size_t>(node)] = perturb;
        pos[static_cast<size_t>(node)] = rest[static_cast<size_t>(node)];
      } else {
        rot[static_cast<size_t>(node)] = rot[static_cast<size_t>(p)].mul(perturb);
        pos[static_cast<size_t>(node)] =
            pos[static_cast<size_t>(p)] +
            rot[static_cast<size_t>(node)].apply(rest[static_cast<size_t>(node)] - rest[static_cast<size_t>(p)]);
      }
    }
    const Vec3 offset{rng.uniform(-300.0, 300.0), rng.uniform(-300.0, 300.0), camera.depth};

    PoseSample s;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "synth%05d", n);
    s.id = idbuf;
    s.joints_2d.resize(static_cast<size_t>(2 * j));
    s.joints_3d.resize(static_cast<size_t>(3 * j));
    const Vec3 root = pos[static_cast<size_t>(skeleton.root_index)];
    for (int i = 0; i < j; ++i) {
      const Vec3 world = pos[static_cast<size_t>(i)] + offset;
      if (world.z <= 1.0)
        throw std::runtime_error("generate_synthetic: camera depth too small, joint behind camera");
      s.joints_2d[static_cast<size_t>(2 * i)] = camera.focal * world.x / world.z;
      s.joints_2d[static_cast<size_t>(2 * i) + 1] = camera.focal * world.y / world.z;
      const Vec3 rel = pos[static_cast<size_t>(i)] - root;
      s.joints_3d[static_cast<size_t>(3 * i)] = rel.x;
      s.joints_3d[static_cast<size_t>(3 * i) + 1] = rel.y;
      s.joints_3d[static_cast<size_t>(3 * i) + 2] = rel.z;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double eval_fraction, uint64_t seed) {
  if (eval_fraction < 0.0 || eval_fraction >= 1.0)
    throw std::invalid_argument("split_dataset: eval_fraction outside [0, 1)");
  const size_t n = ds.samples.size();
  size_t n_eval = static_cast<size_t>(eval_fraction * static_cast<double>(n));
  if (eval_fraction > 0.0 && n_eval == 0 && n > 1) n_eval = 1;

  std::vector<size_t> indices(n);
  for (size_t i = 0; i < n; ++i) indices[i] = i;
  SplitMix64 rng = make_stream(seed, Stream::Shuffle);
  for (size_t i = n; i > 1; --i) {
    const size_t r = static_cast<size_t>(rng.next_below(i));
    std::swap(indices[i - 1], indices[r]);
  }
  std::vector<char> is_eval(n, 0);
  for (size_t i = 0; i < n_eval; ++i) is_eval[indices[i]] = 1;

  Dataset train = ds, eval = ds;
  train.samples.clear();
  eval.samples.clear();
  train.split = "train";
  eval.split = "eval";
  for (size_t i = 0; i < n; ++i) (is_eval[i] ? eval : train).samples.push_back(ds.samples[i]);
  return {std::move(train), std::move(eval)};
}

}  // namespace grf
