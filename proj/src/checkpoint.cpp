#include "grf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace grf {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'F', 'K'};
constexpr uint8_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("snapshot: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("snapshot: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_snapshot(const std::string& path, std::span<const NamedTensor> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot " + path);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  put_u32(out, static_cast<uint32_t>(entries.size()));
  for (const NamedTensor& e : entries) {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<uint32_t>(e.tensor.ndim()));
    for (int i = 0; i < e.tensor.ndim(); ++i) put_u64(out, static_cast<uint64_t>(e.tensor.dim(i)));
    for (double v : e.tensor.values()) put_f64(out, v);
  }
  if (!out) throw std::runtime_error("snapshot write failed for " + path);
}

std::vector<NamedTensor> load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("snapshot " + path + ": bad magic (not a GRFK file)");
  const int version = in.get();
  if (version != kVersion)
    throw std::runtime_error("snapshot " + path + ": unsupported version " + std::to_string(version));
  const uint32_t count = get_u32(in);
  std::vector<NamedTensor> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("snapshot: truncated entry name");
    const uint32_t ndim = get_u32(in);
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int64_t>(get_u64(in));
    std::vector<double> values(static_cast<size_t>(shape_numel(shape)));
    for (double& v : values) v = get_f64(in);
    entries.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
  }
  return entries;
}

}  // namespace grf
