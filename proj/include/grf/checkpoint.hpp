#pragma once

#include <span>
#include <string>
#include <vector>

#include "grf/tensor.hpp"

namespace grf {

// Snapshot container: 4-byte magic "GRFK", one version byte (1), then a
// length-prefixed entry table:
//   u32 entry count
//   per entry: u32 name length, name bytes, u32 ndim, ndim x u64 dims,
//              prod(dims) x f64 values
// All integers and doubles little-endian.
void save_snapshot(const std::string& path, std::span<const NamedTensor> entries);
std::vector<NamedTensor> load_snapshot(const std::string& path);

}  // namespace grf
