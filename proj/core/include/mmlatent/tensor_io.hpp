#pragma once

#include <map>
#include <string>

#include "mmlatent/tensor.hpp"

namespace mmlatent {

/// Named-tensor persistence: `manifest.json` (name, shape, dtype, byte
/// offset, per tensor, in name order) next to `weights.bin` (raw
/// little-endian IEEE-754 payloads concatenated in manifest order).
/// load(save(x)) is bit-identical. Throws IoError on corrupt manifests,
/// truncated blobs, or dtype/shape inconsistencies.
void save_tensors(const std::string& dir, const std::map<std::string, TensorPtr>& tensors);
std::map<std::string, TensorPtr> load_tensors(const std::string& dir);

}  // namespace mmlatent
