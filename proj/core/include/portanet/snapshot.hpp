#pragma once

#include <filesystem>
#include <vector>

#include "portanet/net.hpp"
#include "portanet/tensor.hpp"

namespace portanet {

/// "PNSN", u32 version (1), u32 tensor count, then per tensor: u32 rank,
/// u32 extents, little-endian float32 payload.
void save_tensors(const std::filesystem::path& path, const std::vector<const Tensor*>& tensors);
std::vector<Tensor> load_tensors(const std::filesystem::path& path);

/// Writes the data of every learnable blob, in layer order.
void snapshot_save(Net& net, const std::filesystem::path& path);
/// Restores learnable blob data; shapes must match the net exactly.
void snapshot_load(Net& net, const std::filesystem::path& path);

}  // namespace portanet
