#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ugseg/tensor.hpp"

namespace ugseg {

/// One named tensor in a checkpoint, stored as 32-bit floats.
struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: magic "UGTN", version u32, count u32, then per tensor:
/// name length u16 + UTF-8 bytes, rank u8, extents u64 little-endian, raw
/// f32 little-endian data. Round-trips bit-exactly.
void save_checkpoint(const std::vector<NamedTensor>& tensors, const std::string& path);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace ugseg
