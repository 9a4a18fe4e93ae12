#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wl/adam.hpp"
#include "wl/common.hpp"
#include "wl/tensor.hpp"

namespace wl {

/// Checkpoint container format: magic "WLSG", version u32=1, tensor count
/// u32, then per tensor: name length u16 + UTF-8 name, ndims u8, dims u32
/// each, and the values as little-endian f32. A trailing flag byte marks
/// optional optimizer state: step count u64, entry count u32, then per
/// entry the tensor name (u16 + bytes) followed by its first- and
/// second-moment values (f32 each, same element count as the tensor).
/// Everything is stored in f32 regardless of the in-memory precision.

struct AdamEntry {
  std::string name;
  std::vector<float> m, v;
};

struct CheckpointData {
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  bool has_adam = false;
  std::uint64_t adam_step = 0;
  std::vector<AdamEntry> adam;

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

/// Writes the named tensors; when `adam` is given, also stores its moments
/// for every named tensor that is one of the optimizer's parameters
/// (matched by storage identity).
template <typename T>
void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor<T>>>& tensors,
    const Adam<T>* adam = nullptr);

CheckpointData read_checkpoint(const std::string& path);

/// Copies checkpoint values into the destination tensors in place. The name
/// sets must match exactly and every shape must agree (FormatError
/// otherwise).
template <typename T>
void load_tensors(const CheckpointData& ckpt,
                  const std::vector<std::pair<std::string, Tensor<T>>>& dest);

/// Restores optimizer moments and step count. Every Adam parameter must
/// appear in `named` (storage identity) with a moment entry in the
/// checkpoint.
template <typename T>
void load_adam(const CheckpointData& ckpt,
               const std::vector<std::pair<std::string, Tensor<T>>>& named,
               Adam<T>& adam);

}  // namespace wl
