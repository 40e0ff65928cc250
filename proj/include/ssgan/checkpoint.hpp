#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ssgan/tensor.hpp"

namespace ssgan {

// Persisted training snapshot. Binary layout (little-endian):
//   magic "SSGN", u32 version (=1), u32 tensor count,
//   per tensor: u16 name length, name bytes, u8 rank, u64 dims[rank],
//               u8 dtype (0 = f32), payload,
//   u64 iteration, u32 rng word count, u64 words,
//   u32 config length, config bytes.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;  // ordered by name
  std::uint64_t iteration = 0;
  std::vector<std::uint64_t> rng_words;
  std::string config_echo;

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssgan
