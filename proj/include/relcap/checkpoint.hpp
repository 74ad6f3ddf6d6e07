#pragma once

// Binary checkpoint container, all integers and floats little-endian:
//
//   magic      8 bytes  "RELCAPCK"
//   version    u32      kCheckpointVersion
//   meta_len   u64      byte length of the metadata document
//   meta       bytes    UTF-8 JSON (model config, vocabulary, optimizer state)
//   count      u32      number of tensors
//   per tensor:
//     name_len u32, name bytes (UTF-8)
//     ndims    u32      always 2
//     extents  u64 × ndims
//     payload  f64 × prod(extents), row-major
//   checksum   u64      FNV-1a over every preceding byte

#include "relcap/tensor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace relcap {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws DataError on bad magic, unsupported version, truncation or checksum mismatch.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace relcap
