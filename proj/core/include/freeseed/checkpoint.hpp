#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "freeseed/kv_config.hpp"
#include "freeseed/tensor.hpp"

namespace freeseed {

/// Archive of key=value metadata plus named float32 arrays.
///   "FSCK", u32 version, u64 meta bytes, meta text, u32 record count,
///   then per record: u32 name bytes, name, one container record.
struct Checkpoint {
  KeyValues meta;
  std::vector<std::pair<std::string, Tensor<float>>> arrays;

  void add(std::string name, Tensor<float> array);
  bool has(const std::string& name) const;
  /// Throws std::runtime_error when the name is missing.
  const Tensor<float>& get(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace freeseed
