#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "freeseed/tensor.hpp"

namespace freeseed::container {

// Record layout: 64-byte header then little-endian float32 payload.
//   [0,4)   magic "FSCT"
//   [4,8)   version (uint32, currently 1)
//   [8,12)  dtype code (uint32, 1 = float32)
//   [12,16) ndim (uint32, 1..6)
//   [16,64) dims (6 x uint64, unused entries zero)
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kFloat32 = 1;
inline constexpr int kMaxDims = 6;
inline constexpr std::size_t kHeaderBytes = 64;

template <typename T>
void write(std::ostream& out, const Tensor<T>& array);
/// Reads one record; throws std::runtime_error on a malformed header or short payload.
Tensor<float> read(std::istream& in);

template <typename T>
void save(const std::filesystem::path& path, const Tensor<T>& array);
Tensor<float> load(const std::filesystem::path& path);

/// Files holding several consecutive records.
template <typename T>
void save_all(const std::filesystem::path& path, const std::vector<const Tensor<T>*>& arrays);
std::vector<Tensor<float>> load_all(const std::filesystem::path& path);

}  // namespace freeseed::container
