#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "freeseed/tensor.hpp"

namespace freeseed::image_io {

/// 8-bit grayscale PNG of an [H, W] map with values in [0, 1] (clipped).
void write_gray_png(const std::filesystem::path& path, const Tensor<double>& image);

/// Reads an 8-bit grayscale PNG back as values in [0, 1].
Tensor<double> read_gray_png(const std::filesystem::path& path);

/// 8-bit RGB PNG, `rgb` interleaved row-major.
void write_rgb_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb, std::int64_t height,
                   std::int64_t width);

/// Grayscale base with red pixels on the boundary of {overlay > threshold}.
std::vector<std::uint8_t> contour_overlay(const Tensor<double>& base, const Tensor<double>& overlay, double threshold);

/// Side-by-side concatenation of equally tall [H, W] maps.
Tensor<double> hstack(const std::vector<Tensor<double>>& images);

}  // namespace freeseed::image_io
