#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "freeseed/autograd.hpp"

namespace freeseed {

/// Centered spectrum of a real [C, H, W] map: DC at (H/2, W/2), unnormalized.
struct SpectralFeature {
  std::int64_t channels = 0;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::complex<double>> values;  // [C, rows, cols]

  std::complex<double>& at(std::int64_t c, std::int64_t u, std::int64_t v) {
    return values[static_cast<std::size_t>((c * rows + u) * cols + v)];
  }
  const std::complex<double>& at(std::int64_t c, std::int64_t u, std::int64_t v) const {
    return values[static_cast<std::size_t>((c * rows + u) * cols + v)];
  }
};

SpectralFeature real_fft2_centered(const Tensor<double>& x);
/// Real part of the inverse transform, shaped [C, H, W].
Tensor<double> inverse_real_fft2_centered(const SpectralFeature& z);

/// D[u, v] = |(u - U/2, v - V/2)| divided by its maximum over the grid.
Tensor<double> distance_map(std::int64_t rows, std::int64_t cols);

inline constexpr double kBandPassEpsilon = 1e-12;

/// exp(-((D^2 - d0^2) / (w D + eps))^2)
double band_pass_value(double d0, double w, double distance);

/// Per-channel inner radius d0 in [0, 1] and bandwidth w >= 1e-6.
struct BandPassParams {
  std::vector<double> d0;
  std::vector<double> w;

  static BandPassParams initial(std::int64_t channels) {
    return {std::vector<double>(static_cast<std::size_t>(channels), 0.0),
            std::vector<double>(static_cast<std::size_t>(channels), 1.0)};
  }
  std::int64_t channels() const { return static_cast<std::int64_t>(d0.size()); }
  void validate() const;
};

inline constexpr double kMinBandwidth = 1e-6;

/// [C, U, V] attention map for a [U, V] distance map.
Tensor<double> band_pass_map(const BandPassParams& params, const Tensor<double>& distance);

/// Differentiable centered 2D DFT: [N, C, H, W] -> [N, 2C, H, W], real parts in
/// channels [0, C) and imaginary parts in [C, 2C).
template <typename T>
ag::Var<T> fft2c(const ag::Var<T>& x);

/// Differentiable inverse of fft2c keeping the real part: [N, 2C, H, W] -> [N, C, H, W].
template <typename T>
ag::Var<T> ifft2c(const ag::Var<T>& z);

/// Multiplies both halves of a stacked spectrum [N, 2C, U, V] by the band-pass
/// map built from `d0`, `w` (each [C]) over `distance` [U, V].
template <typename T>
ag::Var<T> apply_band_pass(const ag::Var<T>& z, const ag::Var<T>& d0, const ag::Var<T>& w,
                           const Tensor<double>& distance);

}  // namespace freeseed
