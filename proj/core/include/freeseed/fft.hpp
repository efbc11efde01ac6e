#pragma once

#include <complex>
#include <cstdint>
#include <span>

namespace freeseed::fft {

using cplx = std::complex<double>;

/// In-place unnormalized 2D DFT of a row-major rows x cols array.
void forward_2d(std::span<cplx> data, std::int64_t rows, std::int64_t cols);
/// In-place unnormalized inverse 2D DFT (no 1/N factor).
void inverse_2d(std::span<cplx> data, std::int64_t rows, std::int64_t cols);

/// In-place unnormalized 1D transforms of `count` contiguous rows of length n.
void forward_rows(std::span<cplx> data, std::int64_t count, std::int64_t n);
void inverse_rows(std::span<cplx> data, std::int64_t count, std::int64_t n);

/// Index of the raw DFT bin that lands at centered position `u` (DC at n/2).
inline std::int64_t centered_to_raw(std::int64_t u, std::int64_t n) { return ((u - n / 2) % n + n) % n; }

/// out[u, v] = in[centered_to_raw(u), centered_to_raw(v)].
void shift_to_center(std::span<const cplx> in, std::span<cplx> out, std::int64_t rows, std::int64_t cols);
/// Inverse of shift_to_center.
void shift_from_center(std::span<const cplx> in, std::span<cplx> out, std::int64_t rows, std::int64_t cols);

}  // namespace freeseed::fft
