#pragma once

#include <vector>

#include "freeseed/autograd.hpp"

// Differentiable tensor operations on NCHW variables.
namespace freeseed::ops {

using ag::Var;

template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T s);

/// Scalar reductions, result shape {1}.
template <typename T>
Var<T> sum(const Var<T>& a);
template <typename T>
Var<T> mean(const Var<T>& a);

template <typename T>
Var<T> relu(const Var<T>& a);
template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope);

/// 2D convolution, square kernel [Cout, Cin, k, k]; `bias` may be undefined.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int padding);

/// Group normalization with per-channel affine `gamma`, `beta` [C].
template <typename T>
Var<T> group_norm(const Var<T>& x, int groups, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);
template <typename T>
Var<T> slice_channels(const Var<T>& x, std::int64_t begin, std::int64_t count);

template <typename T>
Var<T> upsample_nearest2x(const Var<T>& x);
template <typename T>
Var<T> avg_pool2x(const Var<T>& x);

/// Zero-pads bottom/right up to (height, width).
template <typename T>
Var<T> pad_to(const Var<T>& x, std::int64_t height, std::int64_t width);
/// Keeps the top-left (height, width) window.
template <typename T>
Var<T> crop_to(const Var<T>& x, std::int64_t height, std::int64_t width);

/// Stacks equally shaped [1, C, H, W] variables along the batch axis.
template <typename T>
Var<T> stack_batch(const std::vector<Var<T>>& parts);

void require_nchw(const Shape& s, const char* what);

}  // namespace freeseed::ops
