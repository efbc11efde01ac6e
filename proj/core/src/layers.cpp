#include "freeseed/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "freeseed/ops.hpp"
#include "freeseed/spectral.hpp"

namespace freeseed::nn {

template <typename T>
Parameter<T> make_parameter(std::string name, Tensor<T> value) {
  Parameter<T> p;
  p.name = std::move(name);
  p.var = Var<T>(std::move(value), true);
  return p;
}

template <typename T>
Conv2d<T>::Conv2d(std::int64_t in_channels, std::int64_t out_channels, int kernel, int stride, int padding, bool bias,
                  Rng& rng, double gain)
    : stride_(stride), padding_(padding) {
  Tensor<T> w({out_channels, in_channels, kernel, kernel});
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(in_channels * kernel * kernel));
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  weight_ = make_parameter<T>("weight", std::move(w));
  if (bias) bias_ = make_parameter<T>("bias", Tensor<T>({out_channels}));
}

template <typename T>
Var<T> Conv2d<T>::forward(const Var<T>& x) const {
  return ops::conv2d(x, weight_.var, bias_.var, stride_, padding_);
}

template <typename T>
void Conv2d<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight_.var, false, T{}, T{}});
  if (bias_.var.defined()) out.push_back({prefix + ".bias", bias_.var, false, T{}, T{}});
}

int default_groups(std::int64_t channels) {
  for (int g = 8; g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

template <typename T>
GroupNorm<T>::GroupNorm(std::int64_t channels) : groups_(default_groups(channels)) {
  gamma_ = make_parameter<T>("gamma", Tensor<T>({channels}, T{1}));
  beta_ = make_parameter<T>("beta", Tensor<T>({channels}));
}

template <typename T>
Var<T> GroupNorm<T>::forward(const Var<T>& x) const {
  return ops::group_norm(x, groups_, gamma_.var, beta_.var);
}

template <typename T>
void GroupNorm<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".gamma", gamma_.var, false, T{}, T{}});
  out.push_back({prefix + ".beta", beta_.var, false, T{}, T{}});
}

template <typename T>
ConvNormAct<T>::ConvNormAct(std::int64_t in_channels, std::int64_t out_channels, int kernel, int stride, Rng& rng)
    : conv_(in_channels, out_channels, kernel, stride, kernel / 2, false, rng), norm_(out_channels) {}

template <typename T>
Var<T> ConvNormAct<T>::forward(const Var<T>& x) const {
  return ops::relu(norm_.forward(conv_.forward(x)));
}

template <typename T>
void ConvNormAct<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  conv_.collect(out, prefix + ".conv");
  norm_.collect(out, prefix + ".norm");
}

template <typename T>
BandPassFourierUnit<T>::BandPassFourierUnit(std::int64_t channels, const FourierUnitOptions& options, Rng& rng)
    : options_(options),
      conv_(2 * channels, 2 * channels, 1, 1, 0, !options.norm_act, rng) {
  if (options.norm_act) norm_ = GroupNorm<T>(2 * channels);
  if (options.band_pass) {
    d0_ = make_parameter<T>("d0", Tensor<T>({channels}, static_cast<T>(options.d0_init)));
    w_ = make_parameter<T>("w", Tensor<T>({channels}, static_cast<T>(options.w_init)));
  }
}

template <typename T>
Var<T> BandPassFourierUnit<T>::forward(const Var<T>& x) const {
  ops::require_nchw(x.shape(), "BandPassFourierUnit");
  Var<T> z = fft2c(x);
  if (options_.band_pass) z = apply_band_pass(z, d0_.var, w_.var, distance_map(x.dim(2), x.dim(3)));
  z = conv_.forward(z);
  if (options_.norm_act) z = ops::relu(norm_.forward(z));
  return ifft2c(z);
}

template <typename T>
void BandPassFourierUnit<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  conv_.collect(out, prefix + ".conv");
  if (options_.norm_act) norm_.collect(out, prefix + ".norm");
  if (options_.band_pass) {
    out.push_back({prefix + ".d0", d0_.var, true, T{0}, T{1}});
    out.push_back({prefix + ".w", w_.var, true, static_cast<T>(kMinBandwidth), std::numeric_limits<T>::infinity()});
  }
}

template <typename T>
FfcBlock<T>::FfcBlock(std::int64_t channels, const FourierUnitOptions& options, Rng& rng) : half_(channels / 2) {
  if (channels < 2 || channels % 2 != 0) {
    throw std::invalid_argument("FFC block needs an even channel count, got " + std::to_string(channels));
  }
  l2l_ = Conv2d<T>(half_, half_, 3, 1, 1, false, rng);
  l2g_ = Conv2d<T>(half_, half_, 3, 1, 1, false, rng);
  g2l_ = Conv2d<T>(half_, half_, 1, 1, 0, false, rng);
  g2g_ = BandPassFourierUnit<T>(half_, options, rng);
  norm_local_ = GroupNorm<T>(half_);
  norm_global_ = GroupNorm<T>(half_);
}

template <typename T>
Var<T> FfcBlock<T>::forward(const Var<T>& x) const {
  ops::require_nchw(x.shape(), "FfcBlock");
  if (x.dim(1) != 2 * half_) {
    throw std::invalid_argument("FfcBlock: expected " + std::to_string(2 * half_) + " channels, got " +
                                std::to_string(x.dim(1)));
  }
  const Var<T> local = ops::slice_channels(x, 0, half_);
  const Var<T> global = ops::slice_channels(x, half_, half_);
  const Var<T> out_local = ops::add(l2l_.forward(local), g2l_.forward(global));
  const Var<T> out_global = ops::add(l2g_.forward(local), g2g_.forward(global));
  return ops::concat_channels<T>(
      {ops::relu(norm_local_.forward(out_local)), ops::relu(norm_global_.forward(out_global))});
}

template <typename T>
void FfcBlock<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  l2l_.collect(out, prefix + ".l2l");
  l2g_.collect(out, prefix + ".l2g");
  g2l_.collect(out, prefix + ".g2l");
  g2g_.collect(out, prefix + ".g2g");
  norm_local_.collect(out, prefix + ".norm_local");
  norm_global_.collect(out, prefix + ".norm_global");
}

template <typename T>
ConvBlock<T>::ConvBlock(std::int64_t channels, Rng& rng)
    : first_(channels, channels, 3, 1, rng), second_(channels, channels, 3, 1, rng) {}

template <typename T>
Var<T> ConvBlock<T>::forward(const Var<T>& x) const {
  return second_.forward(first_.forward(x));
}

template <typename T>
void ConvBlock<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  first_.collect(out, prefix + ".0");
  second_.collect(out, prefix + ".1");
}

#define FREESEED_INSTANTIATE_LAYERS(T)                              \
  template Parameter<T> make_parameter<T>(std::string, Tensor<T>); \
  template class Conv2d<T>;                                         \
  template class GroupNorm<T>;                                      \
  template class ConvNormAct<T>;                                    \
  template class BandPassFourierUnit<T>;                            \
  template class FfcBlock<T>;                                       \
  template class ConvBlock<T>;

FREESEED_INSTANTIATE_LAYERS(float)
FREESEED_INSTANTIATE_LAYERS(double)

}  // namespace freeseed::nn
