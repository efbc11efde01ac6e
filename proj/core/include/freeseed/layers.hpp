#pragma once

#include <string>

#include "freeseed/autograd.hpp"
#include "freeseed/random.hpp"

namespace freeseed::nn {

using ag::Parameter;
using ag::ParameterList;
using ag::Var;

template <typename T>
Parameter<T> make_parameter(std::string name, Tensor<T> value);

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  /// Kaiming-uniform weights scaled by `gain`; zero bias.
  Conv2d(std::int64_t in_channels, std::int64_t out_channels, int kernel, int stride, int padding, bool bias, Rng& rng,
         double gain = 1.0);

  Var<T> forward(const Var<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  Var<T>& weight() { return weight_.var; }
  Var<T>& bias() { return bias_.var; }
  bool has_bias() const { return bias_.var.defined(); }

 private:
  Parameter<T> weight_;
  Parameter<T> bias_;
  int stride_ = 1;
  int padding_ = 0;
};

/// Group count: largest divisor of `channels` not above 8.
int default_groups(std::int64_t channels);

template <typename T>
class GroupNorm {
 public:
  GroupNorm() = default;
  explicit GroupNorm(std::int64_t channels);

  Var<T> forward(const Var<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

 private:
  Parameter<T> gamma_;
  Parameter<T> beta_;
  int groups_ = 1;
};

/// conv -> group norm -> ReLU.
template <typename T>
class ConvNormAct {
 public:
  ConvNormAct() = default;
  ConvNormAct(std::int64_t in_channels, std::int64_t out_channels, int kernel, int stride, Rng& rng);

  Var<T> forward(const Var<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

 private:
  Conv2d<T> conv_;
  GroupNorm<T> norm_;
};

struct FourierUnitOptions {
  bool band_pass = true;
  /// Group norm + ReLU after the spectral convolution (otherwise a biased conv only).
  bool norm_act = true;
  double d0_init = 0.0;
  double w_init = 1.0;
};

/// Spatial map -> centered spectrum -> band-pass attention -> 1x1 conv over
/// stacked real/imaginary channels -> inverse transform. Channels in = out.
template <typename T>
class BandPassFourierUnit {
 public:
  BandPassFourierUnit() = default;
  BandPassFourierUnit(std::int64_t channels, const FourierUnitOptions& options, Rng& rng);

  Var<T> forward(const Var<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  Conv2d<T>& conv() { return conv_; }
  Var<T>& d0() { return d0_.var; }
  Var<T>& w() { return w_.var; }
  const FourierUnitOptions& options() const { return options_; }

 private:
  FourierUnitOptions options_;
  Conv2d<T> conv_;
  GroupNorm<T> norm_;
  Parameter<T> d0_;
  Parameter<T> w_;
};

/// Fast Fourier convolution block over an even channel count: local and
/// global halves with local->local and local->global 3x3 convs, a
/// global->local 1x1 conv and a global->global Fourier unit, summed per
/// destination, normalized and rectified.
template <typename T>
class FfcBlock {
 public:
  FfcBlock() = default;
  FfcBlock(std::int64_t channels, const FourierUnitOptions& options, Rng& rng);

  Var<T> forward(const Var<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  BandPassFourierUnit<T>& fourier_unit() { return g2g_; }

 private:
  std::int64_t half_ = 0;
  Conv2d<T> l2l_;
  Conv2d<T> l2g_;
  Conv2d<T> g2l_;
  BandPassFourierUnit<T> g2g_;
  GroupNorm<T> norm_local_;
  GroupNorm<T> norm_global_;
};

/// Two conv-norm-ReLU layers (the plain U-Net stage).
template <typename T>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(std::int64_t channels, Rng& rng);

  Var<T> forward(const Var<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

 private:
  ConvNormAct<T> first_;
  ConvNormAct<T> second_;
};

}  // namespace freeseed::nn
