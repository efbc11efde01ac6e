#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freeseed/layers.hpp"

namespace freeseed::models {

using ag::ParameterList;
using ag::Var;

enum class StageBlock { conv, ffc };

struct FreeNetConfig {
  int base_width = 8;
  int stages = 4;
  StageBlock block = StageBlock::ffc;
  bool band_pass = true;
  double d0_init = 0.0;
};

/// U-Net predicting the artifact map; the restored image is I_s - A_hat.
/// Stage widths are base_width * 2^s. Input sides must be divisible by 2^(stages-1).
template <typename T>
class FreeNet {
 public:
  struct Output {
    Var<T> artifact;
    Var<T> restored;
  };

  FreeNet(const FreeNetConfig& config, Rng& rng);

  Output forward(const Var<T>& sparse) const;
  ParameterList<T> parameters() const;
  const FreeNetConfig& config() const { return config_; }
  nn::Conv2d<T>& tail() { return tail_; }

 private:
  struct Stage {
    nn::FfcBlock<T> ffc;
    nn::ConvBlock<T> conv;
  };
  Var<T> run_block(const Stage& stage, const Var<T>& x) const;
  void collect_block(const Stage& stage, ParameterList<T>& out, const std::string& prefix) const;

  FreeNetConfig config_;
  nn::Conv2d<T> head_;
  std::vector<Stage> encoder_;
  std::vector<nn::ConvNormAct<T>> down_;
  std::vector<nn::ConvNormAct<T>> up_;
  std::vector<nn::Conv2d<T>> fuse_;
  std::vector<Stage> decoder_;
  nn::Conv2d<T> tail_;
};

struct SeedNetConfig {
  int width = 8;
  int blocks = 5;
  bool band_pass = false;
};

/// Refiner: head conv, `blocks` residual FFC blocks, tail conv, global skip.
template <typename T>
class SeedNet {
 public:
  SeedNet(const SeedNetConfig& config, Rng& rng);

  Var<T> forward(const Var<T>& restored) const;
  ParameterList<T> parameters() const;
  const SeedNetConfig& config() const { return config_; }
  nn::Conv2d<T>& tail() { return tail_; }

 private:
  SeedNetConfig config_;
  nn::Conv2d<T> head_;
  std::vector<nn::FfcBlock<T>> blocks_;
  nn::Conv2d<T> tail_;
};

struct SinoUNetConfig {
  int base_width = 8;
  int stages = 3;
  /// Sinogram values are multiplied by this before entering the network.
  double input_scale = 0.1;
};

/// Mask U-Net over [N, 1, views, detectors] sinograms. The mask is
/// concatenated to every encoder stage; measured rows pass through unchanged.
template <typename T>
class SinoUNet {
 public:
  SinoUNet(const SinoUNetConfig& config, Rng& rng);

  Var<T> forward(const Var<T>& sinogram, const Tensor<T>& mask) const;
  ParameterList<T> parameters() const;
  const SinoUNetConfig& config() const { return config_; }

 private:
  SinoUNetConfig config_;
  std::vector<nn::ConvNormAct<T>> encoder_a_;
  std::vector<nn::ConvNormAct<T>> encoder_b_;
  std::vector<nn::ConvNormAct<T>> up_;
  std::vector<nn::ConvNormAct<T>> decoder_;
  nn::Conv2d<T> tail_;
};

/// 1 where |A_hat| exceeds the per-sample mean of |A_hat|, else 0.
template <typename T>
Tensor<T> mask_transform(const Tensor<T>& artifact);

template <typename T>
std::int64_t parameter_count(const ParameterList<T>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += static_cast<std::int64_t>(p.var.value().size());
  return n;
}

}  // namespace freeseed::models
