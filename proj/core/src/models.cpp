#include "freeseed/models.hpp"

#include <cmath>
#include <stdexcept>

#include "freeseed/ops.hpp"

namespace freeseed::models {

namespace {

template <typename T>
void require_image(const Var<T>& x, const char* what) {
  ops::require_nchw(x.shape(), what);
  if (x.dim(1) != 1) throw std::invalid_argument(std::string(what) + ": expected 1 channel, got " + shape_string(x.shape()));
}

std::int64_t round_up(std::int64_t v, std::int64_t m) { return (v + m - 1) / m * m; }

}  // namespace

template <typename T>
FreeNet<T>::FreeNet(const FreeNetConfig& config, Rng& rng) : config_(config) {
  if (config.stages < 1 || config.base_width < 2 || config.base_width % 2 != 0) {
    throw std::invalid_argument("FreeNet needs >= 1 stage and an even base width >= 2");
  }
  auto width = [&](int s) { return static_cast<std::int64_t>(config.base_width) << s; };
  auto make_stage = [&](int s) {
    Stage st;
    if (config.block == StageBlock::ffc) {
      nn::FourierUnitOptions fu;
      fu.band_pass = config.band_pass;
      fu.d0_init = config.d0_init;
      st.ffc = nn::FfcBlock<T>(width(s), fu, rng);
    } else {
      st.conv = nn::ConvBlock<T>(width(s), rng);
    }
    return st;
  };
  head_ = nn::Conv2d<T>(1, width(0), 3, 1, 1, true, rng);
  for (int s = 0; s < config.stages; ++s) {
    encoder_.push_back(make_stage(s));
    if (s + 1 < config.stages) down_.emplace_back(width(s), width(s + 1), 3, 2, rng);
  }
  for (int s = config.stages - 2; s >= 0; --s) {
    up_.emplace_back(width(s + 1), width(s), 3, 1, rng);
    fuse_.emplace_back(2 * width(s), width(s), 1, 1, 0, true, rng);
    decoder_.push_back(make_stage(s));
  }
  tail_ = nn::Conv2d<T>(width(0), 1, 1, 1, 0, true, rng, 0.1);
}

template <typename T>
Var<T> FreeNet<T>::run_block(const Stage& stage, const Var<T>& x) const {
  return config_.block == StageBlock::ffc ? stage.ffc.forward(x) : stage.conv.forward(x);
}

template <typename T>
void FreeNet<T>::collect_block(const Stage& stage, ParameterList<T>& out, const std::string& prefix) const {
  if (config_.block == StageBlock::ffc) {
    stage.ffc.collect(out, prefix);
  } else {
    stage.conv.collect(out, prefix);
  }
}

template <typename T>
typename FreeNet<T>::Output FreeNet<T>::forward(const Var<T>& sparse) const {
  require_image(sparse, "FreeNet");
  const std::int64_t m = std::int64_t{1} << (config_.stages - 1);
  if (sparse.dim(2) % m != 0 || sparse.dim(3) % m != 0) {
    throw std::invalid_argument("FreeNet: image sides must be divisible by " + std::to_string(m));
  }
  Var<T> x = head_.forward(sparse);
  std::vector<Var<T>> skips;
  for (int s = 0; s < config_.stages; ++s) {
    x = run_block(encoder_[static_cast<std::size_t>(s)], x);
    if (s + 1 < config_.stages) {
      skips.push_back(x);
      x = down_[static_cast<std::size_t>(s)].forward(x);
    }
  }
  for (std::size_t d = 0; d < decoder_.size(); ++d) {
    x = up_[d].forward(ops::upsample_nearest2x(x));
    x = fuse_[d].forward(ops::concat_channels<T>({x, skips[skips.size() - 1 - d]}));
    x = run_block(decoder_[d], x);
  }
  Output out;
  out.artifact = tail_.forward(x);
  out.restored = ops::sub(sparse, out.artifact);
  return out;
}

template <typename T>
ParameterList<T> FreeNet<T>::parameters() const {
  ParameterList<T> out;
  head_.collect(out, "freenet.head");
  for (std::size_t s = 0; s < encoder_.size(); ++s) {
    collect_block(encoder_[s], out, "freenet.enc" + std::to_string(s));
    if (s < down_.size()) down_[s].collect(out, "freenet.down" + std::to_string(s));
  }
  for (std::size_t d = 0; d < decoder_.size(); ++d) {
    up_[d].collect(out, "freenet.up" + std::to_string(d));
    fuse_[d].collect(out, "freenet.fuse" + std::to_string(d));
    collect_block(decoder_[d], out, "freenet.dec" + std::to_string(d));
  }
  tail_.collect(out, "freenet.tail");
  return out;
}

template <typename T>
SeedNet<T>::SeedNet(const SeedNetConfig& config, Rng& rng) : config_(config) {
  if (config.blocks < 1 || config.width < 2 || config.width % 2 != 0) {
    throw std::invalid_argument("SeedNet needs >= 1 block and an even width >= 2");
  }
  nn::FourierUnitOptions fu;
  fu.band_pass = config.band_pass;
  head_ = nn::Conv2d<T>(1, config.width, 3, 1, 1, true, rng);
  for (int b = 0; b < config.blocks; ++b) blocks_.emplace_back(config.width, fu, rng);
  // Zero tail: the refiner starts as the identity, so early mask-loss gradients
  // reach FreeNet unchanged instead of through a random perturbation.
  tail_ = nn::Conv2d<T>(config.width, 1, 3, 1, 1, true, rng, 0.0);
}

template <typename T>
Var<T> SeedNet<T>::forward(const Var<T>& restored) const {
  require_image(restored, "SeedNet");
  Var<T> x = head_.forward(restored);
  for (const auto& block : blocks_) x = ops::add(x, block.forward(x));
  return ops::add(restored, tail_.forward(x));
}

template <typename T>
ParameterList<T> SeedNet<T>::parameters() const {
  ParameterList<T> out;
  head_.collect(out, "seednet.head");
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b].collect(out, "seednet.block" + std::to_string(b));
  tail_.collect(out, "seednet.tail");
  return out;
}

template <typename T>
SinoUNet<T>::SinoUNet(const SinoUNetConfig& config, Rng& rng) : config_(config) {
  if (config.stages < 1 || config.base_width < 1) throw std::invalid_argument("SinoUNet needs >= 1 stage");
  auto width = [&](int s) { return static_cast<std::int64_t>(config.base_width) << s; };
  for (int s = 0; s < config.stages; ++s) {
    const std::int64_t in = (s == 0 ? 1 : width(s - 1)) + 1;
    encoder_a_.emplace_back(in, width(s), 3, 1, rng);
    encoder_b_.emplace_back(width(s), width(s), 3, 1, rng);
  }
  for (int s = config.stages - 2; s >= 0; --s) {
    up_.emplace_back(width(s + 1), width(s), 3, 1, rng);
    decoder_.emplace_back(2 * width(s), width(s), 3, 1, rng);
  }
  tail_ = nn::Conv2d<T>(width(0), 1, 1, 1, 0, true, rng, 0.1);
}

template <typename T>
Var<T> SinoUNet<T>::forward(const Var<T>& sinogram, const Tensor<T>& mask) const {
  require_image(sinogram, "SinoUNet");
  require_same_shape(sinogram.shape(), mask.shape(), "SinoUNet mask");
  const std::int64_t views = sinogram.dim(2), dets = sinogram.dim(3);
  const std::int64_t m = std::int64_t{1} << (config_.stages - 1);
  const std::int64_t ph = round_up(views, m), pw = round_up(dets, m);

  Var<T> mask_level = ops::pad_to(ops::constant(mask), ph, pw);
  Var<T> x = ops::pad_to(ops::scale(sinogram, static_cast<T>(config_.input_scale)), ph, pw);
  std::vector<Var<T>> skips;
  for (int s = 0; s < config_.stages; ++s) {
    if (s > 0) {
      x = ops::avg_pool2x(x);
      mask_level = ops::avg_pool2x(mask_level);
    }
    const auto idx = static_cast<std::size_t>(s);
    x = encoder_b_[idx].forward(encoder_a_[idx].forward(ops::concat_channels<T>({x, mask_level})));
    if (s + 1 < config_.stages) skips.push_back(x);
  }
  for (std::size_t d = 0; d < decoder_.size(); ++d) {
    x = up_[d].forward(ops::upsample_nearest2x(x));
    x = decoder_[d].forward(ops::concat_channels<T>({x, skips[skips.size() - 1 - d]}));
  }
  const Var<T> residual =
      ops::scale(ops::crop_to(tail_.forward(x), views, dets), static_cast<T>(1.0 / config_.input_scale));
  Tensor<T> unseen(mask.shape());
  for (std::size_t i = 0; i < unseen.size(); ++i) unseen[i] = T{1} - mask[i];
  return ops::add(sinogram, ops::mul(residual, ops::constant(std::move(unseen))));
}

template <typename T>
ParameterList<T> SinoUNet<T>::parameters() const {
  ParameterList<T> out;
  for (std::size_t s = 0; s < encoder_a_.size(); ++s) {
    encoder_a_[s].collect(out, "sinonet.enc" + std::to_string(s) + ".a");
    encoder_b_[s].collect(out, "sinonet.enc" + std::to_string(s) + ".b");
  }
  for (std::size_t d = 0; d < decoder_.size(); ++d) {
    up_[d].collect(out, "sinonet.up" + std::to_string(d));
    decoder_[d].collect(out, "sinonet.dec" + std::to_string(d));
  }
  tail_.collect(out, "sinonet.tail");
  return out;
}

template <typename T>
Tensor<T> mask_transform(const Tensor<T>& artifact) {
  if (artifact.ndim() == 0) return artifact;
  const std::int64_t n = artifact.ndim() == 4 ? artifact.dim(0) : 1;
  const std::int64_t per = static_cast<std::int64_t>(artifact.size()) / n;
  Tensor<T> m(artifact.shape());
  for (std::int64_t s = 0; s < n; ++s) {
    const T* a = artifact.ptr() + s * per;
    double mean = 0.0;
    for (std::int64_t i = 0; i < per; ++i) mean += std::abs(static_cast<double>(a[i]));
    mean /= static_cast<double>(per);
    for (std::int64_t i = 0; i < per; ++i) m.ptr()[s * per + i] = std::abs(static_cast<double>(a[i])) > mean ? T{1} : T{0};
  }
  return m;
}

template class FreeNet<float>;
template class FreeNet<double>;
template class SeedNet<float>;
template class SeedNet<double>;
template class SinoUNet<float>;
template class SinoUNet<double>;
template Tensor<float> mask_transform(const Tensor<float>&);
template Tensor<double> mask_transform(const Tensor<double>&);

}  // namespace freeseed::models
