#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "freeseed/checkpoint.hpp"
#include "freeseed/dataset.hpp"
#include "freeseed/losses.hpp"
#include "freeseed/models.hpp"
#include "freeseed/optim.hpp"

namespace freeseed::train {

/// Ablation ladder from plain U-Net to the full method.
enum class Variant {
  baseline,
  baseline_fourier,
  baseline_seednet,
  freenet,
  freenet_one_plus_mask,
  freeseed_l1,
  freeseed,
};

struct VariantSpec {
  models::StageBlock block;
  bool band_pass;
  bool seednet;
  bool one_plus_mask;
  losses::Norm norm;
};

VariantSpec variant_spec(Variant v);
const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

enum class DualMode { joint, staged };

struct TrainConfig {
  Variant variant = Variant::freeseed;
  int n_views = 18;
  int epochs = 30;
  int batch_size = 2;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  double lr = 1e-4;
  int lr_halve_every = 10;
  /// Cap on batches per epoch; 0 uses the whole training split.
  int max_batches = 0;

  int freenet_width = 8;
  int freenet_stages = 4;
  double d0_init = 0.0;
  int seednet_width = 8;
  int seednet_blocks = 5;
  bool seednet_band_pass = false;

  bool dual_domain = false;
  DualMode dual_mode = DualMode::joint;
  /// Staged mode: leading epochs that train only the sinogram network.
  int sino_epochs = 0;
  /// Replace the sinogram network by plain interpolation (no parameters).
  bool sino_passthrough = false;
  int sinonet_width = 8;
  int sinonet_stages = 3;
  double sino_weight = 1.0;
  double rc_weight = 1.0;

  void validate() const;
  KeyValues to_key_values() const;
  /// Rejects keys outside config_keys().
  static TrainConfig from_key_values(const KeyValues& kv);
  static const std::set<std::string>& config_keys();

  models::FreeNetConfig freenet_config() const;
  models::SeedNetConfig seednet_config() const;
  models::SinoUNetConfig sinonet_config() const;
};

/// Thrown when a loss becomes NaN or infinite.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FreeNet parameters (Theta), SeedNet parameters (Phi), the optional
/// sinogram network and one optimizer per set. Parameter sets are disjoint.
template <typename T>
struct TrainState {
  TrainConfig config;
  std::unique_ptr<models::FreeNet<T>> freenet;
  std::unique_ptr<models::SeedNet<T>> seednet;
  std::unique_ptr<models::SinoUNet<T>> sinonet;
  std::unique_ptr<optim::Adam<T>> theta_optimizer;
  std::unique_ptr<optim::Adam<T>> phi_optimizer;
  std::unique_ptr<optim::Adam<T>> sino_optimizer;
  int epoch = 0;  // completed epochs
  std::int64_t iteration = 0;

  static TrainState create(const TrainConfig& config);

  ag::ParameterList<T> theta() const { return freenet->parameters(); }
  ag::ParameterList<T> phi() const { return seednet ? seednet->parameters() : ag::ParameterList<T>{}; }
  ag::ParameterList<T> sino() const { return sinonet ? sinonet->parameters() : ag::ParameterList<T>{}; }
};

template <typename T>
struct Batch {
  Tensor<T> sparse;
  Tensor<T> artifact;
  Tensor<T> full;
  Tensor<T> sinogram;
  Tensor<T> mask;
  Tensor<T> full_sinogram;
};

Batch<float> make_batch(const std::vector<SampleTensors>& samples, const std::vector<std::size_t>& indices);

template <typename T>
Batch<T> cast_batch(const Batch<float>& b);

enum class TrainEvent { sino_step_begin, sino_step_end, phi_step_begin, phi_step_end, theta_step_begin, theta_step_end };

const char* event_name(TrainEvent e);

struct Hooks {
  std::function<void(TrainEvent, int epoch, std::int64_t iteration)> on_event;
  void fire(TrainEvent e, int epoch, std::int64_t iteration) const {
    if (on_event) on_event(e, epoch, iteration);
  }
};

struct StepLosses {
  double l_art = 0.0;
  double l_mask = 0.0;
  double l_total = 0.0;
  double l_sino = 0.0;
  double l_rc = 0.0;
};

/// FreeNet forward plus the two terms of its objective. With a SeedNet the
/// mask loss is evaluated on SeedNet(I_hat) with gradients flowing through
/// SeedNet into Theta; without one it is zero.
template <typename T>
struct ThetaTerms {
  typename models::FreeNet<T>::Output output;
  Tensor<T> mask;
  ag::Var<T> l_art;
  ag::Var<T> l_mask;
};

template <typename T>
ThetaTerms<T> theta_terms(const TrainState<T>& state, const Batch<T>& batch);

/// One iteration on image data in this order: FreeNet forward, mask from the
/// detached artifact estimate, SeedNet step on the mask loss with FreeNet's
/// output held constant, SeedNet re-forward, FreeNet step on
/// l_art + alpha * l_mask with SeedNet's parameters excluded from the step.
template <typename T>
StepLosses image_step(TrainState<T>& state, const Batch<T>& batch, double lr, const Hooks& hooks = {});

/// Image-domain input for the dual-domain branch: FBP of the restored (or,
/// in pass-through mode, interpolated) sinogram.
template <typename T>
Tensor<T> dual_domain_input(const TrainState<T>& state, const Batch<T>& batch, const FbpOperator& fbp);

/// Sinogram step on sino_weight * L_sino + rc_weight * L_rc (when enabled),
/// then image_step on the FBP of the restored sinogram.
template <typename T>
StepLosses dual_step(TrainState<T>& state, const Batch<T>& batch, std::shared_ptr<const FbpOperator> fbp, double lr,
                     bool train_sino, bool train_image, const Hooks& hooks = {});

struct TrainOptions {
  /// Receives train_log.csv and per-epoch checkpoints; empty disables file output.
  std::filesystem::path output_dir;
  Hooks hooks;
  std::ostream* progress = nullptr;
};

/// Runs epochs state.epoch .. config.epochs - 1 on the dataset's training split.
void train(TrainState<float>& state, const Dataset& data, const TrainOptions& options = {});

TrainState<float> train_freeseed(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});
TrainState<float> train_dual_domain(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});

std::string log_header(const TrainConfig& config);

Checkpoint to_checkpoint(const TrainState<float>& state, const FanBeamGeometry& geometry);
TrainState<float> state_from_checkpoint(const Checkpoint& checkpoint);
/// Copies parameter values (and optimizer moments when present) into `state`.
void load_parameters(TrainState<float>& state, const Checkpoint& checkpoint);

/// Restored image I_hat for one sample [1, 1, H, W] (no gradient recording).
Tensor<float> predict(const TrainState<float>& state, const SampleTensors& sample, const FbpOperator* fbp);

}  // namespace freeseed::train
