#include "freeseed/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "freeseed/fbp_op.hpp"
#include "freeseed/ops.hpp"
#include "freeseed/random.hpp"

namespace freeseed::train {

namespace {

using losses::Norm;
using models::StageBlock;

struct VariantEntry {
  Variant variant;
  const char* name;
  VariantSpec spec;
};

const VariantEntry kVariants[] = {
    {Variant::baseline, "baseline", {StageBlock::conv, false, false, false, Norm::l2}},
    {Variant::baseline_fourier, "baseline+fourier", {StageBlock::ffc, false, false, false, Norm::l2}},
    {Variant::baseline_seednet, "baseline+seednet", {StageBlock::conv, false, true, false, Norm::l2}},
    {Variant::freenet, "freenet", {StageBlock::ffc, true, false, false, Norm::l2}},
    {Variant::freenet_one_plus_mask, "freenet-1+mask", {StageBlock::ffc, true, false, true, Norm::l2}},
    {Variant::freeseed_l1, "freeseed-l1", {StageBlock::ffc, true, true, false, Norm::l1}},
    {Variant::freeseed, "freeseed", {StageBlock::ffc, true, true, false, Norm::l2}},
};

const VariantEntry& entry(Variant v) {
  for (const auto& e : kVariants) {
    if (e.variant == v) return e;
  }
  throw std::invalid_argument("unknown variant");
}

template <typename T>
double checked(const ag::Var<T>& loss, const char* what) {
  const double v = static_cast<double>(loss.value()[0]);
  if (!std::isfinite(v)) throw NumericalFailure(std::string("non-finite ") + what + " loss");
  return v;
}

template <typename T>
Tensor<T> stack(const std::vector<const Tensor<float>*>& parts) {
  const Shape& s = parts.front()->shape();
  Tensor<T> out({static_cast<std::int64_t>(parts.size()), s[1], s[2], s[3]});
  std::size_t offset = 0;
  for (const auto* p : parts) {
    require_same_shape(s, p->shape(), "batch");
    for (std::size_t i = 0; i < p->size(); ++i) out[offset + i] = static_cast<T>((*p)[i]);
    offset += p->size();
  }
  return out;
}

// Per-sample FBP of [N, 1, V, D] into [N, 1, H, W], matching fbp_apply's arithmetic.
template <typename T>
Tensor<T> fbp_batch(const Tensor<T>& sinograms, const FbpOperator& op) {
  const std::int64_t n = sinograms.dim(0), nv = sinograms.dim(2), nd = sinograms.dim(3);
  const std::int64_t size = op.geometry().image_size;
  Tensor<T> out({n, 1, size, size});
  Tensor<double> row({nv, nd});
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t i = 0; i < nv * nd; ++i) row[static_cast<std::size_t>(i)] = static_cast<double>(sinograms.ptr()[s * nv * nd + i]);
    const Image img = op.apply(row);
    for (std::int64_t i = 0; i < size * size; ++i) out.ptr()[s * size * size + i] = static_cast<T>(img[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::string epoch_checkpoint_name(int epoch) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoint_epoch_%03d.fsck", epoch);
  return buf;
}

}  // namespace

VariantSpec variant_spec(Variant v) { return entry(v).spec; }
const char* variant_name(Variant v) { return entry(v).name; }

Variant parse_variant(const std::string& name) {
  for (const auto& e : kVariants) {
    if (name == e.name) return e.variant;
  }
  std::string known;
  for (const auto& e : kVariants) known += std::string(known.empty() ? "" : ", ") + e.name;
  throw std::invalid_argument("unknown variant '" + name + "' (expected one of: " + known + ")");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = [] {
    std::vector<Variant> out;
    for (const auto& e : kVariants) out.push_back(e.variant);
    return out;
  }();
  return v;
}

const char* event_name(TrainEvent e) {
  switch (e) {
    case TrainEvent::sino_step_begin: return "sino_step_begin";
    case TrainEvent::sino_step_end: return "sino_step_end";
    case TrainEvent::phi_step_begin: return "phi_step_begin";
    case TrainEvent::phi_step_end: return "phi_step_end";
    case TrainEvent::theta_step_begin: return "theta_step_begin";
    case TrainEvent::theta_step_end: return "theta_step_end";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (!(alpha > 0.0)) fail("alpha must be > 0");
  if (n_views < 2) fail("n_views must be >= 2");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (lr_halve_every < 1) fail("lr_halve_every must be >= 1");
  if (max_batches < 0) fail("max_batches must be >= 0");
  if (!(d0_init >= 0.0 && d0_init <= 1.0)) fail("d0_init must lie in [0, 1]");
  if (seednet_blocks < 1) fail("seednet_blocks must be >= 1");
  if (sino_epochs < 0 || sino_epochs > epochs) fail("sino_epochs must lie in [0, epochs]");
  if (!(sino_weight >= 0.0) || !(rc_weight >= 0.0)) fail("sinogram loss weights must be >= 0");
}

const std::set<std::string>& TrainConfig::config_keys() {
  static const std::set<std::string> keys = {
      "variant",       "n_views",        "epochs",         "batch_size",        "alpha",        "seed",
      "lr",            "lr_halve_every", "max_batches",    "freenet_width",     "freenet_stages", "d0_init",
      "seednet_width", "seednet_blocks", "seednet_band_pass", "dual_domain",    "dual_mode",    "sino_epochs",
      "sino_passthrough", "sinonet_width", "sinonet_stages", "sino_weight",     "rc_weight"};
  return keys;
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  kv.set("variant", variant_name(variant));
  kv.set("n_views", n_views);
  kv.set("epochs", epochs);
  kv.set("batch_size", batch_size);
  kv.set("alpha", alpha);
  kv.set("seed", static_cast<long long>(seed));
  kv.set("lr", lr);
  kv.set("lr_halve_every", lr_halve_every);
  kv.set("max_batches", max_batches);
  kv.set("freenet_width", freenet_width);
  kv.set("freenet_stages", freenet_stages);
  kv.set("d0_init", d0_init);
  kv.set("seednet_width", seednet_width);
  kv.set("seednet_blocks", seednet_blocks);
  kv.set("seednet_band_pass", seednet_band_pass);
  kv.set("dual_domain", dual_domain);
  kv.set("dual_mode", dual_mode == DualMode::joint ? "joint" : "staged");
  kv.set("sino_epochs", sino_epochs);
  kv.set("sino_passthrough", sino_passthrough);
  kv.set("sinonet_width", sinonet_width);
  kv.set("sinonet_stages", sinonet_stages);
  kv.set("sino_weight", sino_weight);
  kv.set("rc_weight", rc_weight);
  return kv;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv) {
  kv.require_known(config_keys());
  TrainConfig c;
  c.variant = parse_variant(kv.get_string("variant", variant_name(c.variant)));
  c.n_views = static_cast<int>(kv.get_int("n_views", c.n_views));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.alpha = kv.get_double("alpha", c.alpha);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.lr = kv.get_double("lr", c.lr);
  c.lr_halve_every = static_cast<int>(kv.get_int("lr_halve_every", c.lr_halve_every));
  c.max_batches = static_cast<int>(kv.get_int("max_batches", c.max_batches));
  c.freenet_width = static_cast<int>(kv.get_int("freenet_width", c.freenet_width));
  c.freenet_stages = static_cast<int>(kv.get_int("freenet_stages", c.freenet_stages));
  c.d0_init = kv.get_double("d0_init", c.d0_init);
  c.seednet_width = static_cast<int>(kv.get_int("seednet_width", c.seednet_width));
  c.seednet_blocks = static_cast<int>(kv.get_int("seednet_blocks", c.seednet_blocks));
  c.seednet_band_pass = kv.get_bool("seednet_band_pass", c.seednet_band_pass);
  c.dual_domain = kv.get_bool("dual_domain", c.dual_domain);
  const std::string mode = kv.get_string("dual_mode", "joint");
  if (mode != "joint" && mode != "staged") throw std::invalid_argument("dual_mode must be joint or staged");
  c.dual_mode = mode == "joint" ? DualMode::joint : DualMode::staged;
  c.sino_epochs = static_cast<int>(kv.get_int("sino_epochs", c.sino_epochs));
  c.sino_passthrough = kv.get_bool("sino_passthrough", c.sino_passthrough);
  c.sinonet_width = static_cast<int>(kv.get_int("sinonet_width", c.sinonet_width));
  c.sinonet_stages = static_cast<int>(kv.get_int("sinonet_stages", c.sinonet_stages));
  c.sino_weight = kv.get_double("sino_weight", c.sino_weight);
  c.rc_weight = kv.get_double("rc_weight", c.rc_weight);
  c.validate();
  return c;
}

models::FreeNetConfig TrainConfig::freenet_config() const {
  const VariantSpec spec = variant_spec(variant);
  models::FreeNetConfig f;
  f.base_width = freenet_width;
  f.stages = freenet_stages;
  f.block = spec.block;
  f.band_pass = spec.band_pass;
  f.d0_init = d0_init;
  return f;
}

models::SeedNetConfig TrainConfig::seednet_config() const {
  return {seednet_width, seednet_blocks, seednet_band_pass};
}

models::SinoUNetConfig TrainConfig::sinonet_config() const {
  models::SinoUNetConfig s;
  s.base_width = sinonet_width;
  s.stages = sinonet_stages;
  return s;
}

template <typename T>
TrainState<T> TrainState<T>::create(const TrainConfig& config) {
  config.validate();
  TrainState<T> st;
  st.config = config;
  Rng theta_rng(config.seed);
  st.freenet = std::make_unique<models::FreeNet<T>>(config.freenet_config(), theta_rng);
  st.theta_optimizer = std::make_unique<optim::Adam<T>>(st.freenet->parameters());
  if (variant_spec(config.variant).seednet) {
    Rng phi_rng(config.seed + 1);
    st.seednet = std::make_unique<models::SeedNet<T>>(config.seednet_config(), phi_rng);
    st.phi_optimizer = std::make_unique<optim::Adam<T>>(st.seednet->parameters());
  }
  if (config.dual_domain && !config.sino_passthrough) {
    Rng sino_rng(config.seed + 2);
    st.sinonet = std::make_unique<models::SinoUNet<T>>(config.sinonet_config(), sino_rng);
    st.sino_optimizer = std::make_unique<optim::Adam<T>>(st.sinonet->parameters());
  }
  return st;
}

Batch<float> make_batch(const std::vector<SampleTensors>& samples, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  std::vector<const Tensor<float>*> sparse, artifact, full, sino, mask, full_sino;
  for (std::size_t i : indices) {
    const auto& s = samples.at(i);
    sparse.push_back(&s.sparse);
    artifact.push_back(&s.artifact);
    full.push_back(&s.full);
    sino.push_back(&s.sinogram);
    mask.push_back(&s.sinogram_mask);
    full_sino.push_back(&s.full_sinogram);
  }
  Batch<float> b;
  b.sparse = stack<float>(sparse);
  b.artifact = stack<float>(artifact);
  b.full = stack<float>(full);
  if (!samples.at(indices.front()).sinogram.empty()) {
    b.sinogram = stack<float>(sino);
    b.mask = stack<float>(mask);
    b.full_sinogram = stack<float>(full_sino);
  }
  return b;
}

template <typename T>
Batch<T> cast_batch(const Batch<float>& b) {
  return {b.sparse.cast<T>(),   b.artifact.cast<T>(), b.full.cast<T>(),
          b.sinogram.cast<T>(), b.mask.cast<T>(),     b.full_sinogram.cast<T>()};
}

template <typename T>
ThetaTerms<T> theta_terms(const TrainState<T>& state, const Batch<T>& batch) {
  const VariantSpec spec = variant_spec(state.config.variant);
  ThetaTerms<T> t;
  t.output = state.freenet->forward(ops::constant(batch.sparse));
  t.mask = models::mask_transform(t.output.artifact.value());
  t.l_art = losses::loss_art(t.output.artifact, batch.artifact, spec.norm);
  if (state.seednet) {
    t.l_mask = losses::loss_mask(state.seednet->forward(t.output.restored), batch.full, t.mask, spec.norm);
  } else {
    t.l_mask = ops::constant(Tensor<T>({1}));
  }
  return t;
}

template <typename T>
StepLosses image_step(TrainState<T>& state, const Batch<T>& batch, double lr, const Hooks& hooks) {
  const VariantSpec spec = variant_spec(state.config.variant);
  const int epoch = state.epoch;
  const std::int64_t iter = state.iteration;
  StepLosses out;

  const auto fwd = state.freenet->forward(ops::constant(batch.sparse));
  const Tensor<T> mask = models::mask_transform(fwd.artifact.value());

  if (state.seednet) {
    hooks.fire(TrainEvent::phi_step_begin, epoch, iter);
    state.phi_optimizer->zero_grad();
    const auto refined = state.seednet->forward(ops::constant(fwd.restored.value()));
    const auto l_mask = losses::loss_mask(refined, batch.full, mask, spec.norm);
    checked(l_mask, "mask");
    ag::backward(l_mask);
    state.phi_optimizer->step(lr);
    state.phi_optimizer->zero_grad();
    hooks.fire(TrainEvent::phi_step_end, epoch, iter);
  }

  hooks.fire(TrainEvent::theta_step_begin, epoch, iter);
  state.theta_optimizer->zero_grad();
  ag::Var<T> objective;
  if (spec.one_plus_mask) {
    objective = losses::loss_one_plus_mask(fwd.artifact, batch.artifact, mask, spec.norm);
    ag::NoGradGuard no_grad;
    out.l_art = checked(losses::loss_art(ops::constant(fwd.artifact.value()), batch.artifact, spec.norm), "artifact");
  } else {
    const auto l_art = losses::loss_art(fwd.artifact, batch.artifact, spec.norm);
    out.l_art = checked(l_art, "artifact");
    if (state.seednet) {
      const auto l_mask =
          losses::loss_mask(state.seednet->forward(fwd.restored), batch.full, mask, spec.norm);
      out.l_mask = checked(l_mask, "mask");
      objective = losses::loss_total(l_art, l_mask, state.config.alpha);
    } else {
      objective = l_art;
    }
  }
  out.l_total = checked(objective, "total");
  ag::backward(objective);
  state.theta_optimizer->step(lr);
  state.theta_optimizer->zero_grad();
  if (state.phi_optimizer) state.phi_optimizer->zero_grad();
  hooks.fire(TrainEvent::theta_step_end, epoch, iter);
  return out;
}

template <typename T>
Tensor<T> dual_domain_input(const TrainState<T>& state, const Batch<T>& batch, const FbpOperator& fbp) {
  ag::NoGradGuard no_grad;
  if (state.config.sino_passthrough || !state.sinonet) return fbp_batch(batch.sinogram, fbp);
  return fbp_batch(state.sinonet->forward(ops::constant(batch.sinogram), batch.mask).value(), fbp);
}

template <typename T>
StepLosses dual_step(TrainState<T>& state, const Batch<T>& batch, std::shared_ptr<const FbpOperator> fbp, double lr,
                     bool train_sino, bool train_image, const Hooks& hooks) {
  if (batch.sinogram.empty()) throw std::invalid_argument("dual-domain training needs sinogram data");
  StepLosses out;
  Tensor<T> image_input;
  if (train_sino && state.sinonet) {
    hooks.fire(TrainEvent::sino_step_begin, state.epoch, state.iteration);
    state.sino_optimizer->zero_grad();
    const auto restored = state.sinonet->forward(ops::constant(batch.sinogram), batch.mask);
    ag::Var<T> recon;
    const auto l_sino = losses::loss_sino(restored, batch.full_sinogram, batch.mask);
    const auto l_rc = losses::loss_rc(restored, batch.full, fbp, recon);
    out.l_sino = checked(l_sino, "sinogram");
    out.l_rc = checked(l_rc, "radon consistency");
    const auto objective = ops::add(ops::scale(l_sino, static_cast<T>(state.config.sino_weight)),
                                    ops::scale(l_rc, static_cast<T>(state.config.rc_weight)));
    ag::backward(objective);
    state.sino_optimizer->step(lr);
    state.sino_optimizer->zero_grad();
    hooks.fire(TrainEvent::sino_step_end, state.epoch, state.iteration);
    image_input = recon.value();
  } else if (train_image) {
    image_input = dual_domain_input(state, batch, *fbp);
  }
  if (train_image) {
    Batch<T> image_batch;
    image_batch.full = batch.full;
    image_batch.artifact = image_input - batch.full;
    image_batch.sparse = std::move(image_input);
    const StepLosses img = image_step(state, image_batch, lr, hooks);
    out.l_art = img.l_art;
    out.l_mask = img.l_mask;
    out.l_total = img.l_total;
  }
  return out;
}

std::string log_header(const TrainConfig& config) {
  std::string h = "epoch,iter,l_art,l_mask,l_total,lr";
  if (config.dual_domain) h += ",l_sino,l_rc";
  return h;
}

void train(TrainState<float>& state, const Dataset& data, const TrainOptions& options) {
  const TrainConfig& cfg = state.config;
  cfg.validate();
  if (data.train.empty()) throw std::invalid_argument("training split is empty");
  if (data.n_views != cfg.n_views) {
    throw std::invalid_argument("dataset holds n_views=" + std::to_string(data.n_views) + " but config asks for " +
                                std::to_string(cfg.n_views));
  }
  std::shared_ptr<const FbpOperator> fbp;
  if (cfg.dual_domain) {
    if (data.train.front().sinogram.empty()) throw std::invalid_argument("dual-domain training needs sinogram data");
    fbp = std::make_shared<FbpOperator>(data.geometry, data.geometry.angles, data.window);
  }

  std::ofstream log;
  if (!options.output_dir.empty()) {
    std::filesystem::create_directories(options.output_dir);
    const auto path = options.output_dir / "train_log.csv";
    if (state.epoch == 0) {
      log.open(path, std::ios::trunc);
      log << log_header(cfg) << '\n';
    } else {
      log.open(path, std::ios::app);
    }
    if (!log) throw std::runtime_error("cannot write " + path.string());
  }

  const std::size_t n = data.train.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::size_t batches = (n + bs - 1) / bs;
  if (cfg.max_batches > 0) batches = std::min(batches, static_cast<std::size_t>(cfg.max_batches));

  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = optim::learning_rate(epoch, cfg.lr, cfg.lr_halve_every);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) + 1);
    shuffle_rng.shuffle(order);

    const bool staged = cfg.dual_mode == DualMode::staged;
    const bool train_sino = !staged || epoch < cfg.sino_epochs;
    const bool train_image = !staged || epoch >= cfg.sino_epochs;
    double epoch_total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * bs, end = std::min(n, begin + bs);
      const Batch<float> batch =
          make_batch(data.train, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                                          order.begin() + static_cast<std::ptrdiff_t>(end)));
      const StepLosses l = cfg.dual_domain ? dual_step(state, batch, fbp, lr, train_sino, train_image, options.hooks)
                                           : image_step(state, batch, lr, options.hooks);
      epoch_total += l.l_total;
      if (log.is_open()) {
        log << epoch << ',' << state.iteration << ',' << format_double(l.l_art) << ',' << format_double(l.l_mask)
            << ',' << format_double(l.l_total) << ',' << format_double(lr);
        if (cfg.dual_domain) log << ',' << format_double(l.l_sino) << ',' << format_double(l.l_rc);
        log << '\n';
      }
      ++state.iteration;
    }
    state.epoch = epoch + 1;
    if (!options.output_dir.empty()) {
      log.flush();
      const Checkpoint ck = to_checkpoint(state, data.geometry);
      ck.save(options.output_dir / epoch_checkpoint_name(state.epoch));
      ck.save(options.output_dir / "checkpoint.fsck");
    }
    if (options.progress) {
      *options.progress << "epoch " << state.epoch << "/" << cfg.epochs << " lr " << lr << " mean l_total "
                        << epoch_total / static_cast<double>(batches) << std::endl;
    }
  }
}

TrainState<float> train_freeseed(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
  if (config.dual_domain) throw std::invalid_argument("train_freeseed: config requests dual-domain training");
  auto state = TrainState<float>::create(config);
  train(state, data, options);
  return state;
}

TrainState<float> train_dual_domain(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
  TrainConfig c = config;
  c.dual_domain = true;
  auto state = TrainState<float>::create(c);
  train(state, data, options);
  return state;
}

Checkpoint to_checkpoint(const TrainState<float>& state, const FanBeamGeometry& geometry) {
  Checkpoint ck;
  ck.meta = state.config.to_key_values();
  ck.meta.set("epoch", state.epoch);
  ck.meta.set("iteration", static_cast<long long>(state.iteration));
  const KeyValues g = geometry.to_key_values();
  for (const auto& k : g.keys()) ck.meta.set("geometry." + k, g.get_string(k));
  auto add_set = [&](const optim::Adam<float>* opt, const char* key) {
    if (!opt) return;
    ck.meta.set(std::string(key) + "_steps", static_cast<long long>(opt->steps()));
    for (const auto& p : opt->parameters()) ck.add(p.name, p.var.value());
    for (const auto& p : opt->parameters()) ck.add("adam.m." + p.name, opt->first_moments().at(p.name));
    for (const auto& p : opt->parameters()) ck.add("adam.v." + p.name, opt->second_moments().at(p.name));
  };
  add_set(state.theta_optimizer.get(), "theta");
  add_set(state.phi_optimizer.get(), "phi");
  add_set(state.sino_optimizer.get(), "sino");
  return ck;
}

void load_parameters(TrainState<float>& state, const Checkpoint& checkpoint) {
  auto load_set = [&](optim::Adam<float>* opt, const char* key) {
    if (!opt) return;
    for (auto p : opt->parameters()) {
      const Tensor<float>& v = checkpoint.get(p.name);
      require_same_shape(p.var.shape(), v.shape(), p.name.c_str());
      p.var.mutable_value() = v;
      if (checkpoint.has("adam.m." + p.name)) {
        opt->first_moments().at(p.name) = checkpoint.get("adam.m." + p.name);
        opt->second_moments().at(p.name) = checkpoint.get("adam.v." + p.name);
      }
    }
    opt->set_steps(checkpoint.meta.get_int(std::string(key) + "_steps", 0));
  };
  load_set(state.theta_optimizer.get(), "theta");
  load_set(state.phi_optimizer.get(), "phi");
  load_set(state.sino_optimizer.get(), "sino");
}

TrainState<float> state_from_checkpoint(const Checkpoint& checkpoint) {
  KeyValues config_kv;
  for (const auto& k : checkpoint.meta.keys()) {
    if (TrainConfig::config_keys().count(k)) config_kv.set(k, checkpoint.meta.get_string(k));
  }
  auto state = TrainState<float>::create(TrainConfig::from_key_values(config_kv));
  load_parameters(state, checkpoint);
  state.epoch = static_cast<int>(checkpoint.meta.get_int("epoch", 0));
  state.iteration = checkpoint.meta.get_int("iteration", 0);
  return state;
}

Tensor<float> predict(const TrainState<float>& state, const SampleTensors& sample, const FbpOperator* fbp) {
  ag::NoGradGuard no_grad;
  Tensor<float> input = sample.sparse;
  if (state.config.dual_domain) {
    if (!fbp) throw std::invalid_argument("predict: dual-domain model needs an FBP operator");
    Batch<float> b;
    b.sinogram = sample.sinogram;
    b.mask = sample.sinogram_mask;
    input = dual_domain_input(state, b, *fbp);
  }
  return state.freenet->forward(ops::constant(input)).restored.value();
}

#define FREESEED_INSTANTIATE_TRAIN(T)                                                                          \
  template struct TrainState<T>;                                                                               \
  template Batch<T> cast_batch<T>(const Batch<float>&);                                                        \
  template ThetaTerms<T> theta_terms(const TrainState<T>&, const Batch<T>&);                                   \
  template StepLosses image_step(TrainState<T>&, const Batch<T>&, double, const Hooks&);                       \
  template Tensor<T> dual_domain_input(const TrainState<T>&, const Batch<T>&, const FbpOperator&);             \
  template StepLosses dual_step(TrainState<T>&, const Batch<T>&, std::shared_ptr<const FbpOperator>, double, bool, \
                                bool, const Hooks&);

FREESEED_INSTANTIATE_TRAIN(float)
FREESEED_INSTANTIATE_TRAIN(double)

}  // namespace freeseed::train
