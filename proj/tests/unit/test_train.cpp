#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "freeseed/train.hpp"
#include "test_util.hpp"

using namespace freeseed;
using namespace freeseed::train;

namespace {

// 32x32 phantoms, 36 full views, 6 measured.
const Dataset& tiny_dataset() {
  static const Dataset data = [] {
    Dataset d;
    d.geometry = FanBeamGeometry::standard(32, 36, 48);
    d.n_views = 6;
    for (int i = 0; i < 6; ++i) {
      const ImagePair p = make_pair(generate_phantom(100 + i, 32), d.geometry, 6);
      (i < 4 ? d.train : d.test).push_back(to_sample_tensors(p));
    }
    return d;
  }();
  return data;
}

TrainConfig tiny_config(Variant v = Variant::freeseed) {
  TrainConfig c;
  c.variant = v;
  c.n_views = 6;
  c.epochs = 1;
  c.freenet_width = 4;
  c.freenet_stages = 2;
  c.seednet_width = 4;
  c.seednet_blocks = 2;
  c.sinonet_width = 4;
  c.sinonet_stages = 2;
  return c;
}

template <typename T>
std::map<std::string, Tensor<T>> snapshot(const ag::ParameterList<T>& params) {
  std::map<std::string, Tensor<T>> out;
  for (const auto& p : params) out[p.name] = p.var.value();
  return out;
}

template <typename T>
bool same(const std::map<std::string, Tensor<T>>& a, const ag::ParameterList<T>& params) {
  for (const auto& p : params) {
    if (!(a.at(p.name) == p.var.value())) return false;
  }
  return true;
}

template <typename T>
std::vector<Tensor<T>> grads(const ag::ParameterList<T>& params) {
  std::vector<Tensor<T>> out;
  for (const auto& p : params) out.push_back(p.var.has_grad() ? p.var.grad() : Tensor<T>(p.var.shape()));
  return out;
}

}  // namespace

TEST(Schedule, HalvesEveryTenEpochs) {
  EXPECT_DOUBLE_EQ(optim::learning_rate(0), 1e-4);
  EXPECT_DOUBLE_EQ(optim::learning_rate(9), 1e-4);
  EXPECT_DOUBLE_EQ(optim::learning_rate(10), 5e-5);
  EXPECT_DOUBLE_EQ(optim::learning_rate(25), 2.5e-5);
  const optim::AdamOptions opts;
  EXPECT_EQ(opts.beta1, 0.5);
  EXPECT_EQ(opts.beta2, 0.999);
}

TEST(Adam, ClampsSkipsAndRejectsDuplicates) {
  ag::Var<double> a(Tensor<double>({2}, 0.5), true), b(Tensor<double>({1}, 1.0), true);
  ag::ParameterList<double> params = {{"a", a, true, 0.0, 1.0}, {"b", b, false, 0.0, 0.0}};
  optim::Adam<double> adam(params);
  a.mutable_grad()[0] = -1.0;  // pushes a[0] upward
  a.mutable_grad()[1] = 1.0;
  adam.step(10.0);
  EXPECT_EQ(a.value()[0], 1.0);
  EXPECT_EQ(a.value()[1], 0.0);
  EXPECT_EQ(b.value()[0], 1.0);  // no gradient, untouched
  EXPECT_EQ(adam.steps(), 1);
  ag::ParameterList<double> dup = {{"x", a, false, 0.0, 0.0}, {"x", b, false, 0.0, 0.0}};
  EXPECT_THROW(optim::Adam<double>{dup}, std::invalid_argument);
}

TEST(Variants, NamesRoundTrip) {
  const std::vector<std::string> names = {"baseline", "baseline+fourier", "baseline+seednet", "freenet",
                                          "freenet-1+mask", "freeseed-l1", "freeseed"};
  ASSERT_EQ(all_variants().size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(variant_name(all_variants()[i]), names[i]);
    EXPECT_EQ(parse_variant(names[i]), all_variants()[i]);
  }
  EXPECT_THROW(parse_variant("freeseed2"), std::invalid_argument);
  EXPECT_FALSE(variant_spec(Variant::freenet).seednet);
  EXPECT_TRUE(variant_spec(Variant::freeseed).band_pass);
  EXPECT_EQ(variant_spec(Variant::baseline).block, models::StageBlock::conv);
  EXPECT_EQ(variant_spec(Variant::freeseed_l1).norm, losses::Norm::l1);
}

TEST(Config, StrictAndValidated) {
  TrainConfig c = tiny_config();
  const TrainConfig back = TrainConfig::from_key_values(c.to_key_values());
  EXPECT_EQ(back.to_key_values().to_string(), c.to_key_values().to_string());
  EXPECT_EQ(TrainConfig{}.alpha, 1.0);
  auto kv = c.to_key_values();
  kv.set("typo_key", 1);
  EXPECT_THROW(TrainConfig::from_key_values(kv), std::invalid_argument);
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(TrainState<float>::create(c), std::invalid_argument);
}

TEST(State, ParameterSetsAreDisjoint) {
  auto c = tiny_config();
  c.dual_domain = true;
  const auto s = TrainState<float>::create(c);
  std::set<std::string> names;
  std::set<const void*> nodes;
  for (const auto& params : {s.theta(), s.phi(), s.sino()}) {
    EXPECT_FALSE(params.empty());
    for (const auto& p : params) {
      EXPECT_TRUE(names.insert(p.name).second) << p.name;
      EXPECT_TRUE(nodes.insert(p.var.node().get()).second) << p.name;
    }
  }
  const auto plain = TrainState<float>::create(tiny_config(Variant::freenet));
  EXPECT_EQ(plain.seednet, nullptr);
  EXPECT_TRUE(plain.phi().empty());
}

TEST(ImageStep, PhiUpdatePrecedesThetaAndEachIsIsolated) {
  auto state = TrainState<float>::create(tiny_config());
  std::vector<TrainEvent> events;
  std::map<std::string, Tensor<float>> frozen;
  int violations = 0;
  Hooks hooks;
  hooks.on_event = [&](TrainEvent e, int, std::int64_t) {
    events.push_back(e);
    if (e == TrainEvent::phi_step_begin) frozen = snapshot(state.theta());
    if (e == TrainEvent::phi_step_end && !same(frozen, state.theta())) ++violations;
    if (e == TrainEvent::theta_step_begin) frozen = snapshot(state.phi());
    if (e == TrainEvent::theta_step_end && !same(frozen, state.phi())) ++violations;
  };
  const auto& data = tiny_dataset();
  for (int b = 0; b < 5; ++b) {
    const auto before_theta = snapshot(state.theta());
    const auto before_phi = snapshot(state.phi());
    image_step(state, make_batch(data.train, {static_cast<std::size_t>(b % 4)}), 1e-3, hooks);
    EXPECT_FALSE(same(before_theta, state.theta()));
    EXPECT_FALSE(same(before_phi, state.phi()));
  }
  EXPECT_EQ(violations, 0);
  ASSERT_EQ(events.size(), 20u);
  for (int b = 0; b < 5; ++b) {
    EXPECT_EQ(events[4 * b + 0], TrainEvent::phi_step_begin);
    EXPECT_EQ(events[4 * b + 1], TrainEvent::phi_step_end);
    EXPECT_EQ(events[4 * b + 2], TrainEvent::theta_step_begin);
    EXPECT_EQ(events[4 * b + 3], TrainEvent::theta_step_end);
  }
}

TEST(ImageStep, ThetaGradientIsLinearInAlpha) {
  auto state = TrainState<double>::create(tiny_config());
  const auto batch = cast_batch<double>(make_batch(tiny_dataset().train, {0, 1}));
  auto theta = state.theta();
  auto phi = state.phi();

  auto gradient_of = [&](auto pick) {
    ag::zero_grads(theta);
    ag::zero_grads(phi);
    const auto terms = theta_terms(state, batch);
    ag::backward(pick(terms));
    return grads(theta);
  };
  const auto g_art = gradient_of([](const auto& t) { return t.l_art; });
  const auto g_mask = gradient_of([](const auto& t) { return t.l_mask; });
  const double alpha = 0.7;
  const auto g_total = gradient_of([&](const auto& t) { return losses::loss_total(t.l_art, t.l_mask, alpha); });
  double residual = 0.0, scale = 0.0, mask_norm = 0.0;
  for (std::size_t i = 0; i < g_total.size(); ++i) {
    for (std::size_t j = 0; j < g_total[i].size(); ++j) {
      const double r = g_total[i][j] - g_art[i][j] - alpha * g_mask[i][j];
      residual += r * r;
      scale += g_total[i][j] * g_total[i][j];
      mask_norm += g_mask[i][j] * g_mask[i][j];
    }
  }
  EXPECT_GT(mask_norm, 0.0);  // the SeedNet path does reach Theta
  EXPECT_LE(std::sqrt(residual), 1e-12 * std::sqrt(scale));
}

TEST(ImageStep, ThetaGradientMatchesFiniteDifference) {
  auto state = TrainState<double>::create(tiny_config());
  const auto batch = cast_batch<double>(make_batch(tiny_dataset().train, {2}));
  auto theta = state.theta();
  auto objective = [&] {
    const auto t = theta_terms(state, batch);
    return losses::loss_total(t.l_art.value()[0], t.l_mask.value()[0], 1.0);
  };
  ag::zero_grads(theta);
  const auto terms = theta_terms(state, batch);
  ag::backward(losses::loss_total(terms.l_art, terms.l_mask, 1.0));
  int checked = 0;
  for (auto& p : theta) {
    if (p.name != "freenet.head.weight" && p.name != "freenet.tail.weight") continue;
    auto& v = p.var.mutable_value();
    const double analytic = p.var.grad()[0];
    const double saved = v[0];
    v[0] = saved + 1e-6;
    const double up = objective();
    v[0] = saved - 1e-6;
    const double down = objective();
    v[0] = saved;
    EXPECT_LT(testutil::relative_error(analytic, (up - down) / 2e-6), 1e-3) << p.name;
    ++checked;
  }
  EXPECT_EQ(checked, 2);
}

TEST(ImageStep, SingleBatchOverfits) {
  auto c = tiny_config();
  c.freenet_width = 8;
  auto state = TrainState<float>::create(c);
  const auto batch = make_batch(tiny_dataset().train, {0, 1});
  const double first = image_step(state, batch, 1e-3).l_total;
  double last = first;
  for (int i = 1; i < 200; ++i) last = image_step(state, batch, 1e-3).l_total;
  EXPECT_LT(last, 0.1 * first);
}

TEST(ImageStep, WithoutSeedNetReducesToArtifactLoss) {
  auto c = tiny_config(Variant::freenet);
  auto a = TrainState<float>::create(c);
  auto b = TrainState<float>::create(c);
  const auto batch = make_batch(tiny_dataset().train, {1, 3});
  const auto l = image_step(a, batch, 1e-3);
  EXPECT_EQ(l.l_mask, 0.0);
  EXPECT_EQ(l.l_total, l.l_art);

  auto theta = b.theta();
  ag::zero_grads(theta);
  const auto out = b.freenet->forward(ag::Var<float>(batch.sparse));
  ag::backward(losses::loss_art(out.artifact, batch.artifact));
  b.theta_optimizer->step(1e-3);
  for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_EQ(a.theta()[i].var.value(), theta[i].var.value());
}

TEST(Training, NonFiniteLossAborts) {
  Dataset bad = tiny_dataset();
  bad.train[0].artifact[5] = std::numeric_limits<float>::quiet_NaN();
  auto c = tiny_config();
  c.batch_size = 4;
  auto state = TrainState<float>::create(c);
  EXPECT_THROW(train::train(state, bad), NumericalFailure);
}

TEST(Training, DeterministicLogsAndResumeContinuesSchedule) {
  testutil::TempDir dir("train");
  auto c = tiny_config();
  c.epochs = 3;
  c.lr_halve_every = 2;
  c.batch_size = 2;
  train_freeseed(tiny_dataset(), c, {dir / "a"});
  train_freeseed(tiny_dataset(), c, {dir / "b"});
  const auto log_a = testutil::read_bytes(dir / "a" / "train_log.csv");
  EXPECT_EQ(log_a, testutil::read_bytes(dir / "b" / "train_log.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "checkpoint_epoch_003.fsck"));

  // Stop after two epochs, then resume from the checkpoint for the third.
  auto first = c;
  first.epochs = 2;
  train_freeseed(tiny_dataset(), first, {dir / "c"});
  auto resumed = state_from_checkpoint(Checkpoint::load(dir / "c" / "checkpoint.fsck"));
  EXPECT_EQ(resumed.epoch, 2);
  resumed.config.epochs = 3;
  train::train(resumed, tiny_dataset(), {dir / "c"});
  EXPECT_EQ(testutil::read_bytes(dir / "c" / "train_log.csv"), log_a);
  EXPECT_NE(log_a.find(",5e-05"), std::string::npos);
}

TEST(Training, CheckpointRoundTripPreservesPredictions) {
  auto c = tiny_config();
  c.dual_domain = true;
  auto state = TrainState<float>::create(c);
  const auto& data = tiny_dataset();
  auto fbp = std::make_shared<FbpOperator>(data.geometry, data.geometry.angles);
  dual_step(state, make_batch(data.train, {0, 1}), fbp, 1e-3, true, true);
  const Checkpoint ck = to_checkpoint(state, data.geometry);
  std::set<std::string> prefixes;
  for (const auto& [name, array] : ck.arrays) prefixes.insert(name.substr(0, name.find('.')));
  EXPECT_TRUE(prefixes.count("freenet") && prefixes.count("seednet") && prefixes.count("sinonet"));
  EXPECT_EQ(ck.meta.get_int("epoch"), 0);
  EXPECT_EQ(ck.meta.get_double("alpha"), 1.0);
  EXPECT_EQ(ck.meta.get_int("n_views"), 6);
  EXPECT_EQ(ck.meta.get_int("seednet_blocks"), 2);

  testutil::TempDir dir("ckpt");
  ck.save(dir / "c.fsck");
  const auto back = state_from_checkpoint(Checkpoint::load(dir / "c.fsck"));
  EXPECT_EQ(predict(back, data.test[0], fbp.get()), predict(state, data.test[0], fbp.get()));
}

TEST(DualDomain, PassThroughEqualsImageOnlyOnInterpolatedInput) {
  auto c = tiny_config();
  c.dual_domain = true;
  c.sino_passthrough = true;
  auto dual = TrainState<float>::create(c);
  auto plain = TrainState<float>::create(tiny_config());
  const auto& data = tiny_dataset();
  auto fbp = std::make_shared<FbpOperator>(data.geometry, data.geometry.angles);
  const auto batch = make_batch(data.train, {0, 2});

  Batch<float> interpolated = batch;
  interpolated.sparse = dual_domain_input(dual, batch, *fbp);
  interpolated.artifact = interpolated.sparse - batch.full;
  for (std::size_t n = 0; n < 2; ++n) {
    Sinogram s = Sinogram::dense(Tensor<double>({36, 48}), data.geometry.angles);
    for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = batch.sinogram[n * s.data.size() + i];
    const Image ref = fbp->apply(s.data);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(ref[i] - interpolated.sparse[n * ref.size() + i]));
    }
    EXPECT_LT(worst, 1e-5);
  }

  const auto l_dual = dual_step(dual, batch, fbp, 1e-3, true, true);
  const auto l_plain = image_step(plain, interpolated, 1e-3);
  EXPECT_EQ(l_dual.l_total, l_plain.l_total);
  for (std::size_t i = 0; i < plain.theta().size(); ++i) {
    EXPECT_EQ(dual.theta()[i].var.value(), plain.theta()[i].var.value());
  }
  EXPECT_TRUE(dual.sino().empty());
}

TEST(DualDomain, StagedModeTrainsSinogramFirst) {
  auto c = tiny_config();
  c.dual_domain = true;
  c.dual_mode = DualMode::staged;
  c.sino_epochs = 1;
  c.epochs = 2;
  c.max_batches = 1;
  auto state = TrainState<float>::create(c);
  std::vector<std::pair<int, TrainEvent>> events;
  TrainOptions opts;
  opts.hooks.on_event = [&](TrainEvent e, int epoch, std::int64_t) { events.emplace_back(epoch, e); };
  train::train(state, tiny_dataset(), opts);
  for (const auto& [epoch, e] : events) {
    const bool sino = e == TrainEvent::sino_step_begin || e == TrainEvent::sino_step_end;
    EXPECT_EQ(sino, epoch == 0) << event_name(e) << " at epoch " << epoch;
  }
  EXPECT_FALSE(events.empty());
}
