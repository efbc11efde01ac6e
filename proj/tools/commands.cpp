#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "freeseed/checkpoint.hpp"
#include "freeseed/container.hpp"
#include "freeseed/dataset.hpp"
#include "freeseed/image_io.hpp"
#include "freeseed/metrics.hpp"
#include "freeseed/spectral.hpp"
#include "freeseed/train.hpp"

namespace freeseed::cli {

namespace fs = std::filesystem;

namespace {

// Flag values override the --config file; every key must be known to the subcommand.
struct Resolved {
  KeyValues kv;

  Resolved(const std::string& config_path, const std::set<std::string>& allowed) {
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
      kv = KeyValues::load(config_path);
    }
    check(allowed);
  }

  void apply_sets(const std::vector<std::string>& sets, const std::set<std::string>& allowed) {
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
      kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    check(allowed);
  }

  void check(const std::set<std::string>& allowed) const {
    try {
      kv.require_known(allowed);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

template <typename V>
void set_if(KeyValues& kv, const CLI::Option* opt, const std::string& key, const V& value) {
  if (opt->count() > 0) kv.set(key, value);
}

fs::path require_path(const KeyValues& kv, const std::string& key) {
  if (!kv.has(key) || kv.get_string(key).empty()) throw UsageError("missing required setting '" + key + "'");
  return fs::absolute(kv.get_string(key)).lexically_normal();
}

std::vector<int> int_list(const KeyValues& kv, const std::string& key) {
  std::vector<int> out;
  for (long long v : kv.get_int_list(key)) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<std::string> string_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void echo_config(const fs::path& dir, KeyValues kv, const std::string& command) {
  fs::create_directories(dir);
  KeyValues echo;
  echo.set("command", command);
  for (const auto& k : kv.keys()) echo.set(k, kv.get_string(k));
  echo.save(dir / "config.txt");
}

Tensor<double> plane(const Tensor<float>& t) {
  // [1, 1, H, W] -> [H, W]
  return t.cast<double>().reshaped({t.dim(t.ndim() - 2), t.dim(t.ndim() - 1)});
}

// ---------------------------------------------------------------- simulate

const std::set<std::string>& simulate_keys() {
  static const std::set<std::string> keys = {"out",        "n_views",      "count",        "test_count",
                                             "seed",       "image_size",   "views_full",   "detectors",
                                             "fov_cm",     "ellipses_min", "ellipses_max", "window",
                                             "slices"};
  return keys;
}

SimulationConfig simulation_config(const KeyValues& kv) {
  SimulationConfig cfg;
  cfg.geometry = FanBeamGeometry::standard(static_cast<int>(kv.get_int("image_size", 128)),
                                           static_cast<int>(kv.get_int("views_full", 720)),
                                           static_cast<int>(kv.get_int("detectors", 336)), kv.get_double("fov_cm", 40.0));
  cfg.n_views = kv.has("n_views") ? int_list(kv, "n_views") : std::vector<int>{18, 36, 72, 144};
  const int count = static_cast<int>(kv.get_int("count", 250));
  const int test = static_cast<int>(kv.get_int("test_count", count / 5));
  if (count < 1 || test < 0 || test > count) throw UsageError("count must be >= 1 and test_count within [0, count]");
  cfg.train_count = count - test;
  cfg.test_count = test;
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  cfg.n_ellipses = {static_cast<int>(kv.get_int("ellipses_min", 4)), static_cast<int>(kv.get_int("ellipses_max", 10))};
  cfg.window = parse_ramp_window(kv.get_string("window", ramp_window_name(cfg.window)));
  if (kv.has("slices")) {
    for (const auto& s : string_list(kv.get_string("slices"))) cfg.slice_files.emplace_back(s);
  }
  cfg.validate();
  return cfg;
}

void cmd_simulate(const KeyValues& kv, std::ostream& out) {
  const fs::path root = require_path(kv, "out");
  const SimulationConfig cfg = simulation_config(kv);
  echo_config(root, kv, "simulate");
  write_dataset(root, cfg);
  out << "wrote " << cfg.train_count << " train + " << cfg.test_count << " test samples for n_views";
  for (int nv : cfg.n_views) out << ' ' << nv;
  out << " to " << root.string() << "\n";
}

// ---------------------------------------------------------------- train

std::set<std::string> train_keys() {
  std::set<std::string> keys = train::TrainConfig::config_keys();
  keys.insert({"data", "out", "resume"});
  return keys;
}

KeyValues config_part(const KeyValues& kv) {
  KeyValues out;
  for (const auto& k : kv.keys()) {
    if (train::TrainConfig::config_keys().count(k)) out.set(k, kv.get_string(k));
  }
  return out;
}

Dataset load_split(const fs::path& root, int n_views) {
  if (!fs::exists(root / "manifest.txt")) throw UsageError("dataset not found: " + (root / "manifest.txt").string());
  try {
    return load_dataset(root, n_views);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

void cmd_train(const KeyValues& kv, std::ostream& out) {
  const fs::path data_root = require_path(kv, "data");
  const fs::path out_dir = require_path(kv, "out");
  train::TrainConfig cfg;
  try {
    cfg = train::TrainConfig::from_key_values(config_part(kv));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::optional<Checkpoint> resume;
  if (kv.has("resume") && !kv.get_string("resume").empty()) {
    const fs::path ck = fs::absolute(kv.get_string("resume"));
    if (!fs::exists(ck)) throw UsageError("checkpoint not found: " + ck.string());
    resume = Checkpoint::load(ck);
  }
  Dataset data = load_split(data_root, cfg.n_views);
  echo_config(out_dir, kv, "train");

  train::TrainOptions options;
  options.output_dir = out_dir;
  options.progress = &out;
  train::TrainState<float> state;
  if (resume) {
    state = train::state_from_checkpoint(*resume);
    // Only the epoch budget may change across a resume.
    state.config.epochs = cfg.epochs;
    state.config.validate();
    out << "resuming at epoch " << state.epoch << " (lr " << optim::learning_rate(state.epoch, state.config.lr,
                                                                                   state.config.lr_halve_every)
        << ")\n";
  } else {
    state = train::TrainState<float>::create(cfg);
  }
  train::train(state, data, options);
}

// ---------------------------------------------------------------- eval

const std::set<std::string>& eval_keys() {
  static const std::set<std::string> keys = {"data",      "out",       "checkpoint", "labels", "identity",
                                             "n_views",   "png",       "png_count",  "windows"};
  return keys;
}

struct HuWindow {
  double low;
  double high;
};

std::vector<HuWindow> parse_windows(const std::string& text) {
  std::vector<HuWindow> out;
  for (const auto& item : string_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("window must be low:high, got '" + item + "'");
    HuWindow w{std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))};
    if (!(w.low < w.high)) throw UsageError("window low must be below high: '" + item + "'");
    out.push_back(w);
  }
  return out;
}

struct EvalJob {
  std::string method;
  int n_views;
  std::shared_ptr<train::TrainState<float>> state;  // null: the FBP input itself
  bool identity = false;
};

// Untrained FreeNet with a zeroed output projection: predicts no artifact, so I_hat = I_s.
std::shared_ptr<train::TrainState<float>> identity_state(int n_views) {
  train::TrainConfig cfg;
  cfg.variant = train::Variant::freenet;
  cfg.n_views = n_views;
  auto state = std::make_shared<train::TrainState<float>>(train::TrainState<float>::create(cfg));
  auto& tail = state->freenet->tail();
  tail.weight().mutable_value().fill(0.0f);
  if (tail.has_bias()) tail.bias().mutable_value().fill(0.0f);
  return state;
}

void cmd_eval(const KeyValues& kv, std::ostream& out) {
  const fs::path data_root = require_path(kv, "data");
  const fs::path out_dir = require_path(kv, "out");
  const auto checkpoints = string_list(kv.get_string("checkpoint", ""));
  const auto labels = string_list(kv.get_string("labels", ""));
  if (!labels.empty() && labels.size() != checkpoints.size()) throw UsageError("labels must match checkpoints one to one");
  const auto windows = parse_windows(kv.get_string("windows", "50:500"));
  const bool png = kv.get_bool("png", false);
  const int png_count = static_cast<int>(kv.get_int("png_count", 4));

  std::vector<EvalJob> jobs;
  std::set<int> views;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const fs::path ck = fs::absolute(checkpoints[i]);
    if (!fs::exists(ck)) throw UsageError("checkpoint not found: " + ck.string());
    auto state = std::make_shared<train::TrainState<float>>(train::state_from_checkpoint(Checkpoint::load(ck)));
    const std::string name = labels.empty() ? train::variant_name(state->config.variant) +
                                                  std::string(state->config.dual_domain ? "-dual" : "")
                                            : labels[i];
    views.insert(state->config.n_views);
    jobs.push_back({name, state->config.n_views, state});
  }
  if (kv.has("n_views")) {
    for (int nv : int_list(kv, "n_views")) views.insert(nv);
  }
  if (views.empty()) {
    if (!fs::exists(data_root / "manifest.txt")) throw UsageError("dataset not found: " + data_root.string());
    for (int nv : read_manifest(data_root).n_views) views.insert(nv);
  }
  const bool identity = kv.get_bool("identity", false);
  std::vector<EvalJob> fixed;
  for (int nv : views) fixed.push_back({"fbp", nv, nullptr, false});
  if (identity) {
    for (int nv : views) fixed.push_back({"identity", nv, identity_state(nv), true});
  }
  jobs.insert(jobs.begin(), fixed.begin(), fixed.end());

  echo_config(out_dir, kv, "eval");
  if (png) fs::create_directories(out_dir / "png");
  std::map<int, Dataset> splits;
  std::map<int, std::unique_ptr<FbpOperator>> operators;
  std::vector<metrics::MetricReport> reports;
  const HuCalibration calibration;
  for (const auto& job : jobs) {
    if (!splits.count(job.n_views)) splits.emplace(job.n_views, load_split(data_root, job.n_views));
    const Dataset& data = splits.at(job.n_views);
    if (data.test.empty()) throw UsageError("dataset has no test samples");
    const FbpOperator* fbp = nullptr;
    if (job.state && job.state->config.dual_domain) {
      auto& op = operators[job.n_views];
      if (!op) op = std::make_unique<FbpOperator>(data.geometry, data.geometry.angles, data.window);
      fbp = op.get();
    }
    metrics::MetricReport report;
    report.method = job.method;
    report.n_views = job.n_views;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      const SampleTensors& s = data.test[i];
      const Tensor<double> reference = plane(s.full);
      Tensor<double> output;
      if (job.state) {
        output = plane(train::predict(*job.state, s, fbp));
      } else {
        output = plane(s.sparse);
      }
      report.add(output, reference);
      if (png && static_cast<int>(i) < png_count) {
        for (const auto& w : windows) {
          auto win = [&](const Tensor<double>& im) { return hu_window(im, w.low, w.high, calibration); };
          char name[160];
          std::snprintf(name, sizeof name, "%s_nv%03d_%04zu_w%g_%g.png", job.method.c_str(), job.n_views, i, w.low,
                        w.high);
          image_io::write_gray_png(out_dir / "png" / name,
                                   image_io::hstack({win(plane(s.sparse)), win(output), win(reference)}));
        }
      }
    }
    out << job.method << " n_views=" << job.n_views << " psnr=" << report.mean_psnr() << " ssim=" << report.mean_ssim()
        << " rmse=" << report.mean_rmse() << "\n";
    reports.push_back(std::move(report));
  }

  std::ofstream csv(out_dir / "metrics.csv", std::ios::binary);
  csv << metrics::csv_header() << "\n";
  for (const auto& r : reports) r.write_csv_rows(csv);
  const std::string table = metrics::format_table(reports);
  std::ofstream(out_dir / "table.txt", std::ios::binary) << table;
  out << table;
}

// ---------------------------------------------------------------- spectrum

const std::set<std::string>& spectrum_keys() {
  static const std::set<std::string> keys = {"data", "out", "n_views", "split", "max_samples", "threshold", "checkpoint"};
  return keys;
}

// Mean (d0, w) over every band-pass unit of a checkpointed FreeNet.
std::optional<metrics::BandFit> learned_band(const Checkpoint& ck) {
  double d0 = 0.0, w = 0.0;
  std::size_t n = 0, m = 0;
  for (const auto& [name, array] : ck.arrays) {
    if (name.rfind("freenet.", 0) != 0) continue;
    auto ends_with = [&](const std::string& suffix) {
      return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".d0")) {
      for (float v : array.data()) d0 += v, ++n;
    } else if (ends_with(".w")) {
      for (float v : array.data()) w += v, ++m;
    }
  }
  if (n == 0 || m == 0) return std::nullopt;
  return metrics::BandFit{d0 / static_cast<double>(n), w / static_cast<double>(m), 0.0};
}

void cmd_spectrum(const KeyValues& kv, std::ostream& out) {
  const fs::path data_root = require_path(kv, "data");
  const fs::path out_dir = require_path(kv, "out");
  if (!fs::exists(data_root / "manifest.txt")) throw UsageError("dataset not found: " + data_root.string());
  std::vector<int> views = kv.has("n_views") ? int_list(kv, "n_views") : read_manifest(data_root).n_views;
  std::sort(views.begin(), views.end());
  const std::string split = kv.get_string("split", "test");
  if (split != "train" && split != "test") throw UsageError("split must be train or test");
  const int max_samples = static_cast<int>(kv.get_int("max_samples", 0));
  const double threshold = kv.get_double("threshold", 0.75);
  std::optional<metrics::BandFit> learned;
  if (kv.has("checkpoint") && !kv.get_string("checkpoint").empty()) {
    const fs::path ck = fs::absolute(kv.get_string("checkpoint"));
    if (!fs::exists(ck)) throw UsageError("checkpoint not found: " + ck.string());
    learned = learned_band(Checkpoint::load(ck));
    if (!learned) throw UsageError("checkpoint holds no band-pass parameters");
  }

  echo_config(out_dir, kv, "spectrum");
  std::ofstream csv(out_dir / "centroid.csv", std::ios::binary);
  csv << "n_views,centroid,fit_d0,fit_w" << (learned ? ",learned_d0,learned_w" : "") << "\n";
  for (int nv : views) {
    const Dataset data = load_split(data_root, nv);
    const auto& samples = split == "test" ? data.test : data.train;
    const std::size_t n = max_samples > 0 ? std::min<std::size_t>(samples.size(), static_cast<std::size_t>(max_samples))
                                          : samples.size();
    if (n == 0) throw UsageError("no samples in the " + split + " split");
    Tensor<double> mean;
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor<double> amp = metrics::artifact_amplitude(plane(samples[i].artifact));
      if (mean.empty()) mean = Tensor<double>(amp.shape());
      mean += amp;
    }
    mean *= 1.0 / static_cast<double>(n);
    const double centroid = metrics::radial_band_centroid(mean);
    const metrics::BandFit fit = metrics::fit_band_pass(mean);
    const Tensor<double> display = metrics::log_normalize(mean);
    const Tensor<double> d = distance_map(mean.dim(0), mean.dim(1));

    const std::string stem = view_dir_name(nv);
    container::save(out_dir / (stem + "_spectrum.fsct"), mean.cast<float>());
    image_io::write_gray_png(out_dir / (stem + "_spectrum.png"), display);
    Tensor<double> band(d.shape());
    for (std::size_t i = 0; i < d.size(); ++i) band[i] = band_pass_value(fit.d0, fit.w, d[i]);
    image_io::write_rgb_png(out_dir / (stem + "_fitted_band.png"), image_io::contour_overlay(display, band, threshold),
                            d.dim(0), d.dim(1));
    char row[160];
    std::snprintf(row, sizeof row, "%d,%.8f,%.4f,%.6f", nv, centroid, fit.d0, fit.w);
    csv << row;
    if (learned) {
      for (std::size_t i = 0; i < d.size(); ++i) band[i] = band_pass_value(learned->d0, learned->w, d[i]);
      image_io::write_rgb_png(out_dir / (stem + "_learned_band.png"),
                              image_io::contour_overlay(display, band, threshold), d.dim(0), d.dim(1));
      std::snprintf(row, sizeof row, ",%.6f,%.6f", learned->d0, learned->w);
      csv << row;
    }
    csv << "\n";
    out << "n_views=" << nv << " centroid=" << centroid << " band d0=" << fit.d0 << " w=" << fit.w << "\n";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse-view CT artifact removal toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string s_out, s_views, s_window, s_slices;
  long long s_count = 0, s_test = 0, s_seed = 0, s_size = 0, s_full = 0, s_dets = 0;
  auto* sim = app.add_subcommand("simulate", "Simulate paired sparse/full-view reconstructions");
  sim->add_option("--config", config_path, "key=value config file");
  auto* o_s_out = sim->add_option("--out", s_out, "Dataset directory");
  auto* o_s_views = sim->add_option("--n-views", s_views, "Comma-separated sparse view counts (default 18,36,72,144)");
  auto* o_s_count = sim->add_option("--count", s_count, "Samples per N_v (train + test)");
  auto* o_s_test = sim->add_option("--test-count", s_test, "Held-out samples (default count/5)");
  auto* o_s_seed = sim->add_option("--seed", s_seed, "Base phantom seed");
  auto* o_s_size = sim->add_option("--image-size", s_size, "Image side in pixels");
  auto* o_s_full = sim->add_option("--views-full", s_full, "Views of the full scan");
  auto* o_s_dets = sim->add_option("--detectors", s_dets, "Detector count");
  auto* o_s_window = sim->add_option("--window", s_window, "Ramp window: ram-lak, shepp-logan, cosine, hann");
  auto* o_s_slices = sim->add_option("--slices", s_slices, "Comma-separated container files replacing phantoms");
  sim->add_option("--set", sets, "Extra key=value settings");

  std::string t_data, t_out, t_variant, t_resume;
  long long t_views = 0, t_epochs = 0, t_batch = 0, t_seed = 0, t_maxb = 0;
  double t_alpha = 1.0;
  bool t_dual = false;
  auto* trn = app.add_subcommand("train", "Train an artifact-removal model");
  trn->add_option("--config", config_path, "key=value config file");
  auto* o_t_data = trn->add_option("--data", t_data, "Dataset directory");
  auto* o_t_out = trn->add_option("--out", t_out, "Run directory");
  auto* o_t_variant = trn->add_option("--variant", t_variant, "Ablation variant name");
  auto* o_t_views = trn->add_option("--n-views", t_views, "Sparse view count");
  auto* o_t_epochs = trn->add_option("--epochs", t_epochs, "Total epochs");
  auto* o_t_batch = trn->add_option("--batch-size", t_batch, "Batch size");
  auto* o_t_alpha = trn->add_option("--alpha", t_alpha, "Mask-loss weight (default 1.0)");
  auto* o_t_seed = trn->add_option("--seed", t_seed, "Initialisation and shuffle seed");
  auto* o_t_maxb = trn->add_option("--max-batches", t_maxb, "Batches per epoch cap (0 = all)");
  auto* o_t_dual = trn->add_flag("--dual-domain", t_dual, "Add the sinogram restoration branch");
  auto* o_t_resume = trn->add_option("--resume", t_resume, "Checkpoint to continue from");
  trn->add_option("--set", sets, "Extra key=value settings");

  std::string e_data, e_out, e_ck, e_labels, e_views, e_windows;
  bool e_identity = false, e_png = false;
  long long e_png_count = 0;
  auto* evl = app.add_subcommand("eval", "Evaluate checkpoints on the held-out split");
  evl->add_option("--config", config_path, "key=value config file");
  auto* o_e_data = evl->add_option("--data", e_data, "Dataset directory");
  auto* o_e_out = evl->add_option("--out", e_out, "Report directory");
  auto* o_e_ck = evl->add_option("--checkpoint", e_ck, "Comma-separated checkpoints");
  auto* o_e_labels = evl->add_option("--labels", e_labels, "Comma-separated method labels");
  auto* o_e_views = evl->add_option("--n-views", e_views, "Extra N_v values for the FBP rows");
  auto* o_e_identity = evl->add_flag("--identity", e_identity, "Also score the identity model");
  auto* o_e_png = evl->add_flag("--png", e_png, "Write HU-windowed comparison images");
  auto* o_e_png_count = evl->add_option("--png-count", e_png_count, "Samples exported per method");
  auto* o_e_windows = evl->add_option("--windows", e_windows, "HU windows low:high, comma-separated");
  evl->add_option("--set", sets, "Extra key=value settings");

  std::string p_data, p_out, p_views, p_split, p_ck;
  long long p_max = 0;
  double p_threshold = 0.75;
  auto* spc = app.add_subcommand("spectrum", "Artifact spectra, band-pass overlays and band centroids");
  spc->add_option("--config", config_path, "key=value config file");
  auto* o_p_data = spc->add_option("--data", p_data, "Dataset directory");
  auto* o_p_out = spc->add_option("--out", p_out, "Output directory");
  auto* o_p_views = spc->add_option("--n-views", p_views, "Comma-separated N_v values (default: all in dataset)");
  auto* o_p_split = spc->add_option("--split", p_split, "train or test");
  auto* o_p_max = spc->add_option("--max-samples", p_max, "Samples averaged per N_v (0 = all)");
  auto* o_p_threshold = spc->add_option("--threshold", p_threshold, "Overlay contour level (default 0.75)");
  auto* o_p_ck = spc->add_option("--checkpoint", p_ck, "Checkpoint with learned band-pass parameters");
  spc->add_option("--set", sets, "Extra key=value settings");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream help;
    const int code = app.exit(e, help, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      Resolved r(config_path, simulate_keys());
      set_if(r.kv, o_s_out, "out", s_out);
      set_if(r.kv, o_s_views, "n_views", s_views);
      set_if(r.kv, o_s_count, "count", s_count);
      set_if(r.kv, o_s_test, "test_count", s_test);
      set_if(r.kv, o_s_seed, "seed", s_seed);
      set_if(r.kv, o_s_size, "image_size", s_size);
      set_if(r.kv, o_s_full, "views_full", s_full);
      set_if(r.kv, o_s_dets, "detectors", s_dets);
      set_if(r.kv, o_s_window, "window", s_window);
      set_if(r.kv, o_s_slices, "slices", s_slices);
      r.apply_sets(sets, simulate_keys());
      cmd_simulate(r.kv, out);
    } else if (trn->parsed()) {
      const auto keys = train_keys();
      Resolved r(config_path, keys);
      set_if(r.kv, o_t_data, "data", t_data);
      set_if(r.kv, o_t_out, "out", t_out);
      set_if(r.kv, o_t_variant, "variant", t_variant);
      set_if(r.kv, o_t_views, "n_views", t_views);
      set_if(r.kv, o_t_epochs, "epochs", t_epochs);
      set_if(r.kv, o_t_batch, "batch_size", t_batch);
      set_if(r.kv, o_t_alpha, "alpha", t_alpha);
      set_if(r.kv, o_t_seed, "seed", t_seed);
      set_if(r.kv, o_t_maxb, "max_batches", t_maxb);
      set_if(r.kv, o_t_dual, "dual_domain", t_dual);
      set_if(r.kv, o_t_resume, "resume", t_resume);
      r.apply_sets(sets, keys);
      cmd_train(r.kv, out);
    } else if (evl->parsed()) {
      Resolved r(config_path, eval_keys());
      set_if(r.kv, o_e_data, "data", e_data);
      set_if(r.kv, o_e_out, "out", e_out);
      set_if(r.kv, o_e_ck, "checkpoint", e_ck);
      set_if(r.kv, o_e_labels, "labels", e_labels);
      set_if(r.kv, o_e_views, "n_views", e_views);
      set_if(r.kv, o_e_identity, "identity", e_identity);
      set_if(r.kv, o_e_png, "png", e_png);
      set_if(r.kv, o_e_png_count, "png_count", e_png_count);
      set_if(r.kv, o_e_windows, "windows", e_windows);
      r.apply_sets(sets, eval_keys());
      cmd_eval(r.kv, out);
    } else if (spc->parsed()) {
      Resolved r(config_path, spectrum_keys());
      set_if(r.kv, o_p_data, "data", p_data);
      set_if(r.kv, o_p_out, "out", p_out);
      set_if(r.kv, o_p_views, "n_views", p_views);
      set_if(r.kv, o_p_split, "split", p_split);
      set_if(r.kv, o_p_max, "max_samples", p_max);
      set_if(r.kv, o_p_threshold, "threshold", p_threshold);
      set_if(r.kv, o_p_ck, "checkpoint", p_ck);
      r.apply_sets(sets, spectrum_keys());
      cmd_spectrum(r.kv, out);
    }
  } catch (const train::NumericalFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    // Invalid settings, missing inputs and unreadable files are all input errors.
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace freeseed::cli
