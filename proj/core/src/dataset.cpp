#include "freeseed/dataset.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

#include "freeseed/container.hpp"

namespace freeseed {

namespace {

std::string sample_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.fsct", index);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

Tensor<float> as_nchw(const Tensor<double>& a) { return a.cast<float>().reshaped({1, 1, a.dim(0), a.dim(1)}); }

Image load_slice(const std::filesystem::path& path, int image_size) {
  const Tensor<float> t = container::load(path);
  if (t.ndim() != 2 || t.dim(0) != image_size || t.dim(1) != image_size) {
    throw std::invalid_argument("slice " + path.string() + " must be " + std::to_string(image_size) + "x" +
                                std::to_string(image_size) + ", got " + shape_string(t.shape()));
  }
  return t.cast<double>();
}

}  // namespace

void SimulationConfig::validate() const {
  geometry.validate();
  if (n_views.empty()) throw std::invalid_argument("at least one n_views value is required");
  for (int nv : n_views) {
    if (nv < 2 || geometry.n_views_full % nv != 0) {
      throw std::invalid_argument("n_views=" + std::to_string(nv) + " must be a divisor of the " +
                                  std::to_string(geometry.n_views_full) + " full views (and >= 2)");
    }
  }
  if (train_count < 0 || test_count < 0 || train_count + test_count < 1) {
    throw std::invalid_argument("sample counts must be non-negative with at least one sample");
  }
  if (slice_files.empty() && static_cast<std::uint64_t>(train_count) > kTestSeedOffset) {
    throw std::invalid_argument("train_count must not exceed " + std::to_string(kTestSeedOffset));
  }
  if (!slice_files.empty() && slice_files.size() != static_cast<std::size_t>(train_count + test_count)) {
    throw std::invalid_argument("slice list must hold exactly train_count + test_count files");
  }
  if (n_ellipses.first < 1 || n_ellipses.second < n_ellipses.first) {
    throw std::invalid_argument("ellipse range must satisfy 1 <= min <= max");
  }
}

std::uint64_t phantom_seed(std::uint64_t base, bool test, int index) {
  return base + (test ? kTestSeedOffset : 0) + static_cast<std::uint64_t>(index);
}

std::string view_dir_name(int n_views) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "nv%03d", n_views);
  return buf;
}

void write_dataset(const std::filesystem::path& root, const SimulationConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(root);

  KeyValues manifest;
  manifest.set("format", "freeseed-dataset");
  manifest.set("version", 1);
  manifest.set("seed", static_cast<long long>(config.seed));
  manifest.set("train_count", config.train_count);
  manifest.set("test_count", config.test_count);
  manifest.set("n_views", join_ints(config.n_views));
  manifest.set("ellipses_min", config.n_ellipses.first);
  manifest.set("ellipses_max", config.n_ellipses.second);
  manifest.set("window", ramp_window_name(config.window));
  manifest.set("source", config.slice_files.empty() ? "phantom" : "slices");
  manifest.save(root / "manifest.txt");
  config.geometry.save(root / "geometry.txt");

  for (int nv : config.n_views) fs::create_directories(root / view_dir_name(nv) / "samples");

  const int total = config.train_count + config.test_count;
  for (int index = 0; index < total; ++index) {
    const bool test = index >= config.train_count;
    const int local = test ? index - config.train_count : index;
    const Image phantom =
        config.slice_files.empty()
            ? generate_phantom(phantom_seed(config.seed, test, local), config.geometry.image_size, config.n_ellipses)
            : load_slice(config.slice_files[static_cast<std::size_t>(index)], config.geometry.image_size);
    const FullScan scan = scan_full(phantom, config.geometry, config.window);
    for (int nv : config.n_views) {
      const ImagePair pair = make_pair(scan, config.geometry, nv, config.window);
      const std::vector<const Tensor<double>*> records = {
          &pair.full, &pair.sparse, &pair.artifact, &pair.sparse_sinogram.data, &pair.sparse_sinogram.mask,
          &pair.full_sinogram.data};
      container::save_all(root / view_dir_name(nv) / "samples" / sample_name(index), records);
    }
  }
}

SampleTensors to_sample_tensors(const ImagePair& pair) {
  return {as_nchw(pair.full),
          as_nchw(pair.sparse),
          as_nchw(pair.artifact),
          as_nchw(pair.sparse_sinogram.data),
          as_nchw(pair.sparse_sinogram.mask),
          as_nchw(pair.full_sinogram.data)};
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.txt";
  if (!std::filesystem::exists(path)) throw std::runtime_error("no dataset manifest at " + path.string());
  DatasetManifest m;
  m.values = KeyValues::load(path);
  if (m.values.get_string("format") != "freeseed-dataset") throw std::runtime_error("not a freeseed dataset: " + root.string());
  for (long long v : m.values.get_int_list("n_views")) m.n_views.push_back(static_cast<int>(v));
  m.train_count = static_cast<int>(m.values.get_int("train_count"));
  m.test_count = static_cast<int>(m.values.get_int("test_count"));
  return m;
}

Dataset load_dataset(const std::filesystem::path& root, int n_views) {
  const DatasetManifest m = read_manifest(root);
  Dataset ds;
  ds.geometry = FanBeamGeometry::load(root / "geometry.txt");
  ds.window = parse_ramp_window(m.values.get_string("window"));
  ds.n_views = n_views;
  const auto dir = root / view_dir_name(n_views) / "samples";
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("dataset has no split for n_views=" + std::to_string(n_views) + " (" + dir.string() + ")");
  }
  auto to4 = [](Tensor<float> t) { return t.reshaped({1, 1, t.dim(0), t.dim(1)}); };
  const int total = m.train_count + m.test_count;
  for (int index = 0; index < total; ++index) {
    auto records = container::load_all(dir / sample_name(index));
    if (records.size() != 6) throw std::runtime_error("sample " + sample_name(index) + " has wrong record count");
    SampleTensors s{to4(std::move(records[0])), to4(std::move(records[1])), to4(std::move(records[2])),
                    to4(std::move(records[3])), to4(std::move(records[4])), to4(std::move(records[5]))};
    (index < m.train_count ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

}  // namespace freeseed
