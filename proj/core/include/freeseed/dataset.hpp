#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "freeseed/geometry.hpp"
#include "freeseed/kv_config.hpp"
#include "freeseed/phantom.hpp"

namespace freeseed {

struct SimulationConfig {
  FanBeamGeometry geometry = FanBeamGeometry::standard();
  std::vector<int> n_views = {18, 36, 72, 144};
  int train_count = 200;
  int test_count = 50;
  std::uint64_t seed = 0;
  std::pair<int, int> n_ellipses = {4, 10};
  RampWindow window = RampWindow::ram_lak;
  /// Optional externally supplied slices (single [H, W] records). When set they
  /// replace generated phantoms: the first train_count are train, the rest test.
  std::vector<std::filesystem::path> slice_files;

  void validate() const;
};

inline constexpr std::uint64_t kTestSeedOffset = 5000;

/// Seed of the i-th train or test phantom.
std::uint64_t phantom_seed(std::uint64_t base, bool test, int index);

/// Writes root/manifest.txt, root/geometry.txt and, per N_v,
/// root/nvXXX/samples/NNNN.fsct. Train samples come first, then test.
/// Each sample file holds I_f, I_s, A, interpolated sparse sinogram, its
/// mask and the full sinogram as consecutive records. Output is a pure
/// function of the config.
void write_dataset(const std::filesystem::path& root, const SimulationConfig& config);

std::string view_dir_name(int n_views);

/// One sample as float32 network tensors: images [1, 1, H, W], sinograms [1, 1, V, D].
struct SampleTensors {
  Tensor<float> full;
  Tensor<float> sparse;
  Tensor<float> artifact;
  Tensor<float> sinogram;
  Tensor<float> sinogram_mask;
  Tensor<float> full_sinogram;
};

SampleTensors to_sample_tensors(const ImagePair& pair);

struct Dataset {
  FanBeamGeometry geometry;
  RampWindow window = RampWindow::ram_lak;
  int n_views = 0;
  std::vector<SampleTensors> train;
  std::vector<SampleTensors> test;
};

struct DatasetManifest {
  KeyValues values;
  std::vector<int> n_views;
  int train_count = 0;
  int test_count = 0;
};

DatasetManifest read_manifest(const std::filesystem::path& root);

/// Loads one N_v split; throws std::runtime_error if the directory or a sample is missing.
Dataset load_dataset(const std::filesystem::path& root, int n_views);

}  // namespace freeseed
