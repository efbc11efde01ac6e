#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <unistd.h>

#include "freeseed/geometry.hpp"
#include "freeseed/random.hpp"
#include "freeseed/tensor.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("freeseed_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Centered disk of the given radius (cm) with 4x4 supersampled edge coverage.
inline freeseed::Image disk(const freeseed::FanBeamGeometry& g, double radius_cm, double value = 1.0) {
  const int n = g.image_size;
  freeseed::Image img({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int inside = 0;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          const double x = (j + (b + 0.5) / 4 - 0.5 - (n - 1) / 2.0) * g.pixel_spacing;
          const double y = ((n - 1) / 2.0 - (i + (a + 0.5) / 4 - 0.5)) * g.pixel_spacing;
          inside += x * x + y * y <= radius_cm * radius_cm;
        }
      }
      img.at(i, j) = value * inside / 16.0;
    }
  }
  return img;
}

inline freeseed::Tensor<double> random_tensor(freeseed::Shape shape, std::uint64_t seed, double lo = -1.0,
                                              double hi = 1.0) {
  freeseed::Rng rng(seed);
  freeseed::Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline double dot(const freeseed::Tensor<double>& a, const freeseed::Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const freeseed::Tensor<double>& a) { return std::sqrt(dot(a, a)); }

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

}  // namespace testutil

namespace testutil {

/// PSNR over pixels inside the scanner's inscribed field of view; range = max - min of the reference there.
inline double fov_psnr(const freeseed::Image& x, const freeseed::Image& ref, const freeseed::FanBeamGeometry& g) {
  const int n = g.image_size;
  double se = 0.0, lo = 1e300, hi = -1e300;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = (j - (n - 1) / 2.0) * g.pixel_spacing, dy = (i - (n - 1) / 2.0) * g.pixel_spacing;
      if (dx * dx + dy * dy > g.fov_radius() * g.fov_radius()) continue;
      const double d = x.at(i, j) - ref.at(i, j);
      se += d * d;
      lo = std::min(lo, ref.at(i, j));
      hi = std::max(hi, ref.at(i, j));
      ++count;
    }
  }
  const double mse = se / static_cast<double>(count);
  return 10.0 * std::log10((hi - lo) * (hi - lo) / mse);
}

}  // namespace testutil
