#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "freeseed/kv_config.hpp"
#include "freeseed/tensor.hpp"

namespace freeseed {

using Image = Tensor<double>;  // [H, W], attenuation per cm

/// Equiangular fan-beam scan over a full 2*pi rotation.
///
/// Pixel (row i, col j) sits at x = (j - (N-1)/2) * pixel_spacing,
/// y = ((N-1)/2 - i) * pixel_spacing. The source for view angle beta is at
/// source_to_center * (cos beta, sin beta); detector k looks along the central
/// ray rotated by gamma_k = (k - (n_detectors-1)/2) * detector_spacing.
struct FanBeamGeometry {
  double source_to_center = 59.5;    // cm
  double source_to_detector = 119.0;  // cm
  int n_detectors = 672;
  double detector_spacing = 0.0;  // radians per detector (equiangular)
  int n_views_full = 720;
  std::vector<double> angles;  // full-scan view angles in [0, 2*pi)
  int image_size = 256;
  double pixel_spacing = 40.0 / 256.0;  // cm

  /// Scan with source-detector distance 2x source-center and a fan that covers
  /// the image's inscribed circle with 5% margin. Field of view is 40 cm.
  static FanBeamGeometry standard(int image_size = 256, int n_views_full = 720, int n_detectors = 672,
                                  double field_of_view_cm = 40.0);

  double fov_radius() const { return 0.5 * image_size * pixel_spacing; }
  double fan_angle() const { return detector_spacing * n_detectors; }
  /// Detector angle offset gamma_k.
  double detector_angle(int k) const { return (k - 0.5 * (n_detectors - 1)) * detector_spacing; }

  /// Throws std::invalid_argument on any broken invariant.
  void validate() const;

  KeyValues to_key_values() const;
  static FanBeamGeometry from_key_values(const KeyValues& kv);
  void save(const std::filesystem::path& path) const { to_key_values().save(path); }
  static FanBeamGeometry load(const std::filesystem::path& path) { return from_key_values(KeyValues::load(path)); }
};

/// Projection data [views x detectors] with per-row angles and a row-constant
/// measurement mask (1 = measured).
struct Sinogram {
  Tensor<double> data;
  std::vector<double> angles;
  Tensor<double> mask;

  static Sinogram dense(Tensor<double> data, std::vector<double> angles);

  std::int64_t n_views() const { return data.dim(0); }
  std::int64_t n_detectors() const { return data.dim(1); }
  bool view_measured(std::int64_t v) const { return mask.at(v, 0) != 0.0; }
  std::vector<std::int64_t> measured_views() const;
  /// Only the measured rows, with an all-ones mask.
  Sinogram measured_only() const;

  void validate() const;
};

/// Ray-driven line integrals: bilinear sampling at pixel_spacing/2 steps.
Sinogram forward_project(const Image& image, const FanBeamGeometry& geom, const std::vector<double>& angles);
Sinogram forward_project(const Image& image, const FanBeamGeometry& geom);
/// Exact adjoint of forward_project for the same angles.
Image project_adjoint(const Tensor<double>& sino_data, const FanBeamGeometry& geom, const std::vector<double>& angles);

enum class RampWindow { ram_lak, shepp_logan, cosine, hann };

const char* ramp_window_name(RampWindow w);
RampWindow parse_ramp_window(const std::string& name);

/// Equiangular fan-beam FBP as a linear map: cosine weighting, ramp
/// filtering (zero padded to the next power of two >= 2 * n_detectors),
/// distance-weighted pixel-driven backprojection. `adjoint` is its exact
/// transpose, so the operator can sit inside a gradient computation.
class FbpOperator {
 public:
  FbpOperator(const FanBeamGeometry& geom, std::vector<double> angles, RampWindow window = RampWindow::ram_lak);

  Image apply(const Tensor<double>& sino_data) const;
  Tensor<double> adjoint(const Image& image) const;

  /// Individual linear stages, exposed for testing.
  Tensor<double> weight_and_filter(const Tensor<double>& sino_data) const;
  Image backproject(const Tensor<double>& filtered) const;
  Tensor<double> backproject_adjoint(const Image& image) const;

  const FanBeamGeometry& geometry() const { return geom_; }
  const std::vector<double>& angles() const { return angles_; }
  std::int64_t n_views() const { return static_cast<std::int64_t>(angles_.size()); }
  std::int64_t padded_length() const { return padded_; }

 private:
  void filter_rows(Tensor<double>& rows) const;

  FanBeamGeometry geom_;
  std::vector<double> angles_;
  std::vector<double> cos_weight_;   // source_to_center * cos(gamma_k)
  std::vector<double> response_;     // real filter response, length padded_
  std::int64_t padded_ = 0;
  double angle_step_ = 0.0;
};

Image fbp_reconstruct(const Sinogram& sino, const FanBeamGeometry& geom, RampWindow window = RampWindow::ram_lak);

/// Keeps every (n_views_full / n_views)-th view starting at 0; the rest are
/// zeroed in both data and mask.
Sinogram sparse_sample(const Sinogram& full, int n_views);

/// Fills each missing view by linear interpolation in angle between its
/// nearest measured neighbours, wrapping across 2*pi. The mask is kept.
Sinogram interpolate_sinogram(const Sinogram& sparse);

/// True when the angles are strictly increasing with constant spacing and lie in [0, 2*pi).
bool uniformly_spaced(const std::vector<double>& angles);

std::vector<double> full_scan_angles(int n_views);

}  // namespace freeseed
