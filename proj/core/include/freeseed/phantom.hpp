#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "freeseed/geometry.hpp"

namespace freeseed {

/// Ellipse in normalized image coordinates: x to the right, y up, both in
/// [-1, 1] across the image. Attenuation adds where ellipses overlap.
struct Ellipse {
  double center_x = 0.0;
  double center_y = 0.0;
  double axis_a = 0.5;
  double axis_b = 0.5;
  double rotation = 0.0;
  double attenuation = 0.0;

  bool contains(double x, double y) const;
};

struct EllipsePhantom {
  std::vector<Ellipse> ellipses;

  /// Random torso-like phantom: one water-equivalent body ellipse covering
  /// well over 10% of the image plus bone, air and soft-tissue inserts.
  static EllipsePhantom random(std::uint64_t seed, std::pair<int, int> n_ellipses_range);

  /// Supersampled rasterization clipped to [0, 1].
  Image rasterize(int image_size, int supersample = 3) const;
};

Image generate_phantom(std::uint64_t seed, int image_size, std::pair<int, int> n_ellipses_range = {4, 10});

/// Dense scan of one phantom: full-view sinogram and its FBP.
struct FullScan {
  Sinogram sinogram;
  Image reconstruction;
};

FullScan scan_full(const Image& phantom, const FanBeamGeometry& geom, RampWindow window = RampWindow::ram_lak);

/// One training sample. artifact = sparse - full (corrupted minus clean), so
/// the restored image is sparse - predicted artifact.
struct ImagePair {
  Image full;
  Image sparse;
  Image artifact;
  Sinogram sparse_sinogram;  // linearly interpolated, mask marks measured views
  Sinogram full_sinogram;
  int n_views = 0;
};

ImagePair make_pair(const Image& phantom, const FanBeamGeometry& geom, int n_views,
                    RampWindow window = RampWindow::ram_lak);
/// Same as make_pair but reuses an existing dense scan.
ImagePair make_pair(const FullScan& scan, const FanBeamGeometry& geom, int n_views,
                    RampWindow window = RampWindow::ram_lak);

/// Attenuation of water and air in image units; phantoms use water = 0.2/cm.
struct HuCalibration {
  double mu_water = 0.2;
  double mu_air = 0.0;
};

double to_hu(double mu, const HuCalibration& cal);

/// Maps attenuation to HU and linearly rescales [low, high] HU onto [0, 1], clipping outside.
Image hu_window(const Image& image, double low_hu, double high_hu, const HuCalibration& cal = {});

}  // namespace freeseed
