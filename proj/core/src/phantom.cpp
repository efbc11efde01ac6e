#include "freeseed/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "freeseed/random.hpp"

namespace freeseed {

bool Ellipse::contains(double x, double y) const {
  const double c = std::cos(rotation), s = std::sin(rotation);
  const double dx = x - center_x, dy = y - center_y;
  const double u = (c * dx + s * dy) / axis_a;
  const double v = (-s * dx + c * dy) / axis_b;
  return u * u + v * v <= 1.0;
}

EllipsePhantom EllipsePhantom::random(std::uint64_t seed, std::pair<int, int> n_ellipses_range) {
  const auto [lo, hi] = n_ellipses_range;
  if (lo < 1) throw std::invalid_argument("phantom needs at least one ellipse (min >= 1)");
  if (hi < lo) throw std::invalid_argument("phantom ellipse range has max < min");

  Rng rng(seed);
  EllipsePhantom p;
  const int count = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));

  Ellipse body;
  body.center_x = rng.uniform(-0.05, 0.05);
  body.center_y = rng.uniform(-0.05, 0.05);
  body.axis_a = rng.uniform(0.62, 0.85);
  body.axis_b = rng.uniform(0.50, 0.75);
  body.rotation = rng.uniform(0.0, std::numbers::pi);
  body.attenuation = rng.uniform(0.19, 0.21);
  p.ellipses.push_back(body);

  const double c = std::cos(body.rotation), s = std::sin(body.rotation);
  for (int k = 1; k < count; ++k) {
    Ellipse e;
    const double r = 0.75 * std::sqrt(rng.uniform());
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double lx = r * std::cos(t) * body.axis_a, ly = r * std::sin(t) * body.axis_b;
    e.center_x = body.center_x + c * lx - s * ly;
    e.center_y = body.center_y + s * lx + c * ly;
    e.rotation = rng.uniform(0.0, std::numbers::pi);
    const double kind = rng.uniform();
    if (kind < 0.25) {  // bone
      e.axis_a = rng.uniform(0.03, 0.12);
      e.axis_b = rng.uniform(0.03, 0.12);
      e.attenuation = rng.uniform(0.15, 0.30);
    } else if (kind < 0.40) {  // air pocket
      e.axis_a = rng.uniform(0.03, 0.15);
      e.axis_b = rng.uniform(0.03, 0.15);
      e.attenuation = -0.2;
    } else {  // soft tissue
      e.axis_a = rng.uniform(0.04, 0.25);
      e.axis_b = rng.uniform(0.04, 0.25);
      e.attenuation = rng.uniform(-0.03, 0.06);
    }
    p.ellipses.push_back(e);
  }
  return p;
}

Image EllipsePhantom::rasterize(int image_size, int supersample) const {
  if (image_size < 1 || supersample < 1) throw std::invalid_argument("rasterize: bad size");
  Image out({image_size, image_size});
  const double half = 0.5 * image_size;
  const double inv = 1.0 / (supersample * supersample);
  for (int i = 0; i < image_size; ++i) {
    for (int j = 0; j < image_size; ++j) {
      double acc = 0.0;
      for (int a = 0; a < supersample; ++a) {
        for (int b = 0; b < supersample; ++b) {
          const double x = (j + (b + 0.5) / supersample - half) / half;
          const double y = (half - i - (a + 0.5) / supersample) / half;
          double v = 0.0;
          for (const auto& e : ellipses) {
            if (e.contains(x, y)) v += e.attenuation;
          }
          acc += std::clamp(v, 0.0, 1.0);
        }
      }
      out.at(i, j) = acc * inv;
    }
  }
  return out;
}

Image generate_phantom(std::uint64_t seed, int image_size, std::pair<int, int> n_ellipses_range) {
  if (image_size < 16) throw std::invalid_argument("image_size must be >= 16, got " + std::to_string(image_size));
  return EllipsePhantom::random(seed, n_ellipses_range).rasterize(image_size);
}

FullScan scan_full(const Image& phantom, const FanBeamGeometry& geom, RampWindow window) {
  FullScan scan;
  scan.sinogram = forward_project(phantom, geom);
  scan.reconstruction = fbp_reconstruct(scan.sinogram, geom, window);
  return scan;
}

ImagePair make_pair(const FullScan& scan, const FanBeamGeometry& geom, int n_views, RampWindow window) {
  ImagePair pair;
  pair.n_views = n_views;
  const Sinogram sparse = sparse_sample(scan.sinogram, n_views);
  pair.full = scan.reconstruction;
  pair.sparse = fbp_reconstruct(sparse.measured_only(), geom, window);
  pair.artifact = pair.sparse - pair.full;
  pair.sparse_sinogram = interpolate_sinogram(sparse);
  pair.full_sinogram = scan.sinogram;
  return pair;
}

ImagePair make_pair(const Image& phantom, const FanBeamGeometry& geom, int n_views, RampWindow window) {
  return make_pair(scan_full(phantom, geom, window), geom, n_views, window);
}

double to_hu(double mu, const HuCalibration& cal) {
  return 1000.0 * (mu - cal.mu_water) / (cal.mu_water - cal.mu_air);
}

Image hu_window(const Image& image, double low_hu, double high_hu, const HuCalibration& cal) {
  if (!(low_hu < high_hu)) throw std::invalid_argument("hu_window: low must be below high");
  if (!(cal.mu_water > cal.mu_air)) throw std::invalid_argument("hu_window: mu_water must exceed mu_air");
  Image out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double hu = to_hu(image[i], cal);
    out[i] = std::clamp((hu - low_hu) / (high_hu - low_hu), 0.0, 1.0);
  }
  return out;
}

}  // namespace freeseed
