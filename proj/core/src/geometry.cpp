#include "freeseed/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "freeseed/fft.hpp"

namespace freeseed {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_angles_in_range(const std::vector<double>& angles) {
  for (double a : angles) {
    if (!(a >= 0.0 && a < kTwoPi)) {
      throw std::invalid_argument("view angle " + std::to_string(a) + " outside [0, 2*pi)");
    }
  }
}

void require_square(const Image& image, const FanBeamGeometry& geom) {
  if (image.ndim() != 2 || image.dim(0) != image.dim(1)) {
    throw std::invalid_argument("image must be square, got " + shape_string(image.shape()));
  }
  if (image.dim(0) != geom.image_size) {
    throw std::invalid_argument("image size " + std::to_string(image.dim(0)) + " does not match geometry size " +
                                std::to_string(geom.image_size));
  }
}

// Ray entry/exit parameters against the image square; false when the ray misses.
bool clip_to_square(double sx, double sy, double dx, double dy, double half, double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  const double s[2] = {sx, sy};
  const double d[2] = {dx, dy};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (s[a] < -half || s[a] > half) return false;
      continue;
    }
    double ta = (-half - s[a]) / d[a];
    double tb = (half - s[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0;
}

// Shared traversal for forward projection and its adjoint. `visit` receives
// (ray index, pixel flat index, weight) for every bilinear tap.
template <typename Visit>
void trace_rays(const FanBeamGeometry& geom, const std::vector<double>& angles, Visit&& visit) {
  const int n = geom.image_size;
  const double ps = geom.pixel_spacing;
  const double half = 0.5 * n * ps;
  const double center = 0.5 * (n - 1);
  const double nominal_step = 0.5 * ps;
  for (std::size_t v = 0; v < angles.size(); ++v) {
    const double beta = angles[v];
    const double sx = geom.source_to_center * std::cos(beta);
    const double sy = geom.source_to_center * std::sin(beta);
    for (int k = 0; k < geom.n_detectors; ++k) {
      const double phi = beta + std::numbers::pi + geom.detector_angle(k);
      const double dx = std::cos(phi), dy = std::sin(phi);
      double t0 = 0, t1 = 0;
      if (!clip_to_square(sx, sy, dx, dy, half, t0, t1)) continue;
      const auto steps = static_cast<std::int64_t>(std::ceil((t1 - t0) / nominal_step));
      if (steps <= 0) continue;
      const double h = (t1 - t0) / static_cast<double>(steps);
      const std::int64_t ray = static_cast<std::int64_t>(v) * geom.n_detectors + k;
      // Pixel-index coordinates along the ray.
      double col = (sx + (t0 + 0.5 * h) * dx) / ps + center;
      double row = center - (sy + (t0 + 0.5 * h) * dy) / ps;
      const double dcol = h * dx / ps, drow = -h * dy / ps;
      for (std::int64_t m = 0; m < steps; ++m, col += dcol, row += drow) {
        const double fr = std::floor(row), fc = std::floor(col);
        const auto i0 = static_cast<std::int64_t>(fr), j0 = static_cast<std::int64_t>(fc);
        const double ar = row - fr, ac = col - fc;
        const double w00 = (1 - ar) * (1 - ac) * h, w01 = (1 - ar) * ac * h;
        const double w10 = ar * (1 - ac) * h, w11 = ar * ac * h;
        const bool r0 = i0 >= 0 && i0 < n, r1 = i0 + 1 >= 0 && i0 + 1 < n;
        const bool c0 = j0 >= 0 && j0 < n, c1 = j0 + 1 >= 0 && j0 + 1 < n;
        if (r0 && c0) visit(ray, i0 * n + j0, w00);
        if (r0 && c1) visit(ray, i0 * n + j0 + 1, w01);
        if (r1 && c0) visit(ray, (i0 + 1) * n + j0, w10);
        if (r1 && c1) visit(ray, (i0 + 1) * n + j0 + 1, w11);
      }
    }
  }
}

std::int64_t next_pow2(std::int64_t x) {
  std::int64_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

double window_gain(RampWindow w, double f) {
  switch (w) {
    case RampWindow::ram_lak:
      return 1.0;
    case RampWindow::shepp_logan: {
      const double a = 0.5 * std::numbers::pi * f;
      return a == 0.0 ? 1.0 : std::sin(a) / a;
    }
    case RampWindow::cosine:
      return std::cos(0.5 * std::numbers::pi * f);
    case RampWindow::hann:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * f));
  }
  return 1.0;
}

}  // namespace

std::vector<double> full_scan_angles(int n_views) {
  if (n_views < 1) throw std::invalid_argument("number of views must be >= 1");
  std::vector<double> a(static_cast<std::size_t>(n_views));
  for (int i = 0; i < n_views; ++i) a[static_cast<std::size_t>(i)] = kTwoPi * i / n_views;
  return a;
}

bool uniformly_spaced(const std::vector<double>& angles) {
  if (angles.empty()) return false;
  for (double a : angles) {
    if (!(a >= 0.0 && a < kTwoPi)) return false;
  }
  if (angles.size() == 1) return true;
  const double step = kTwoPi / static_cast<double>(angles.size());
  for (std::size_t i = 1; i < angles.size(); ++i) {
    if (std::abs((angles[i] - angles[i - 1]) - step) > 1e-9) return false;
  }
  return true;
}

FanBeamGeometry FanBeamGeometry::standard(int image_size, int n_views_full, int n_detectors, double field_of_view_cm) {
  FanBeamGeometry g;
  g.image_size = image_size;
  g.n_views_full = n_views_full;
  g.n_detectors = n_detectors;
  g.pixel_spacing = field_of_view_cm / image_size;
  g.source_to_center = 59.5;
  g.source_to_detector = 2.0 * g.source_to_center;
  const double half_fan = std::asin(0.5 * field_of_view_cm / g.source_to_center);
  g.detector_spacing = 2.0 * half_fan * 1.05 / n_detectors;
  g.angles = full_scan_angles(n_views_full);
  g.validate();
  return g;
}

void FanBeamGeometry::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("FanBeamGeometry: " + m); };
  if (!(source_to_center > 0)) fail("source_to_center must be > 0");
  if (!(source_to_detector > source_to_center)) fail("source_to_detector must exceed source_to_center");
  if (n_detectors < 1) fail("n_detectors must be >= 1");
  if (!(detector_spacing > 0)) fail("detector_spacing must be > 0");
  if (n_views_full < 1) fail("n_views_full must be >= 1");
  if (angles.size() != static_cast<std::size_t>(n_views_full)) fail("angles must list n_views_full entries");
  if (!uniformly_spaced(angles)) fail("angles must be uniformly spaced over [0, 2*pi)");
  if (image_size < 1 || !(pixel_spacing > 0)) fail("image grid must be non-empty");
  if (!(fov_radius() < source_to_center)) fail("source must lie outside the field of view");
  if (fan_angle() + 1e-12 < 2.0 * std::asin(fov_radius() / source_to_center)) {
    fail("detector fan does not cover the field of view");
  }
}

KeyValues FanBeamGeometry::to_key_values() const {
  KeyValues kv;
  kv.set("source_to_center", source_to_center);
  kv.set("source_to_detector", source_to_detector);
  kv.set("n_detectors", n_detectors);
  kv.set("detector_spacing", detector_spacing);
  kv.set("n_views_full", n_views_full);
  kv.set("image_size", image_size);
  kv.set("pixel_spacing", pixel_spacing);
  return kv;
}

FanBeamGeometry FanBeamGeometry::from_key_values(const KeyValues& kv) {
  kv.require_known({"source_to_center", "source_to_detector", "n_detectors", "detector_spacing", "n_views_full",
                    "image_size", "pixel_spacing"});
  FanBeamGeometry g;
  g.source_to_center = kv.get_double("source_to_center");
  g.source_to_detector = kv.get_double("source_to_detector");
  g.n_detectors = static_cast<int>(kv.get_int("n_detectors"));
  g.detector_spacing = kv.get_double("detector_spacing");
  g.n_views_full = static_cast<int>(kv.get_int("n_views_full"));
  g.image_size = static_cast<int>(kv.get_int("image_size"));
  g.pixel_spacing = kv.get_double("pixel_spacing");
  g.angles = full_scan_angles(g.n_views_full);
  g.validate();
  return g;
}

Sinogram Sinogram::dense(Tensor<double> data, std::vector<double> angles) {
  Sinogram s;
  s.mask = Tensor<double>(data.shape(), 1.0);
  s.data = std::move(data);
  s.angles = std::move(angles);
  s.validate();
  return s;
}

std::vector<std::int64_t> Sinogram::measured_views() const {
  std::vector<std::int64_t> v;
  for (std::int64_t i = 0; i < n_views(); ++i) {
    if (view_measured(i)) v.push_back(i);
  }
  return v;
}

Sinogram Sinogram::measured_only() const {
  const auto rows = measured_views();
  const std::int64_t nd = n_detectors();
  Sinogram out;
  out.data = Tensor<double>({static_cast<std::int64_t>(rows.size()), nd});
  out.mask = Tensor<double>(out.data.shape(), 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(data.ptr() + rows[r] * nd, data.ptr() + (rows[r] + 1) * nd,
              out.data.ptr() + static_cast<std::int64_t>(r) * nd);
    out.angles.push_back(angles[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

void Sinogram::validate() const {
  if (data.ndim() != 2) throw std::invalid_argument("Sinogram: data must be [views x detectors]");
  require_same_shape(data.shape(), mask.shape(), "Sinogram mask");
  if (angles.size() != static_cast<std::size_t>(data.dim(0))) {
    throw std::invalid_argument("Sinogram: one angle per view required");
  }
  if (!all_finite(data)) throw std::invalid_argument("Sinogram: non-finite data");
  const std::int64_t nd = data.dim(1);
  for (std::int64_t v = 0; v < data.dim(0); ++v) {
    const double first = mask.at(v, 0);
    if (first != 0.0 && first != 1.0) throw std::invalid_argument("Sinogram: mask must be binary");
    for (std::int64_t k = 1; k < nd; ++k) {
      if (mask.at(v, k) != first) throw std::invalid_argument("Sinogram: mask rows must be constant");
    }
  }
}

Sinogram forward_project(const Image& image, const FanBeamGeometry& geom, const std::vector<double>& angles) {
  require_square(image, geom);
  require_angles_in_range(angles);
  Tensor<double> out({static_cast<std::int64_t>(angles.size()), geom.n_detectors});
  const double* img = image.ptr();
  double* dst = out.ptr();
  trace_rays(geom, angles, [&](std::int64_t ray, std::int64_t pix, double w) { dst[ray] += w * img[pix]; });
  Sinogram s;
  s.mask = Tensor<double>(out.shape(), 1.0);
  s.data = std::move(out);
  s.angles = angles;
  return s;
}

Sinogram forward_project(const Image& image, const FanBeamGeometry& geom) {
  return forward_project(image, geom, geom.angles);
}

Image project_adjoint(const Tensor<double>& sino_data, const FanBeamGeometry& geom, const std::vector<double>& angles) {
  require_angles_in_range(angles);
  if (sino_data.ndim() != 2 || sino_data.dim(0) != static_cast<std::int64_t>(angles.size()) ||
      sino_data.dim(1) != geom.n_detectors) {
    throw std::invalid_argument("project_adjoint: sinogram shape " + shape_string(sino_data.shape()) +
                                " does not match geometry");
  }
  Image out({geom.image_size, geom.image_size});
  const double* src = sino_data.ptr();
  double* img = out.ptr();
  trace_rays(geom, angles, [&](std::int64_t ray, std::int64_t pix, double w) { img[pix] += w * src[ray]; });
  return out;
}

const char* ramp_window_name(RampWindow w) {
  switch (w) {
    case RampWindow::ram_lak:
      return "ram-lak";
    case RampWindow::shepp_logan:
      return "shepp-logan";
    case RampWindow::cosine:
      return "cosine";
    case RampWindow::hann:
      return "hann";
  }
  return "?";
}

RampWindow parse_ramp_window(const std::string& name) {
  for (auto w : {RampWindow::ram_lak, RampWindow::shepp_logan, RampWindow::cosine, RampWindow::hann}) {
    if (name == ramp_window_name(w)) return w;
  }
  throw std::invalid_argument("unknown ramp window '" + name + "'");
}

FbpOperator::FbpOperator(const FanBeamGeometry& geom, std::vector<double> angles, RampWindow window)
    : geom_(geom), angles_(std::move(angles)) {
  geom_.validate();
  if (angles_.size() < 2) throw std::invalid_argument("FBP needs at least 2 views");
  require_angles_in_range(angles_);
  if (!uniformly_spaced(angles_)) throw std::invalid_argument("FBP needs uniformly spaced views over [0, 2*pi)");
  angle_step_ = kTwoPi / static_cast<double>(angles_.size());

  const int nd = geom_.n_detectors;
  cos_weight_.resize(static_cast<std::size_t>(nd));
  for (int k = 0; k < nd; ++k) {
    cos_weight_[static_cast<std::size_t>(k)] = geom_.source_to_center * std::cos(geom_.detector_angle(k));
  }

  // Band-limited equiangular ramp kernel sampled in the spatial domain, then
  // transformed; this keeps the DC term exact.
  padded_ = next_pow2(2 * static_cast<std::int64_t>(nd));
  const double alpha = geom_.detector_spacing;
  std::vector<fft::cplx> kernel(static_cast<std::size_t>(padded_));
  for (std::int64_t m = 0; m < padded_; ++m) {
    const std::int64_t lag = m < padded_ / 2 ? m : m - padded_;
    double g = 0.0;
    if (lag == 0) {
      g = 1.0 / (8.0 * alpha * alpha);
    } else if (lag % 2 != 0) {
      const double s = std::sin(static_cast<double>(lag) * alpha);
      g = -1.0 / (2.0 * std::numbers::pi * std::numbers::pi * s * s);
    }
    kernel[static_cast<std::size_t>(m)] = g * alpha;
  }
  fft::forward_rows(kernel, 1, padded_);
  response_.resize(static_cast<std::size_t>(padded_));
  for (std::int64_t m = 0; m < padded_; ++m) {
    const std::int64_t lag = m < padded_ / 2 ? m : padded_ - m;
    const double f = static_cast<double>(lag) / static_cast<double>(padded_ / 2);
    response_[static_cast<std::size_t>(m)] = kernel[static_cast<std::size_t>(m)].real() * window_gain(window, f);
  }
}

void FbpOperator::filter_rows(Tensor<double>& rows) const {
  const std::int64_t nv = rows.dim(0), nd = rows.dim(1);
  std::vector<fft::cplx> buf(static_cast<std::size_t>(nv * padded_));
  for (std::int64_t v = 0; v < nv; ++v) {
    for (std::int64_t k = 0; k < nd; ++k) buf[static_cast<std::size_t>(v * padded_ + k)] = rows.at(v, k);
  }
  fft::forward_rows(buf, nv, padded_);
  for (std::int64_t v = 0; v < nv; ++v) {
    for (std::int64_t m = 0; m < padded_; ++m) buf[static_cast<std::size_t>(v * padded_ + m)] *= response_[static_cast<std::size_t>(m)];
  }
  fft::inverse_rows(buf, nv, padded_);
  const double inv = 1.0 / static_cast<double>(padded_);
  for (std::int64_t v = 0; v < nv; ++v) {
    for (std::int64_t k = 0; k < nd; ++k) rows.at(v, k) = buf[static_cast<std::size_t>(v * padded_ + k)].real() * inv;
  }
}

Tensor<double> FbpOperator::weight_and_filter(const Tensor<double>& sino_data) const {
  if (sino_data.ndim() != 2 || sino_data.dim(0) != n_views() || sino_data.dim(1) != geom_.n_detectors) {
    throw std::invalid_argument("FBP: sinogram shape " + shape_string(sino_data.shape()) + " does not match " +
                                std::to_string(n_views()) + " views x " + std::to_string(geom_.n_detectors) +
                                " detectors");
  }
  Tensor<double> rows = sino_data;
  for (std::int64_t v = 0; v < rows.dim(0); ++v) {
    for (std::int64_t k = 0; k < rows.dim(1); ++k) rows.at(v, k) *= cos_weight_[static_cast<std::size_t>(k)];
  }
  filter_rows(rows);
  return rows;
}

namespace {

// Pixel-driven traversal shared by backprojection and its adjoint: visit
// (view, pixel, detector k0, interpolation fraction, weight).
template <typename Visit>
void trace_pixels(const FanBeamGeometry& geom, const std::vector<double>& angles, double angle_step, Visit&& visit) {
  const int n = geom.image_size;
  const double ps = geom.pixel_spacing;
  const double center = 0.5 * (n - 1);
  const double det_center = 0.5 * (geom.n_detectors - 1);
  const double inv_spacing = 1.0 / geom.detector_spacing;
  for (std::size_t v = 0; v < angles.size(); ++v) {
    const double cb = std::cos(angles[v]), sb = std::sin(angles[v]);
    const double sx = geom.source_to_center * cb, sy = geom.source_to_center * sb;
    for (int i = 0; i < n; ++i) {
      const double y = (center - i) * ps;
      for (int j = 0; j < n; ++j) {
        const double x = (j - center) * ps;
        const double vx = x - sx, vy = y - sy;
        const double dot = -cb * vx - sb * vy;
        const double cross = -cb * vy + sb * vx;
        const double u = std::atan2(cross, dot) * inv_spacing + det_center;
        const double fu = std::floor(u);
        const auto k0 = static_cast<std::int64_t>(fu);
        if (k0 < -1 || k0 >= geom.n_detectors) continue;
        const double weight = angle_step / (dot * dot + cross * cross);
        visit(static_cast<std::int64_t>(v), static_cast<std::int64_t>(i) * n + j, k0, u - fu, weight);
      }
    }
  }
}

}  // namespace

Image FbpOperator::backproject(const Tensor<double>& filtered) const {
  Image out({geom_.image_size, geom_.image_size});
  const std::int64_t nd = geom_.n_detectors;
  double* img = out.ptr();
  const double* q = filtered.ptr();
  trace_pixels(geom_, angles_, angle_step_, [&](std::int64_t v, std::int64_t pix, std::int64_t k0, double f, double w) {
    const double* row = q + v * nd;
    double val = 0.0;
    if (k0 >= 0) val += (1.0 - f) * row[k0];
    if (k0 + 1 < nd) val += f * row[k0 + 1];
    img[pix] += w * val;
  });
  return out;
}

Tensor<double> FbpOperator::backproject_adjoint(const Image& image) const {
  if (image.ndim() != 2 || image.dim(0) != geom_.image_size || image.dim(1) != geom_.image_size) {
    throw std::invalid_argument("FBP adjoint: image shape " + shape_string(image.shape()) + " does not match geometry");
  }
  const std::int64_t nd = geom_.n_detectors;
  Tensor<double> out({n_views(), nd});
  double* q = out.ptr();
  const double* img = image.ptr();
  trace_pixels(geom_, angles_, angle_step_, [&](std::int64_t v, std::int64_t pix, std::int64_t k0, double f, double w) {
    double* row = q + v * nd;
    const double g = w * img[pix];
    if (k0 >= 0) row[k0] += (1.0 - f) * g;
    if (k0 + 1 < nd) row[k0 + 1] += f * g;
  });
  return out;
}

Image FbpOperator::apply(const Tensor<double>& sino_data) const { return backproject(weight_and_filter(sino_data)); }

Tensor<double> FbpOperator::adjoint(const Image& image) const {
  Tensor<double> rows = backproject_adjoint(image);
  filter_rows(rows);  // the ramp kernel is symmetric, so filtering is self-adjoint
  for (std::int64_t v = 0; v < rows.dim(0); ++v) {
    for (std::int64_t k = 0; k < rows.dim(1); ++k) rows.at(v, k) *= cos_weight_[static_cast<std::size_t>(k)];
  }
  return rows;
}

Image fbp_reconstruct(const Sinogram& sino, const FanBeamGeometry& geom, RampWindow window) {
  sino.validate();
  if (sino.n_views() < 2) throw std::invalid_argument("FBP needs at least 2 views");
  for (std::int64_t v = 0; v < sino.n_views(); ++v) {
    if (!sino.view_measured(v)) {
      throw std::invalid_argument("fbp_reconstruct expects a dense sinogram; pass measured_only() for sparse data");
    }
  }
  return FbpOperator(geom, sino.angles, window).apply(sino.data);
}

Sinogram sparse_sample(const Sinogram& full, int n_views) {
  full.validate();
  const std::int64_t total = full.n_views();
  if (n_views < 1 || total % n_views != 0) {
    throw std::invalid_argument("n_views=" + std::to_string(n_views) + " must be a divisor of the " +
                                std::to_string(total) + " full views");
  }
  const std::int64_t stride = total / n_views;
  Sinogram out = full;
  out.data.fill(0.0);
  out.mask.fill(0.0);
  const std::int64_t nd = full.n_detectors();
  for (std::int64_t v = 0; v < total; v += stride) {
    std::copy(full.data.ptr() + v * nd, full.data.ptr() + (v + 1) * nd, out.data.ptr() + v * nd);
    std::fill(out.mask.ptr() + v * nd, out.mask.ptr() + (v + 1) * nd, 1.0);
  }
  return out;
}

Sinogram interpolate_sinogram(const Sinogram& sparse) {
  sparse.validate();
  const auto measured = sparse.measured_views();
  if (measured.empty()) throw std::invalid_argument("interpolate_sinogram: no measured views");
  if (measured.size() < 2) throw std::invalid_argument("interpolate_sinogram: need at least 2 measured views");
  const std::int64_t nv = sparse.n_views(), nd = sparse.n_detectors();
  const bool uniform = uniformly_spaced(sparse.angles);
  auto wrap = [](double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0 ? a + kTwoPi : a;
  };

  Sinogram out = sparse;
  std::size_t next = 0;  // index into `measured` of the first measured view > v
  for (std::int64_t v = 0; v < nv; ++v) {
    while (next < measured.size() && measured[next] <= v) ++next;
    if (sparse.view_measured(v)) continue;
    const std::int64_t prev_view = next == 0 ? measured.back() : measured[next - 1];
    const std::int64_t next_view = next == measured.size() ? measured.front() : measured[next];
    double t = 0.0;
    if (uniform) {
      const std::int64_t gap = ((next_view - prev_view) % nv + nv) % nv;
      const std::int64_t off = ((v - prev_view) % nv + nv) % nv;
      t = static_cast<double>(off) / static_cast<double>(gap);
    } else {
      const auto a = static_cast<std::size_t>(prev_view), b = static_cast<std::size_t>(next_view);
      t = wrap(sparse.angles[static_cast<std::size_t>(v)] - sparse.angles[a]) / wrap(sparse.angles[b] - sparse.angles[a]);
    }
    const double* p = sparse.data.ptr() + prev_view * nd;
    const double* q = sparse.data.ptr() + next_view * nd;
    double* dst = out.data.ptr() + v * nd;
    for (std::int64_t k = 0; k < nd; ++k) dst[k] = (1.0 - t) * p[k] + t * q[k];
  }
  return out;
}

}  // namespace freeseed
