#include "freeseed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "freeseed/spectral.hpp"

namespace freeseed::metrics {

namespace {

void require_2d_pair(const Tensor<double>& x, const Tensor<double>& y, const char* what) {
  require_same_shape(x.shape(), y.shape(), what);
  if (x.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

double mse(const Tensor<double>& x, const Tensor<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

// Valid-region separable Gaussian filter of an [H, W] map.
std::vector<double> gaussian_valid(const std::vector<double>& img, std::int64_t h, std::int64_t w,
                                   const std::vector<double>& k) {
  const auto n = static_cast<std::int64_t>(k.size());
  const std::int64_t oh = h - n + 1, ow = w - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t i = 0; i < h; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < n; ++t) acc += k[static_cast<std::size_t>(t)] * img[static_cast<std::size_t>(i * w + j + t)];
      rows[static_cast<std::size_t>(i * ow + j)] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t i = 0; i < oh; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < n; ++t) acc += k[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>((i + t) * ow + j)];
      out[static_cast<std::size_t>(i * ow + j)] = acc;
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rmse(const Tensor<double>& x, const Tensor<double>& y) {
  require_2d_pair(x, y, "rmse");
  return std::sqrt(mse(x, y));
}

double psnr(const Tensor<double>& x, const Tensor<double>& reference, double data_range) {
  require_2d_pair(x, reference, "psnr");
  if (!(data_range > 0.0)) throw std::invalid_argument("psnr: data_range must be > 0");
  const double m = mse(x, reference);
  if (m == 0.0) return kPsnrCap;
  return 10.0 * std::log10(data_range * data_range / m);
}

double ssim(const Tensor<double>& x, const Tensor<double>& reference, double data_range) {
  require_2d_pair(x, reference, "ssim");
  if (!(data_range > 0.0)) throw std::invalid_argument("ssim: data_range must be > 0");
  if (x.ndim() != 2 || x.dim(0) < 11 || x.dim(1) < 11) throw std::invalid_argument("ssim: images must be at least 11x11");
  const std::int64_t h = x.dim(0), w = x.dim(1);
  std::vector<double> k(11);
  for (int t = 0; t < 11; ++t) k[static_cast<std::size_t>(t)] = std::exp(-0.5 * (t - 5) * (t - 5) / (1.5 * 1.5));
  const double ks = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) v /= ks;

  std::vector<double> a(x.size()), b(x.size()), aa(x.size()), bb(x.size()), ab(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    a[i] = x[i];
    b[i] = reference[i];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = gaussian_valid(a, h, w, k), mu_b = gaussian_valid(b, h, w, k);
  const auto s_aa = gaussian_valid(aa, h, w, k), s_bb = gaussian_valid(bb, h, w, k), s_ab = gaussian_valid(ab, h, w, k);
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = s_aa[i] - mu_a[i] * mu_a[i];
    const double vb = s_bb[i] - mu_b[i] * mu_b[i];
    const double cov = s_ab[i] - mu_a[i] * mu_b[i];
    acc += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
           ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

double data_range_of(const Tensor<double>& reference) {
  if (reference.empty()) throw std::invalid_argument("data_range_of: empty input");
  const auto [lo, hi] = std::minmax_element(reference.data().begin(), reference.data().end());
  return *hi - *lo;
}

Tensor<double> artifact_amplitude(const Tensor<double>& artifact) {
  if (artifact.ndim() != 2) throw std::invalid_argument("artifact spectrum expects an [H, W] map");
  const SpectralFeature z = real_fft2_centered(artifact.reshaped({1, artifact.dim(0), artifact.dim(1)}));
  Tensor<double> amp(artifact.shape());
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::abs(z.values[i]);
  return amp;
}

Tensor<double> log_normalize(const Tensor<double>& amplitude) {
  Tensor<double> out(amplitude.shape());
  double peak = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::log1p(amplitude[i]);
    peak = std::max(peak, out[i]);
  }
  if (peak > 0.0) {
    for (auto& v : out.data()) v /= peak;
  }
  return out;
}

Tensor<double> artifact_spectrum(const Tensor<double>& artifact) { return log_normalize(artifact_amplitude(artifact)); }

double radial_band_centroid(const Tensor<double>& spectrum) {
  if (spectrum.ndim() != 2) throw std::invalid_argument("radial_band_centroid expects an [H, W] map");
  const Tensor<double> d = distance_map(spectrum.dim(0), spectrum.dim(1));
  const std::size_t dc = static_cast<std::size_t>((spectrum.dim(0) / 2) * spectrum.dim(1) + spectrum.dim(1) / 2);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (i == dc) continue;
    num += d[i] * spectrum[i];
    den += spectrum[i];
  }
  if (!(den > 0.0)) throw std::invalid_argument("radial_band_centroid: spectrum has no energy outside DC");
  return num / den;
}

BandFit fit_band_pass(const Tensor<double>& spectrum) {
  if (spectrum.ndim() != 2) throw std::invalid_argument("fit_band_pass expects an [H, W] map");
  constexpr int kBins = 64;
  const Tensor<double> d = distance_map(spectrum.dim(0), spectrum.dim(1));
  std::vector<double> sum(kBins, 0.0), count(kBins, 0.0);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const int b = std::min(kBins - 1, static_cast<int>(d[i] * kBins));
    sum[static_cast<std::size_t>(b)] += spectrum[i];
    count[static_cast<std::size_t>(b)] += 1.0;
  }
  double peak = 0.0;
  for (int b = 1; b < kBins; ++b) {
    if (count[static_cast<std::size_t>(b)] > 0) {
      sum[static_cast<std::size_t>(b)] /= count[static_cast<std::size_t>(b)];
      peak = std::max(peak, sum[static_cast<std::size_t>(b)]);
    }
  }
  BandFit best{0.0, 1.0, std::numeric_limits<double>::infinity()};
  if (!(peak > 0.0)) return best;
  for (int i = 0; i <= 100; ++i) {
    const double d0 = i / 100.0;
    for (int j = 0; j <= 60; ++j) {
      const double w = 0.01 * std::pow(10.0, j / 20.0);
      double err = 0.0;
      for (int b = 1; b < kBins; ++b) {
        if (count[static_cast<std::size_t>(b)] == 0) continue;
        const double r = (b + 0.5) / kBins;
        const double diff = band_pass_value(d0, w, r) - sum[static_cast<std::size_t>(b)] / peak;
        err += diff * diff;
      }
      if (err < best.error) best = {d0, w, err};
    }
  }
  return best;
}

void MetricReport::add(const Tensor<double>& output, const Tensor<double>& reference) {
  const double range = data_range_of(reference);
  psnr.push_back(metrics::psnr(output, reference, range));
  ssim.push_back(metrics::ssim(output, reference, range));
  rmse.push_back(metrics::rmse(output, reference));
}

double MetricReport::mean_psnr() const { return mean_of(psnr); }
double MetricReport::mean_ssim() const { return mean_of(ssim); }
double MetricReport::mean_rmse() const { return mean_of(rmse); }

std::string csv_header() { return "method,n_views,sample,psnr,ssim,rmse"; }

void MetricReport::write_csv_rows(std::ostream& out) const {
  char buf[160];
  for (std::size_t i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.6f,%.6f,%.8f\n", method.c_str(), n_views, i, psnr[i], ssim[i], rmse[i]);
    out << buf;
  }
}

std::string format_table(const std::vector<MetricReport>& reports) {
  std::vector<int> views;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, int>, const MetricReport*> cell;
  for (const auto& r : reports) {
    if (std::find(views.begin(), views.end(), r.n_views) == views.end()) views.push_back(r.n_views);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    cell[{r.method, r.n_views}] = &r;
  }
  std::sort(views.begin(), views.end());
  std::size_t name_width = 6;
  for (const auto& m : methods) name_width = std::max(name_width, m.size());

  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "Method");
  out += buf;
  for (int v : views) {
    std::snprintf(buf, sizeof buf, " | N_v=%-16d", v);
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "");
  out += buf;
  for (std::size_t i = 0; i < views.size(); ++i) out += " |  PSNR   SSIM   RMSE ";
  out += "\n";
  for (const auto& m : methods) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), m.c_str());
    out += buf;
    for (int v : views) {
      auto it = cell.find({m, v});
      if (it == cell.end()) {
        out += " |     -      -      - ";
        continue;
      }
      const MetricReport& r = *it->second;
      std::snprintf(buf, sizeof buf, " | %6.2f %6.2f %6.2f", r.mean_psnr(), 100.0 * r.mean_ssim(), 100.0 * r.mean_rmse());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace freeseed::metrics
