#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "freeseed/tensor.hpp"

namespace freeseed::metrics {

double rmse(const Tensor<double>& x, const Tensor<double>& y);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(range^2 / MSE); identical inputs give kPsnrCap.
double psnr(const Tensor<double>& x, const Tensor<double>& reference, double data_range);

/// Mean local SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5).
double ssim(const Tensor<double>& x, const Tensor<double>& reference, double data_range);

/// max - min of the reference, the per-sample PSNR/SSIM range.
double data_range_of(const Tensor<double>& reference);

/// |centered 2D DFT| of an [H, W] map.
Tensor<double> artifact_amplitude(const Tensor<double>& artifact);
/// log(1 + amplitude) scaled to [0, 1] for display.
Tensor<double> artifact_spectrum(const Tensor<double>& artifact);
Tensor<double> log_normalize(const Tensor<double>& amplitude);

/// Amplitude-weighted mean of the normalized distance map, DC bin excluded.
double radial_band_centroid(const Tensor<double>& spectrum);

/// Best (d0, w) of a single band-pass map against the radial profile of a spectrum.
struct BandFit {
  double d0 = 0.0;
  double w = 1.0;
  double error = 0.0;
};
BandFit fit_band_pass(const Tensor<double>& spectrum);

struct MetricReport {
  std::string method;
  int n_views = 0;
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::vector<double> rmse;

  void add(const Tensor<double>& output, const Tensor<double>& reference);
  std::size_t size() const { return psnr.size(); }
  double mean_psnr() const;
  double mean_ssim() const;
  double mean_rmse() const;

  /// One row per sample: method,n_views,sample,psnr,ssim,rmse.
  void write_csv_rows(std::ostream& out) const;
};

std::string csv_header();

/// Methods as rows, one PSNR/SSIM/RMSE column group per N_v (SSIM in %, RMSE x 1e-2).
std::string format_table(const std::vector<MetricReport>& reports);

}  // namespace freeseed::metrics
