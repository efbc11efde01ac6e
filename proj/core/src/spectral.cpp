#include "freeseed/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "freeseed/fft.hpp"
#include "freeseed/ops.hpp"

namespace freeseed {

using fft::cplx;

SpectralFeature real_fft2_centered(const Tensor<double>& x) {
  if (x.ndim() != 3) throw std::invalid_argument("real_fft2_centered: expected [C, H, W]");
  SpectralFeature z{x.dim(0), x.dim(1), x.dim(2), {}};
  if (z.rows < 2 || z.cols < 2) throw std::invalid_argument("real_fft2_centered: H and W must be >= 2");
  const std::int64_t plane = z.rows * z.cols;
  z.values.resize(static_cast<std::size_t>(z.channels * plane));
  std::vector<cplx> buf(static_cast<std::size_t>(plane));
  for (std::int64_t c = 0; c < z.channels; ++c) {
    for (std::int64_t i = 0; i < plane; ++i) buf[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(c * plane + i)];
    fft::forward_2d(buf, z.rows, z.cols);
    fft::shift_to_center(buf, std::span<cplx>(z.values).subspan(static_cast<std::size_t>(c * plane), plane), z.rows,
                         z.cols);
  }
  return z;
}

Tensor<double> inverse_real_fft2_centered(const SpectralFeature& z) {
  const std::int64_t plane = z.rows * z.cols;
  Tensor<double> x({z.channels, z.rows, z.cols});
  std::vector<cplx> buf(static_cast<std::size_t>(plane));
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::int64_t c = 0; c < z.channels; ++c) {
    fft::shift_from_center(std::span<const cplx>(z.values).subspan(static_cast<std::size_t>(c * plane), plane), buf,
                           z.rows, z.cols);
    fft::inverse_2d(buf, z.rows, z.cols);
    for (std::int64_t i = 0; i < plane; ++i) x[static_cast<std::size_t>(c * plane + i)] = buf[static_cast<std::size_t>(i)].real() * inv;
  }
  return x;
}

Tensor<double> distance_map(std::int64_t rows, std::int64_t cols) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("distance_map: U and V must be >= 2");
  const double cu = static_cast<double>(rows / 2), cv = static_cast<double>(cols / 2);
  auto sq = [](double a) { return a * a; };
  const double max_sq = std::max(sq(cu), sq(rows - 1 - cu)) + std::max(sq(cv), sq(cols - 1 - cv));
  Tensor<double> d({rows, cols});
  for (std::int64_t u = 0; u < rows; ++u) {
    for (std::int64_t v = 0; v < cols; ++v) d.at(u, v) = std::sqrt((sq(u - cu) + sq(v - cv)) / max_sq);
  }
  return d;
}

double band_pass_value(double d0, double w, double distance) {
  const double q = (distance * distance - d0 * d0) / (w * distance + kBandPassEpsilon);
  return std::exp(-q * q);
}

void BandPassParams::validate() const {
  if (d0.size() != w.size()) throw std::invalid_argument("BandPassParams: d0 and w sizes differ");
  for (std::size_t c = 0; c < d0.size(); ++c) {
    if (!(d0[c] >= 0.0 && d0[c] <= 1.0)) throw std::invalid_argument("BandPassParams: d0 outside [0, 1]");
    if (!(w[c] >= kMinBandwidth)) throw std::invalid_argument("BandPassParams: w below minimum");
  }
}

Tensor<double> band_pass_map(const BandPassParams& params, const Tensor<double>& distance) {
  params.validate();
  if (distance.ndim() != 2) throw std::invalid_argument("band_pass_map: distance map must be [U, V]");
  const std::int64_t c = params.channels(), plane = static_cast<std::int64_t>(distance.size());
  Tensor<double> h({c, distance.dim(0), distance.dim(1)});
  for (std::int64_t k = 0; k < c; ++k) {
    const auto ck = static_cast<std::size_t>(k);
    for (std::int64_t i = 0; i < plane; ++i) {
      h[static_cast<std::size_t>(k * plane + i)] = band_pass_value(params.d0[ck], params.w[ck], distance[static_cast<std::size_t>(i)]);
    }
  }
  return h;
}

namespace {

// g[n, c] (real) and g[n, C + c] (imaginary) hold the centered spectrum planes.
template <typename T>
void centered_forward_planes(const T* x, std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w, T* out,
                             bool accumulate) {
  const std::int64_t plane = h * w;
  std::vector<cplx> buf(static_cast<std::size_t>(plane)), shifted(static_cast<std::size_t>(plane));
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t k = 0; k < c; ++k) {
      const T* src = x + (s * c + k) * plane;
      for (std::int64_t i = 0; i < plane; ++i) buf[static_cast<std::size_t>(i)] = static_cast<double>(src[i]);
      fft::forward_2d(buf, h, w);
      fft::shift_to_center(buf, shifted, h, w);
      T* re = out + (s * 2 * c + k) * plane;
      T* im = out + (s * 2 * c + c + k) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const cplx& z = shifted[static_cast<std::size_t>(i)];
        if (accumulate) {
          re[i] += static_cast<T>(z.real());
          im[i] += static_cast<T>(z.imag());
        } else {
          re[i] = static_cast<T>(z.real());
          im[i] = static_cast<T>(z.imag());
        }
      }
    }
  }
}

// Real part of the unnormalized inverse DFT of the unshifted stacked spectrum, times `factor`.
template <typename T>
void centered_inverse_planes(const T* z, std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w, double factor,
                             T* out, bool accumulate) {
  const std::int64_t plane = h * w;
  std::vector<cplx> buf(static_cast<std::size_t>(plane)), raw(static_cast<std::size_t>(plane));
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t k = 0; k < c; ++k) {
      const T* re = z + (s * 2 * c + k) * plane;
      const T* im = z + (s * 2 * c + c + k) * plane;
      for (std::int64_t i = 0; i < plane; ++i) buf[static_cast<std::size_t>(i)] = cplx(re[i], im[i]);
      fft::shift_from_center(buf, raw, h, w);
      fft::inverse_2d(raw, h, w);
      T* dst = out + (s * c + k) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const auto v = static_cast<T>(raw[static_cast<std::size_t>(i)].real() * factor);
        if (accumulate) {
          dst[i] += v;
        } else {
          dst[i] = v;
        }
      }
    }
  }
}

}  // namespace

template <typename T>
ag::Var<T> fft2c(const ag::Var<T>& x) {
  ops::require_nchw(x.shape(), "fft2c");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out({n, 2 * c, h, w});
  centered_forward_planes(x.value().ptr(), n, c, h, w, out.ptr(), false);
  return ag::make_result<T>(std::move(out), {x}, [n, c, h, w](ag::Node<T>& self) {
    // Adjoint of the unnormalized DFT is the unnormalized inverse.
    centered_inverse_planes(self.grad.ptr(), n, c, h, w, 1.0, self.inputs[0]->grad_buffer().ptr(), true);
  });
}

template <typename T>
ag::Var<T> ifft2c(const ag::Var<T>& z) {
  ops::require_nchw(z.shape(), "ifft2c");
  if (z.dim(1) % 2 != 0) throw std::invalid_argument("ifft2c: channel count must be even (real, imaginary)");
  const std::int64_t n = z.dim(0), c = z.dim(1) / 2, h = z.dim(2), w = z.dim(3);
  const double inv = 1.0 / static_cast<double>(h * w);
  Tensor<T> out({n, c, h, w});
  centered_inverse_planes(z.value().ptr(), n, c, h, w, inv, out.ptr(), false);
  return ag::make_result<T>(std::move(out), {z}, [n, c, h, w, inv](ag::Node<T>& self) {
    Tensor<T> g({n, 2 * c, h, w});
    centered_forward_planes(self.grad.ptr(), n, c, h, w, g.ptr(), false);
    auto& dst = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += static_cast<T>(g[i] * inv);
  });
}

template <typename T>
ag::Var<T> apply_band_pass(const ag::Var<T>& z, const ag::Var<T>& d0, const ag::Var<T>& w,
                           const Tensor<double>& distance) {
  ops::require_nchw(z.shape(), "apply_band_pass");
  const std::int64_t n = z.dim(0), c = z.dim(1) / 2, rows = z.dim(2), cols = z.dim(3);
  if (z.dim(1) != 2 * c) throw std::invalid_argument("apply_band_pass: channel count must be even");
  if (d0.value().size() != static_cast<std::size_t>(c) || w.value().size() != static_cast<std::size_t>(c)) {
    throw std::invalid_argument("apply_band_pass: expected " + std::to_string(c) + " band-pass channels");
  }
  if (distance.ndim() != 2 || distance.dim(0) != rows || distance.dim(1) != cols) {
    throw std::invalid_argument("apply_band_pass: distance map shape mismatch");
  }
  const std::int64_t plane = rows * cols;
  Tensor<double> hmap({c, rows, cols});
  for (std::int64_t k = 0; k < c; ++k) {
    const double dk = static_cast<double>(d0.value()[static_cast<std::size_t>(k)]);
    const double wk = static_cast<double>(w.value()[static_cast<std::size_t>(k)]);
    for (std::int64_t i = 0; i < plane; ++i) {
      hmap[static_cast<std::size_t>(k * plane + i)] = band_pass_value(dk, wk, distance[static_cast<std::size_t>(i)]);
    }
  }
  Tensor<T> out(z.shape());
  const T* zv = z.value().ptr();
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t ch = 0; ch < 2 * c; ++ch) {
      const double* hk = hmap.ptr() + (ch % c) * plane;
      const std::int64_t off = (s * 2 * c + ch) * plane;
      for (std::int64_t i = 0; i < plane; ++i) out.ptr()[off + i] = static_cast<T>(zv[off + i] * hk[i]);
    }
  }
  return ag::make_result<T>(
      std::move(out), {z, d0, w}, [n, c, plane, hmap = std::move(hmap), distance](ag::Node<T>& self) {
        const T* g = self.grad.ptr();
        auto& nz = *self.inputs[0];
        auto& nd = *self.inputs[1];
        auto& nw = *self.inputs[2];
        if (nz.requires_grad) {
          T* gz = nz.grad_buffer().ptr();
          for (std::int64_t s = 0; s < n; ++s) {
            for (std::int64_t ch = 0; ch < 2 * c; ++ch) {
              const double* hk = hmap.ptr() + (ch % c) * plane;
              const std::int64_t off = (s * 2 * c + ch) * plane;
              for (std::int64_t i = 0; i < plane; ++i) gz[off + i] += static_cast<T>(g[off + i] * hk[i]);
            }
          }
        }
        if (!nd.requires_grad && !nw.requires_grad) return;
        const T* zv = nz.value.ptr();
        for (std::int64_t k = 0; k < c; ++k) {
          const double dk = static_cast<double>(nd.value[static_cast<std::size_t>(k)]);
          const double wk = static_cast<double>(nw.value[static_cast<std::size_t>(k)]);
          const double* hk = hmap.ptr() + k * plane;
          double sum_d0 = 0.0, sum_w = 0.0;
          for (std::int64_t i = 0; i < plane; ++i) {
            // Upstream sensitivity to H at this bin, summed over batch and real/imag.
            double gh = 0.0;
            for (std::int64_t s = 0; s < n; ++s) {
              const std::int64_t re = (s * 2 * c + k) * plane + i, im = (s * 2 * c + c + k) * plane + i;
              gh += static_cast<double>(g[re]) * zv[re] + static_cast<double>(g[im]) * zv[im];
            }
            if (gh == 0.0 || hk[i] == 0.0) continue;
            const double dist = distance[static_cast<std::size_t>(i)];
            const double denom = wk * dist + kBandPassEpsilon;
            const double q = (dist * dist - dk * dk) / denom;
            sum_d0 += gh * 4.0 * q * hk[i] * dk / denom;
            sum_w += gh * 2.0 * q * q * hk[i] * dist / denom;
          }
          if (nd.requires_grad) nd.grad_buffer()[static_cast<std::size_t>(k)] += static_cast<T>(sum_d0);
          if (nw.requires_grad) nw.grad_buffer()[static_cast<std::size_t>(k)] += static_cast<T>(sum_w);
        }
      });
}

template ag::Var<float> fft2c(const ag::Var<float>&);
template ag::Var<double> fft2c(const ag::Var<double>&);
template ag::Var<float> ifft2c(const ag::Var<float>&);
template ag::Var<double> ifft2c(const ag::Var<double>&);
template ag::Var<float> apply_band_pass(const ag::Var<float>&, const ag::Var<float>&, const ag::Var<float>&,
                                        const Tensor<double>&);
template ag::Var<double> apply_band_pass(const ag::Var<double>&, const ag::Var<double>&, const ag::Var<double>&,
                                         const Tensor<double>&);

}  // namespace freeseed
