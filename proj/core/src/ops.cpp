#include "freeseed/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace freeseed::ops {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

struct ConvDims {
  std::int64_t n, cin, h, w, cout, k, ho, wo;
  int stride, pad;
};

// col is [cin*k*k, ho*wo] for one sample.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
  const std::int64_t plane = d.ho * d.wo;
  for (std::int64_t c = 0; c < d.cin; ++c) {
    const T* xc = x + c * d.h * d.w;
    for (std::int64_t ki = 0; ki < d.k; ++ki) {
      for (std::int64_t kj = 0; kj < d.k; ++kj) {
        T* row = col + ((c * d.k + ki) * d.k + kj) * plane;
        for (std::int64_t oh = 0; oh < d.ho; ++oh) {
          const std::int64_t ih = oh * d.stride - d.pad + ki;
          T* dst = row + oh * d.wo;
          if (ih < 0 || ih >= d.h) {
            std::fill(dst, dst + d.wo, T{0});
            continue;
          }
          const T* src = xc + ih * d.w;
          if (d.stride == 1) {
            const std::int64_t shift = kj - d.pad;
            const std::int64_t lo = std::min<std::int64_t>(d.wo, std::max<std::int64_t>(0, -shift));
            const std::int64_t hi = std::max(lo, std::min<std::int64_t>(d.wo, d.w - shift));
            for (std::int64_t ow = 0; ow < lo; ++ow) dst[ow] = T{0};
            for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow] = src[ow + shift];
            for (std::int64_t ow = hi; ow < d.wo; ++ow) dst[ow] = T{0};
          } else {
            for (std::int64_t ow = 0; ow < d.wo; ++ow) {
              const std::int64_t iw = ow * d.stride - d.pad + kj;
              dst[ow] = (iw >= 0 && iw < d.w) ? src[iw] : T{0};
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvDims& d, T* dx) {
  const std::int64_t plane = d.ho * d.wo;
  for (std::int64_t c = 0; c < d.cin; ++c) {
    T* xc = dx + c * d.h * d.w;
    for (std::int64_t ki = 0; ki < d.k; ++ki) {
      for (std::int64_t kj = 0; kj < d.k; ++kj) {
        const T* row = col + ((c * d.k + ki) * d.k + kj) * plane;
        for (std::int64_t oh = 0; oh < d.ho; ++oh) {
          const std::int64_t ih = oh * d.stride - d.pad + ki;
          if (ih < 0 || ih >= d.h) continue;
          const T* src = row + oh * d.wo;
          T* dst = xc + ih * d.w;
          if (d.stride == 1) {
            const std::int64_t shift = kj - d.pad;
            const std::int64_t lo = std::min<std::int64_t>(d.wo, std::max<std::int64_t>(0, -shift));
            const std::int64_t hi = std::max(lo, std::min<std::int64_t>(d.wo, d.w - shift));
            for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow + shift] += src[ow];
          } else {
            for (std::int64_t ow = 0; ow < d.wo; ++ow) {
              const std::int64_t iw = ow * d.stride - d.pad + kj;
              if (iw >= 0 && iw < d.w) dst[iw] += src[ow];
            }
          }
        }
      }
    }
  }
}

template <typename T>
Var<T> binary_elementwise(const Var<T>& a, const Var<T>& b, const char* what, int kind) {
  require_same_shape(a.shape(), b.shape(), what);
  Tensor<T> out(a.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = kind == 0 ? av[i] + bv[i] : kind == 1 ? av[i] - bv[i] : av[i] * bv[i];
  }
  return ag::make_result<T>(std::move(out), {a, b}, [kind](ag::Node<T>& self) {
    const auto& g = self.grad;
    auto& na = *self.inputs[0];
    auto& nb = *self.inputs[1];
    if (na.requires_grad) {
      auto& ga = na.grad_buffer();
      if (kind == 2) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * nb.value[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
    }
    if (nb.requires_grad) {
      auto& gb = nb.grad_buffer();
      if (kind == 2) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * na.value[i];
      } else if (kind == 1) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    }
  });
}

}  // namespace

void require_nchw(const Shape& s, const char* what) {
  if (s.size() != 4) throw std::invalid_argument(std::string(what) + ": expected NCHW, got " + shape_string(s));
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary_elementwise(a, b, "add", 0);
}
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary_elementwise(a, b, "sub", 1);
}
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary_elementwise(a, b, "mul", 2);
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> out = a.value() * s;
  return ag::make_result<T>(std::move(out), {a}, [s](ag::Node<T>& self) {
    auto& gx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * self.grad[i];
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T total{0};
  for (auto v : a.value().data()) total += v;
  return ag::make_result<T>(Tensor<T>({1}, total), {a}, [](ag::Node<T>& self) {
    auto& gx = self.inputs[0]->grad_buffer();
    const T g = self.grad[0];
    for (auto& v : gx.data()) v += g;
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  if (a.value().empty()) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.value().size()));
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  Tensor<T> out(a.shape());
  const auto& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : slope * x[i];
  return ag::make_result<T>(std::move(out), {a}, [slope](ag::Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& gx = in.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += in.value[i] > T{0} ? self.grad[i] : slope * self.grad[i];
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return leaky_relu(a, T{0});
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int padding) {
  require_nchw(x.shape(), "conv2d input");
  require_nchw(weight.shape(), "conv2d weight");
  const auto& ws = weight.shape();
  if (ws[2] != ws[3]) throw std::invalid_argument("conv2d: kernel must be square");
  if (ws[1] != x.dim(1)) {
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(ws[1]) + " input channels, got " +
                                std::to_string(x.dim(1)));
  }
  if (stride < 1 || padding < 0) throw std::invalid_argument("conv2d: bad stride/padding");
  ConvDims d{};
  d.n = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = ws[0];
  d.k = ws[2];
  d.stride = stride;
  d.pad = padding;
  d.ho = (d.h + 2 * padding - d.k) / stride + 1;
  d.wo = (d.w + 2 * padding - d.k) / stride + 1;
  if (d.ho <= 0 || d.wo <= 0) throw std::invalid_argument("conv2d: input smaller than kernel");
  const bool has_bias = bias.defined();
  if (has_bias && (bias.value().size() != static_cast<std::size_t>(d.cout))) {
    throw std::invalid_argument("conv2d: bias size mismatch");
  }

  const std::int64_t kdim = d.cin * d.k * d.k;
  const std::int64_t plane = d.ho * d.wo;
  const bool pointwise = d.k == 1 && stride == 1 && padding == 0;

  Tensor<T> out({d.n, d.cout, d.ho, d.wo});
  AlignedVector<T> col(pointwise ? 0 : static_cast<std::size_t>(kdim * plane));
  CMapMat<T> W(weight.value().ptr(), d.cout, kdim);
  for (std::int64_t n = 0; n < d.n; ++n) {
    const T* xn = x.value().ptr() + n * d.cin * d.h * d.w;
    const T* cptr = xn;
    if (!pointwise) {
      im2col(xn, d, col.data());
      cptr = col.data();
    }
    MapMat<T> Y(out.ptr() + n * d.cout * plane, d.cout, plane);
    Y.noalias() = W * CMapMat<T>(cptr, kdim, plane);
    if (has_bias) {
      for (std::int64_t c = 0; c < d.cout; ++c) Y.row(c).array() += bias.value()[static_cast<std::size_t>(c)];
    }
  }

  std::vector<Var<T>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return ag::make_result<T>(std::move(out), std::move(inputs), [d, kdim, plane, pointwise, has_bias](ag::Node<T>& self) {
    auto& xn = *self.inputs[0];
    auto& wn = *self.inputs[1];
    CMapMat<T> W(wn.value.ptr(), d.cout, kdim);
    AlignedVector<T> col(pointwise ? 0 : static_cast<std::size_t>(kdim * plane));
    AlignedVector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(kdim * plane));
    for (std::int64_t n = 0; n < d.n; ++n) {
      CMapMat<T> G(self.grad.ptr() + n * d.cout * plane, d.cout, plane);
      const T* xs = xn.value.ptr() + n * d.cin * d.h * d.w;
      if (wn.requires_grad) {
        const T* cptr = xs;
        if (!pointwise) {
          im2col(xs, d, col.data());
          cptr = col.data();
        }
        MapMat<T> dW(wn.grad_buffer().ptr(), d.cout, kdim);
        dW.noalias() += G * CMapMat<T>(cptr, kdim, plane).transpose();
      }
      if (has_bias && self.inputs[2]->requires_grad) {
        auto& gb = self.inputs[2]->grad_buffer();
        for (std::int64_t c = 0; c < d.cout; ++c) gb[static_cast<std::size_t>(c)] += G.row(c).sum();
      }
      if (xn.requires_grad) {
        T* dx = xn.grad_buffer().ptr() + n * d.cin * d.h * d.w;
        if (pointwise) {
          MapMat<T> DX(dx, d.cin, plane);
          DX.noalias() += W.transpose() * G;
        } else {
          MapMat<T> DC(dcol.data(), kdim, plane);
          DC.noalias() = W.transpose() * G;
          col2im_add(dcol.data(), d, dx);
        }
      }
    }
  });
}

template <typename T>
Var<T> group_norm(const Var<T>& x, int groups, const Var<T>& gamma, const Var<T>& beta, T eps) {
  require_nchw(x.shape(), "group_norm");
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (groups < 1 || c % groups != 0) {
    throw std::invalid_argument("group_norm: " + std::to_string(c) + " channels not divisible into " +
                                std::to_string(groups) + " groups");
  }
  if (gamma.value().size() != static_cast<std::size_t>(c) || beta.value().size() != static_cast<std::size_t>(c)) {
    throw std::invalid_argument("group_norm: affine parameter size mismatch");
  }
  const std::int64_t cpg = c / groups;
  const std::int64_t count = cpg * hw;
  std::vector<T> mu(static_cast<std::size_t>(n * groups)), rstd(mu.size());
  Tensor<T> out(x.shape());
  const T* xv = x.value().ptr();
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t g = 0; g < groups; ++g) {
      const T* p = xv + (s * c + g * cpg) * hw;
      double acc = 0.0;
      for (std::int64_t i = 0; i < count; ++i) acc += p[i];
      const double m = acc / static_cast<double>(count);
      double var = 0.0;
      for (std::int64_t i = 0; i < count; ++i) var += (p[i] - m) * (p[i] - m);
      var /= static_cast<double>(count);
      const std::size_t idx = static_cast<std::size_t>(s * groups + g);
      mu[idx] = static_cast<T>(m);
      rstd[idx] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      for (std::int64_t cc = 0; cc < cpg; ++cc) {
        const std::int64_t ch = g * cpg + cc;
        const T ga = gamma.value()[static_cast<std::size_t>(ch)];
        const T be = beta.value()[static_cast<std::size_t>(ch)];
        const T* src = xv + (s * c + ch) * hw;
        T* dst = out.ptr() + (s * c + ch) * hw;
        for (std::int64_t i = 0; i < hw; ++i) dst[i] = (src[i] - mu[idx]) * rstd[idx] * ga + be;
      }
    }
  }
  return ag::make_result<T>(std::move(out), {x, gamma, beta},
                            [n, c, hw, groups, cpg, count, mu, rstd](ag::Node<T>& self) {
    auto& xn = *self.inputs[0];
    auto& gn = *self.inputs[1];
    auto& bn = *self.inputs[2];
    const T* xv = xn.value.ptr();
    const T* gy = self.grad.ptr();
    std::vector<T> xhat(static_cast<std::size_t>(count));
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t g = 0; g < groups; ++g) {
        const std::size_t idx = static_cast<std::size_t>(s * groups + g);
        const std::int64_t base = (s * c + g * cpg) * hw;
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::int64_t cc = 0; cc < cpg; ++cc) {
          const std::int64_t ch = g * cpg + cc;
          const T ga = gn.value[static_cast<std::size_t>(ch)];
          double dgamma = 0.0, dbeta = 0.0;
          for (std::int64_t i = 0; i < hw; ++i) {
            const std::int64_t off = cc * hw + i;
            const T xh = (xv[base + off] - mu[idx]) * rstd[idx];
            xhat[static_cast<std::size_t>(off)] = xh;
            const T dy = gy[base + off];
            dgamma += double(dy) * xh;
            dbeta += dy;
            const double dxh = double(dy) * ga;
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
          }
          if (gn.requires_grad) gn.grad_buffer()[static_cast<std::size_t>(ch)] += static_cast<T>(dgamma);
          if (bn.requires_grad) bn.grad_buffer()[static_cast<std::size_t>(ch)] += static_cast<T>(dbeta);
        }
        if (!xn.requires_grad) continue;
        const double mean_dxhat = sum_dxhat / static_cast<double>(count);
        const double mean_dxhat_xhat = sum_dxhat_xhat / static_cast<double>(count);
        T* gx = xn.grad_buffer().ptr() + base;
        for (std::int64_t cc = 0; cc < cpg; ++cc) {
          const T ga = gn.value[static_cast<std::size_t>(g * cpg + cc)];
          for (std::int64_t i = 0; i < hw; ++i) {
            const std::int64_t off = cc * hw + i;
            const double dxh = double(gy[base + off]) * ga;
            gx[off] += static_cast<T>(rstd[idx] *
                                      (dxh - mean_dxhat - xhat[static_cast<std::size_t>(off)] * mean_dxhat_xhat));
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  for (const auto& p : parts) require_nchw(p.shape(), "concat_channels");
  const auto& s0 = parts[0].shape();
  std::int64_t total = 0;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) {
      throw std::invalid_argument("concat_channels: incompatible " + shape_string(s) + " vs " + shape_string(s0));
    }
    offsets.push_back(total);
    total += s[1];
  }
  const std::int64_t n = s0[0], hw = s0[2] * s0[3];
  Tensor<T> out({n, total, s0[2], s0[3]});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::int64_t ck = parts[k].dim(1);
    for (std::int64_t s = 0; s < n; ++s) {
      const T* src = parts[k].value().ptr() + s * ck * hw;
      std::copy(src, src + ck * hw, out.ptr() + (s * total + offsets[k]) * hw);
    }
  }
  return ag::make_result<T>(std::move(out), parts, [n, hw, total, offsets](ag::Node<T>& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      auto& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      const std::int64_t ck = in.value.dim(1);
      auto& g = in.grad_buffer();
      for (std::int64_t s = 0; s < n; ++s) {
        const T* src = self.grad.ptr() + (s * total + offsets[k]) * hw;
        T* dst = g.ptr() + s * ck * hw;
        for (std::int64_t i = 0; i < ck * hw; ++i) dst[i] += src[i];
      }
    }
  });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, std::int64_t begin, std::int64_t count) {
  require_nchw(x.shape(), "slice_channels");
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (begin < 0 || count < 0 || begin + count > c) throw std::invalid_argument("slice_channels: range out of bounds");
  Tensor<T> out({n, count, x.dim(2), x.dim(3)});
  for (std::int64_t s = 0; s < n; ++s) {
    const T* src = x.value().ptr() + (s * c + begin) * hw;
    std::copy(src, src + count * hw, out.ptr() + s * count * hw);
  }
  return ag::make_result<T>(std::move(out), {x}, [n, c, hw, begin, count](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t s = 0; s < n; ++s) {
      const T* src = self.grad.ptr() + s * count * hw;
      T* dst = g.ptr() + (s * c + begin) * hw;
      for (std::int64_t i = 0; i < count * hw; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Var<T> upsample_nearest2x(const Var<T>& x) {
  require_nchw(x.shape(), "upsample_nearest2x");
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out({x.dim(0), x.dim(1), 2 * h, 2 * w});
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = x.value().ptr() + p * h * w;
    T* dst = out.ptr() + p * 4 * h * w;
    for (std::int64_t i = 0; i < 2 * h; ++i) {
      for (std::int64_t j = 0; j < 2 * w; ++j) dst[i * 2 * w + j] = src[(i / 2) * w + j / 2];
    }
  }
  return ag::make_result<T>(std::move(out), {x}, [planes, h, w](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      const T* src = self.grad.ptr() + p * 4 * h * w;
      T* dst = g.ptr() + p * h * w;
      for (std::int64_t i = 0; i < 2 * h; ++i) {
        for (std::int64_t j = 0; j < 2 * w; ++j) dst[(i / 2) * w + j / 2] += src[i * 2 * w + j];
      }
    }
  });
}

template <typename T>
Var<T> avg_pool2x(const Var<T>& x) {
  require_nchw(x.shape(), "avg_pool2x");
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw std::invalid_argument("avg_pool2x: spatial size must be even, got " + shape_string(x.shape()));
  const std::int64_t ho = h / 2, wo = w / 2;
  Tensor<T> out({x.dim(0), x.dim(1), ho, wo});
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = x.value().ptr() + p * h * w;
    T* dst = out.ptr() + p * ho * wo;
    for (std::int64_t i = 0; i < ho; ++i) {
      for (std::int64_t j = 0; j < wo; ++j) {
        const T* q = src + 2 * i * w + 2 * j;
        dst[i * wo + j] = T(0.25) * (q[0] + q[1] + q[w] + q[w + 1]);
      }
    }
  }
  return ag::make_result<T>(std::move(out), {x}, [planes, h, w, ho, wo](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      const T* src = self.grad.ptr() + p * ho * wo;
      T* dst = g.ptr() + p * h * w;
      for (std::int64_t i = 0; i < ho; ++i) {
        for (std::int64_t j = 0; j < wo; ++j) {
          const T v = T(0.25) * src[i * wo + j];
          T* q = dst + 2 * i * w + 2 * j;
          q[0] += v;
          q[1] += v;
          q[w] += v;
          q[w + 1] += v;
        }
      }
    }
  });
}

namespace {
template <typename T>
void copy_window(const T* src, std::int64_t sw, T* dst, std::int64_t dw, std::int64_t rows, std::int64_t cols,
                 bool accumulate) {
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) {
      if (accumulate) {
        dst[i * dw + j] += src[i * sw + j];
      } else {
        dst[i * dw + j] = src[i * sw + j];
      }
    }
  }
}
}  // namespace

template <typename T>
Var<T> pad_to(const Var<T>& x, std::int64_t height, std::int64_t width) {
  require_nchw(x.shape(), "pad_to");
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (height < h || width < w) throw std::invalid_argument("pad_to: target smaller than input");
  if (height == h && width == w) return x;
  Tensor<T> out({x.dim(0), x.dim(1), height, width});
  for (std::int64_t p = 0; p < planes; ++p) {
    copy_window(x.value().ptr() + p * h * w, w, out.ptr() + p * height * width, width, h, w, false);
  }
  return ag::make_result<T>(std::move(out), {x}, [planes, h, w, height, width](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      copy_window(self.grad.ptr() + p * height * width, width, g.ptr() + p * h * w, w, h, w, true);
    }
  });
}

template <typename T>
Var<T> crop_to(const Var<T>& x, std::int64_t height, std::int64_t width) {
  require_nchw(x.shape(), "crop_to");
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (height > h || width > w) throw std::invalid_argument("crop_to: target larger than input");
  if (height == h && width == w) return x;
  Tensor<T> out({x.dim(0), x.dim(1), height, width});
  for (std::int64_t p = 0; p < planes; ++p) {
    copy_window(x.value().ptr() + p * h * w, w, out.ptr() + p * height * width, width, height, width, false);
  }
  return ag::make_result<T>(std::move(out), {x}, [planes, h, w, height, width](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      copy_window(self.grad.ptr() + p * height * width, width, g.ptr() + p * h * w, w, height, width, true);
    }
  });
}

template <typename T>
Var<T> stack_batch(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack_batch: no inputs");
  const auto& s0 = parts[0].shape();
  require_nchw(s0, "stack_batch");
  if (s0[0] != 1) throw std::invalid_argument("stack_batch: parts must have batch size 1");
  const std::int64_t each = shape_numel(s0);
  Tensor<T> out({static_cast<std::int64_t>(parts.size()), s0[1], s0[2], s0[3]});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require_same_shape(parts[k].shape(), s0, "stack_batch");
    std::copy(parts[k].value().ptr(), parts[k].value().ptr() + each, out.ptr() + static_cast<std::int64_t>(k) * each);
  }
  return ag::make_result<T>(std::move(out), parts, [each](ag::Node<T>& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      if (!self.inputs[k]->requires_grad) continue;
      auto& g = self.inputs[k]->grad_buffer();
      const T* src = self.grad.ptr() + static_cast<std::int64_t>(k) * each;
      for (std::int64_t i = 0; i < each; ++i) g[static_cast<std::size_t>(i)] += src[i];
    }
  });
}

#define FREESEED_INSTANTIATE_OPS(T)                                                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                             \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                             \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                             \
  template Var<T> scale(const Var<T>&, T);                                                       \
  template Var<T> sum(const Var<T>&);                                                            \
  template Var<T> mean(const Var<T>&);                                                           \
  template Var<T> relu(const Var<T>&);                                                           \
  template Var<T> leaky_relu(const Var<T>&, T);                                                  \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);                 \
  template Var<T> group_norm(const Var<T>&, int, const Var<T>&, const Var<T>&, T);               \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                                   \
  template Var<T> slice_channels(const Var<T>&, std::int64_t, std::int64_t);                     \
  template Var<T> upsample_nearest2x(const Var<T>&);                                             \
  template Var<T> avg_pool2x(const Var<T>&);                                                     \
  template Var<T> pad_to(const Var<T>&, std::int64_t, std::int64_t);                             \
  template Var<T> crop_to(const Var<T>&, std::int64_t, std::int64_t);                            \
  template Var<T> stack_batch(const std::vector<Var<T>>&);

FREESEED_INSTANTIATE_OPS(float)
FREESEED_INSTANTIATE_OPS(double)

}  // namespace freeseed::ops
