#include "freeseed/fbp_op.hpp"

#include <stdexcept>

#include "freeseed/ops.hpp"

namespace freeseed {

template <typename T>
ag::Var<T> fbp_apply(const ag::Var<T>& sinograms, std::shared_ptr<const FbpOperator> op) {
  ops::require_nchw(sinograms.shape(), "fbp_apply");
  const std::int64_t n = sinograms.dim(0);
  const std::int64_t nv = op->n_views(), nd = op->geometry().n_detectors, size = op->geometry().image_size;
  if (sinograms.dim(1) != 1 || sinograms.dim(2) != nv || sinograms.dim(3) != nd) {
    throw std::invalid_argument("fbp_apply: expected [N,1," + std::to_string(nv) + "," + std::to_string(nd) +
                                "], got " + shape_string(sinograms.shape()));
  }
  Tensor<T> out({n, 1, size, size});
  Tensor<double> row({nv, nd});
  for (std::int64_t s = 0; s < n; ++s) {
    const T* src = sinograms.value().ptr() + s * nv * nd;
    for (std::int64_t i = 0; i < nv * nd; ++i) row[static_cast<std::size_t>(i)] = static_cast<double>(src[i]);
    const Image img = op->apply(row);
    T* dst = out.ptr() + s * size * size;
    for (std::int64_t i = 0; i < size * size; ++i) dst[i] = static_cast<T>(img[static_cast<std::size_t>(i)]);
  }
  return ag::make_result<T>(std::move(out), {sinograms}, [op, n, nv, nd, size](ag::Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    Image gi({size, size});
    for (std::int64_t s = 0; s < n; ++s) {
      const T* src = self.grad.ptr() + s * size * size;
      for (std::int64_t i = 0; i < size * size; ++i) gi[static_cast<std::size_t>(i)] = static_cast<double>(src[i]);
      const Tensor<double> back = op->adjoint(gi);
      T* dst = g.ptr() + s * nv * nd;
      for (std::int64_t i = 0; i < nv * nd; ++i) dst[i] += static_cast<T>(back[static_cast<std::size_t>(i)]);
    }
  });
}

template ag::Var<float> fbp_apply(const ag::Var<float>&, std::shared_ptr<const FbpOperator>);
template ag::Var<double> fbp_apply(const ag::Var<double>&, std::shared_ptr<const FbpOperator>);

}  // namespace freeseed
