#include "freeseed/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "freeseed/fbp_op.hpp"

namespace freeseed::losses {

namespace {

// sum_i weight_i * |pred_i - target_i|^p / denom, with weight == nullptr meaning 1.
template <typename T>
Var<T> weighted_error(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>* weight, Norm norm, double denom,
                      const char* what) {
  require_same_shape(pred.shape(), target.shape(), what);
  if (weight) require_same_shape(pred.shape(), weight->shape(), what);
  const T* p = pred.value().ptr();
  const T* t = target.ptr();
  double acc = 0.0;
  if (denom > 0.0) {
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
      const double wi = weight ? static_cast<double>((*weight)[i]) : 1.0;
      if (wi == 0.0) continue;
      acc += wi * (norm == Norm::l2 ? d * d : std::abs(d));
    }
    acc /= denom;
  }
  Tensor<T> value({1}, static_cast<T>(acc));
  Tensor<T> weights = weight ? *weight : Tensor<T>();
  return ag::make_result<T>(
      std::move(value), {pred}, [target, weights = std::move(weights), norm, denom](ag::Node<T>& self) {
        if (!(denom > 0.0)) return;
        const double g = static_cast<double>(self.grad[0]) / denom;
        auto& in = *self.inputs[0];
        T* dst = in.grad_buffer().ptr();
        const T* p = in.value.ptr();
        for (std::size_t i = 0; i < target.size(); ++i) {
          const double wi = weights.empty() ? 1.0 : static_cast<double>(weights[i]);
          if (wi == 0.0) continue;
          const double d = static_cast<double>(p[i]) - static_cast<double>(target[i]);
          const double local = norm == Norm::l2 ? 2.0 * d : (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0);
          dst[i] += static_cast<T>(g * wi * local);
        }
      });
}

template <typename T>
double count_where(const Tensor<T>& m, bool nonzero) {
  double n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) n += ((m[i] != T{0}) == nonzero) ? 1.0 : 0.0;
  return n;
}

}  // namespace

const char* norm_name(Norm n) { return n == Norm::l2 ? "l2" : "l1"; }

Norm parse_norm(const std::string& name) {
  if (name == "l2") return Norm::l2;
  if (name == "l1") return Norm::l1;
  throw std::invalid_argument("unknown norm '" + name + "' (expected l1 or l2)");
}

template <typename T>
Var<T> loss_art(const Var<T>& predicted, const Tensor<T>& target, Norm norm) {
  return weighted_error<T>(predicted, target, nullptr, norm, static_cast<double>(target.size()), "loss_art");
}

template <typename T>
Var<T> loss_mask(const Var<T>& refined, const Tensor<T>& full, const Tensor<T>& mask, Norm norm) {
  return weighted_error<T>(refined, full, &mask, norm, count_where(mask, true), "loss_mask");
}

template <typename T>
Var<T> loss_one_plus_mask(const Var<T>& predicted, const Tensor<T>& target, const Tensor<T>& mask, Norm norm) {
  require_same_shape(target.shape(), mask.shape(), "loss_one_plus_mask");
  // |(1 + m) d|^p = (1 + m)^p |d|^p
  Tensor<T> weight(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const T f = T{1} + mask[i];
    weight[i] = norm == Norm::l2 ? f * f : f;
  }
  return weighted_error<T>(predicted, target, &weight, norm, static_cast<double>(target.size()), "loss_one_plus_mask");
}

template <typename T>
Var<T> loss_total(const Var<T>& l_art, const Var<T>& l_mask, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  const T a = static_cast<T>(alpha);
  Tensor<T> value({1}, l_art.value()[0] + a * l_mask.value()[0]);
  return ag::make_result<T>(std::move(value), {l_art, l_mask}, [a](ag::Node<T>& self) {
    const T g = self.grad[0];
    if (self.inputs[0]->requires_grad) self.inputs[0]->grad_buffer()[0] += g;
    if (self.inputs[1]->requires_grad) self.inputs[1]->grad_buffer()[0] += a * g;
  });
}

double loss_total(double l_art, double l_mask, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  return l_art + alpha * l_mask;
}

template <typename T>
Var<T> loss_sino(const Var<T>& predicted, const Tensor<T>& full, const Tensor<T>& mask) {
  require_same_shape(full.shape(), mask.shape(), "loss_sino");
  Tensor<T> unseen(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) unseen[i] = mask[i] == T{0} ? T{1} : T{0};
  return weighted_error<T>(predicted, full, &unseen, Norm::l1, count_where(mask, false), "loss_sino");
}

template <typename T>
Var<T> loss_rc(const Var<T>& predicted, const Tensor<T>& full, std::shared_ptr<const FbpOperator> fbp,
               Var<T>& reconstruction) {
  reconstruction = fbp_apply(predicted, std::move(fbp));
  return weighted_error<T>(reconstruction, full, nullptr, Norm::l1, static_cast<double>(full.size()), "loss_rc");
}

template <typename T>
Var<T> loss_rc(const Var<T>& predicted, const Tensor<T>& full, std::shared_ptr<const FbpOperator> fbp) {
  Var<T> unused;
  return loss_rc(predicted, full, std::move(fbp), unused);
}

#define FREESEED_INSTANTIATE_LOSSES(T)                                                                       \
  template Var<T> loss_art(const Var<T>&, const Tensor<T>&, Norm);                                           \
  template Var<T> loss_mask(const Var<T>&, const Tensor<T>&, const Tensor<T>&, Norm);                        \
  template Var<T> loss_one_plus_mask(const Var<T>&, const Tensor<T>&, const Tensor<T>&, Norm);               \
  template Var<T> loss_total(const Var<T>&, const Var<T>&, double);                                          \
  template Var<T> loss_sino(const Var<T>&, const Tensor<T>&, const Tensor<T>&);                              \
  template Var<T> loss_rc(const Var<T>&, const Tensor<T>&, std::shared_ptr<const FbpOperator>);              \
  template Var<T> loss_rc(const Var<T>&, const Tensor<T>&, std::shared_ptr<const FbpOperator>, Var<T>&);

FREESEED_INSTANTIATE_LOSSES(float)
FREESEED_INSTANTIATE_LOSSES(double)

}  // namespace freeseed::losses
