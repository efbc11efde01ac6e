#include "freeseed/optim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace freeseed::optim {

template <typename T>
Adam<T>::Adam(ag::ParameterList<T> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  std::set<std::string> names;
  for (const auto& p : params_) {
    if (!names.insert(p.name).second) throw std::invalid_argument("duplicate parameter name " + p.name);
    m_.emplace(p.name, Tensor<T>(p.var.shape()));
    v_.emplace(p.name, Tensor<T>(p.var.shape()));
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (auto& p : params_) {
    if (!p.var.has_grad()) continue;
    auto& value = p.var.mutable_value();
    const auto& g = p.var.grad();
    auto& m = m_.at(p.name);
    auto& v = v_.at(p.name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
      const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + options_.eps);
      value[i] = static_cast<T>(static_cast<double>(value[i]) - update);
    }
    if (p.clamped) {
      for (auto& x : value.data()) x = std::clamp(x, p.lower, p.upper);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  ag::zero_grads(params_);
}

double learning_rate(int epoch, double base, int halve_every) {
  if (epoch < 0 || halve_every < 1) throw std::invalid_argument("learning_rate: bad schedule position");
  return base * std::pow(0.5, epoch / halve_every);
}

template class Adam<float>;
template class Adam<double>;

}  // namespace freeseed::optim
