#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "freeseed/autograd.hpp"

namespace freeseed::optim {

struct AdamOptions {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Parameters without a
/// gradient are skipped; clamped parameters are projected after each step.
template <typename T>
class Adam {
 public:
  explicit Adam(ag::ParameterList<T> params, AdamOptions options = {});

  void step(double lr);
  void zero_grad();

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  const ag::ParameterList<T>& parameters() const { return params_; }

  /// Moment buffers keyed by parameter name ("m" and "v").
  std::map<std::string, Tensor<T>>& first_moments() { return m_; }
  std::map<std::string, Tensor<T>>& second_moments() { return v_; }
  const std::map<std::string, Tensor<T>>& first_moments() const { return m_; }
  const std::map<std::string, Tensor<T>>& second_moments() const { return v_; }

 private:
  ag::ParameterList<T> params_;
  AdamOptions options_;
  std::int64_t steps_ = 0;
  std::map<std::string, Tensor<T>> m_;
  std::map<std::string, Tensor<T>> v_;
};

/// base * 0.5^floor(epoch / halve_every)
double learning_rate(int epoch, double base = 1e-4, int halve_every = 10);

}  // namespace freeseed::optim
