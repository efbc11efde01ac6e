#pragma once

#include <memory>
#include <string>

#include "freeseed/autograd.hpp"
#include "freeseed/geometry.hpp"

namespace freeseed::losses {

using ag::Var;

enum class Norm { l2, l1 };

const char* norm_name(Norm n);
Norm parse_norm(const std::string& name);

/// Mean over all pixels of squared (l2) or absolute (l1) error.
template <typename T>
Var<T> loss_art(const Var<T>& predicted, const Tensor<T>& target, Norm norm = Norm::l2);

/// Error restricted to mask == 1, divided by the mask count; 0 for an empty mask.
template <typename T>
Var<T> loss_mask(const Var<T>& refined, const Tensor<T>& full, const Tensor<T>& mask, Norm norm = Norm::l2);

/// Mean over all pixels of the error weighted by (1 + mask).
template <typename T>
Var<T> loss_one_plus_mask(const Var<T>& predicted, const Tensor<T>& target, const Tensor<T>& mask,
                          Norm norm = Norm::l2);

/// l_art + alpha * l_mask; alpha must be positive.
template <typename T>
Var<T> loss_total(const Var<T>& l_art, const Var<T>& l_mask, double alpha);
double loss_total(double l_art, double l_mask, double alpha);

/// Mean absolute error over unmeasured entries (mask == 0); 0 when every view is measured.
template <typename T>
Var<T> loss_sino(const Var<T>& predicted, const Tensor<T>& full, const Tensor<T>& mask);

/// Mean absolute error between the FBP of `predicted` [N,1,V,D] and `full` [N,1,H,W].
template <typename T>
Var<T> loss_rc(const Var<T>& predicted, const Tensor<T>& full, std::shared_ptr<const FbpOperator> fbp);

/// Same, also returning the reconstruction that was compared.
template <typename T>
Var<T> loss_rc(const Var<T>& predicted, const Tensor<T>& full, std::shared_ptr<const FbpOperator> fbp,
               Var<T>& reconstruction);

}  // namespace freeseed::losses
