#pragma once

#include <memory>

#include "freeseed/autograd.hpp"
#include "freeseed/geometry.hpp"

namespace freeseed {

/// Differentiable FBP: [N, 1, views, detectors] -> [N, 1, H, W]. The backward
/// pass applies the operator's exact adjoint; arithmetic runs in double.
template <typename T>
ag::Var<T> fbp_apply(const ag::Var<T>& sinograms, std::shared_ptr<const FbpOperator> op);

}  // namespace freeseed
