// Copyright 2026 The kdctc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KDCTC_NUMCORE_GRADCHECK_HPP
#define KDCTC_NUMCORE_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc {

/// Compares `analytic_grad` against central differences of `loss_fn` around
/// `params`. Returns max_i |a_i - fd_i| / max(|a_i|, |fd_i|, 1e-8).
inline double finite_diff_check(const std::function<double(const Tensor&)>& loss_fn,
                                const Tensor& params, const Tensor& analytic_grad,
                                double step = 1e-5) {
  if (!(step >= 1e-6 && step <= 1e-3)) {
    throw ConfigError("finite_diff_check: step must lie in [1e-6, 1e-3]");
  }
  if (params.dims() != analytic_grad.dims()) {
    throw ShapeError("finite_diff_check: gradient shape differs from params");
  }
  Tensor probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = loss_fn(probe);
    probe[i] = orig - step;
    const double down = loss_fn(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_check: non-finite loss");
    }
    const double fd = (up - down) / (2.0 * step);
    const double a = analytic_grad[i];
    const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(a - fd) / denom);
  }
  return worst;
}

}  // namespace kdctc

#endif  // KDCTC_NUMCORE_GRADCHECK_HPP
