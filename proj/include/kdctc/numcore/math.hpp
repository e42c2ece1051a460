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

#ifndef KDCTC_NUMCORE_MATH_HPP
#define KDCTC_NUMCORE_MATH_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// In-place stable softmax of one row, logits scaled by 1/temperature.
inline void softmax_inplace(std::span<double> row, double inv_temperature = 1.0) {
  double m = kNegInf;
  for (double v : row) m = std::max(m, v);
  double s = 0.0;
  for (double& v : row) {
    v = std::exp((v - m) * inv_temperature);
    s += v;
  }
  for (double& v : row) v /= s;
}

/// Row-wise softmax of an N x |S| logit matrix.
inline Tensor softmax_rows(const Tensor& logits) {
  for (double v : logits.values()) {
    if (std::isnan(v)) throw NumericError("softmax_rows: NaN logit");
    if (!std::isfinite(v)) throw NumericError("softmax_rows: non-finite logit");
  }
  Tensor out = logits;
  for (std::size_t t = 0; t < out.rows(); ++t) softmax_inplace(out.row(t));
  return out;
}

/// Row-wise log-softmax.
inline Tensor log_softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t t = 0; t < out.rows(); ++t) {
    auto r = out.row(t);
    const double lse = log_sum_exp(r);
    for (double& v : r) v -= lse;
  }
  return out;
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

}  // namespace kdctc

#endif  // KDCTC_NUMCORE_MATH_HPP
