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

#ifndef KDCTC_CTC_POSTERIOR_HPP
#define KDCTC_CTC_POSTERIOR_HPP

#include <cmath>
#include <string>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/math.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::ctc {

/// |S| x N matrix of per-frame symbol probabilities; each column sums to one.
class PosteriorMatrix {
 public:
  explicit PosteriorMatrix(Tensor probs) : probs_(std::move(probs)) {
    if (probs_.rank() != 2 || probs_.cols() == 0 || probs_.rows() == 0) {
      throw ShapeError("posterior matrix must be a non-empty |S| x N matrix");
    }
    for (std::size_t t = 0; t < frames(); ++t) {
      double s = 0.0;
      for (std::size_t k = 0; k < symbols(); ++k) {
        const double p = probs_(k, t);
        if (!(p >= 0.0 && p <= 1.0)) throw NumericError("posterior entry outside [0,1]");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) {
        throw NumericError("posterior column " + std::to_string(t) + " sums to " +
                           std::to_string(s));
      }
    }
  }

  /// Softmax of an N x |S| logit matrix, transposed into column form.
  static PosteriorMatrix from_logits(const Tensor& logits) {
    return PosteriorMatrix(softmax_rows(logits).transposed());
  }

  /// From N x |S| row-stochastic probabilities (e.g. softmax output).
  static PosteriorMatrix from_rows(const Tensor& rows) { return PosteriorMatrix(rows.transposed()); }

  std::size_t symbols() const { return probs_.rows(); }
  std::size_t frames() const { return probs_.cols(); }
  double operator()(std::size_t k, std::size_t t) const { return probs_(k, t); }
  const Tensor& tensor() const noexcept { return probs_; }

 private:
  Tensor probs_;
};

}  // namespace kdctc::ctc

#endif  // KDCTC_CTC_POSTERIOR_HPP
