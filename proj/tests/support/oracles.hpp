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

#ifndef KDCTC_TESTS_SUPPORT_ORACLES_HPP
#define KDCTC_TESTS_SUPPORT_ORACLES_HPP

// Independent reference implementations used only by tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/ctc/posterior.hpp"
#include "kdctc/numcore/rng.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::testing {

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Tensor random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

/// Calls fn(path) for every length-n path over `symbols` symbols.
inline void for_each_path(std::size_t n, std::size_t symbols,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> path(n, 0);
  while (true) {
    fn(path);
    std::size_t i = 0;
    while (i < n && ++path[i] == static_cast<int>(symbols)) path[i++] = 0;
    if (i == n) return;
  }
}

inline double path_prob(const ctc::PosteriorMatrix& o, const std::vector<int>& path) {
  double p = 1.0;
  for (std::size_t t = 0; t < path.size(); ++t) p *= o(static_cast<std::size_t>(path[t]), t);
  return p;
}

/// Total probability of every reachable labeling, by summing over all paths.
inline std::map<std::vector<int>, double> labeling_masses(const ctc::PosteriorMatrix& o, int blank) {
  std::map<std::vector<int>, double> mass;
  for_each_path(o.frames(), o.symbols(), [&](const std::vector<int>& path) {
    mass[ctc::collapse(path, blank).indices] += path_prob(o, path);
  });
  return mass;
}

struct ExhaustiveBest {
  std::vector<int> label;
  double prob = 0.0;
};

/// Most probable labeling; ties go to the lexicographically smallest.
inline ExhaustiveBest exhaustive_best(const ctc::PosteriorMatrix& o, int blank) {
  ExhaustiveBest best{{}, -1.0};
  for (const auto& [label, p] : labeling_masses(o, blank)) {
    if (p > best.prob) best = {label, p};  // map order: smaller labels seen first
  }
  return best;
}

/// Random column-stochastic |S| x N matrix with entries bounded away from 0.
inline ctc::PosteriorMatrix random_posteriors(SeededRng& rng, std::size_t symbols, std::size_t frames,
                                              double sharpness = 1.0) {
  Tensor logits = random_matrix(rng, frames, symbols, sharpness);
  return ctc::PosteriorMatrix::from_logits(logits);
}

/// Every label over `letters` (non-blank indices) with length <= max_len.
inline std::vector<ctc::LabelSequence> all_labels(const std::vector<int>& letters, std::size_t max_len) {
  std::vector<ctc::LabelSequence> out{{}};
  std::vector<ctc::LabelSequence> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<ctc::LabelSequence> next;
    for (const auto& l : frontier)
      for (int c : letters) {
        auto e = l;
        e.indices.push_back(c);
        next.push_back(e);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace kdctc::testing

#endif  // KDCTC_TESTS_SUPPORT_ORACLES_HPP
