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

#ifndef KDCTC_CTC_CTC_LOSS_HPP
#define KDCTC_CTC_CTC_LOSS_HPP

// Connectionist temporal classification: negative log of the summed
// probability of every frame path that collapses to the label. Computed by a
// log-domain forward-backward pass over the blank-augmented label
// (blank, l1, blank, l2, ..., blank). The brute-force enumeration below is
// the test oracle for the dynamic program.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/ctc/posterior.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/math.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::ctc {

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;  // same shape as the logits
};

/// Loss and its exact gradient w.r.t. pre-softmax logits (N x |S|).
inline LossAndGrad ctc_loss_grad(const Tensor& logits, const LabelSequence& label, int blank) {
  const std::size_t n_frames = logits.rows();
  const std::size_t n_sym = logits.cols();
  if (n_frames == 0) throw ShapeError("ctc: no frames");
  if (blank < 0 || static_cast<std::size_t>(blank) >= n_sym) throw ConfigError("ctc: bad blank");
  for (int l : label.indices) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_sym) throw DataError("ctc: label out of range");
    if (l == blank) throw DataError("ctc: blank inside label");
  }
  if (n_frames < min_frames(label)) {
    throw InfeasibleAlignmentError("ctc: " + std::to_string(n_frames) +
                                   " frames cannot emit a label needing " +
                                   std::to_string(min_frames(label)));
  }
  if (!logits.all_finite()) throw NumericError("ctc: non-finite logits");

  const Tensor lp = log_softmax_rows(logits);
  const std::size_t states = 2 * label.size() + 1;
  std::vector<int> ext(states, blank);
  for (std::size_t i = 0; i < label.size(); ++i) ext[2 * i + 1] = label.indices[i];
  // The skip s-2 -> s is allowed into a non-blank that differs from ext[s-2].
  auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  Tensor alpha({n_frames, states}, kNegInf);
  Tensor beta({n_frames, states}, kNegInf);

  alpha(0, 0) = lp(0, blank);
  if (states > 1) alpha(0, 1) = lp(0, ext[1]);
  for (std::size_t t = 1; t < n_frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[s]);
    }
  }

  // beta(t, s): log-probability of emitting frames t+1.. given state s at t.
  beta(n_frames - 1, states - 1) = 0.0;
  if (states > 1) beta(n_frames - 1, states - 2) = 0.0;
  for (std::size_t t = n_frames - 1; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, ext[s]);
      if (s + 1 < states) b = log_add(b, beta(t + 1, s + 1) + lp(t + 1, ext[s + 1]));
      if (s + 2 < states && can_skip(s + 2)) {
        b = log_add(b, beta(t + 1, s + 2) + lp(t + 1, ext[s + 2]));
      }
      beta(t, s) = b;
    }
  }

  double log_p = alpha(n_frames - 1, states - 1);
  if (states > 1) log_p = log_add(log_p, alpha(n_frames - 1, states - 2));
  if (!std::isfinite(log_p)) throw NumericError("ctc: label probability underflowed");

  LossAndGrad out{-log_p, Tensor::matrix(n_frames, n_sym)};
  std::vector<double> occ(n_sym);
  for (std::size_t t = 0; t < n_frames; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (std::size_t s = 0; s < states; ++s) {
      const double g = alpha(t, s) + beta(t, s);
      if (g != kNegInf) occ[ext[s]] = log_add(occ[ext[s]], g);
    }
    for (std::size_t k = 0; k < n_sym; ++k) {
      const double post = occ[k] == kNegInf ? 0.0 : std::exp(occ[k] - log_p);
      out.grad(t, k) = std::exp(lp(t, k)) - post;
    }
  }
  return out;
}

inline LossAndGrad ctc_loss_grad(const Tensor& logits, const LabelSequence& label,
                                 const Alphabet& alphabet) {
  if (static_cast<int>(logits.cols()) != alphabet.size()) {
    throw ShapeError("ctc: logit width differs from alphabet size");
  }
  return ctc_loss_grad(logits, label, alphabet.blank());
}

inline constexpr std::uint64_t kBruteForceLimit = 10'000'000;

/// Sums Prod_t O(a(t), t) over all |S|^N paths a that collapse to `label`.
/// Returns -log of the sum (+inf when no path qualifies).
inline double brute_force_ctc(const PosteriorMatrix& o, const LabelSequence& label, int blank) {
  const std::size_t n_sym = o.symbols(), n_frames = o.frames();
  double paths = 1.0;
  for (std::size_t t = 0; t < n_frames; ++t) paths *= static_cast<double>(n_sym);
  if (paths > static_cast<double>(kBruteForceLimit)) {
    throw GuardError("brute_force_ctc: |S|^N exceeds 1e7");
  }
  std::vector<int> path(n_frames, 0);
  double total = 0.0;
  while (true) {
    if (collapse(path, blank) == label) {
      double p = 1.0;
      for (std::size_t t = 0; t < n_frames; ++t) p *= o(static_cast<std::size_t>(path[t]), t);
      total += p;
    }
    std::size_t t = 0;
    while (t < n_frames && ++path[t] == static_cast<int>(n_sym)) path[t++] = 0;
    if (t == n_frames) break;
  }
  return total > 0.0 ? -std::log(total) : std::numeric_limits<double>::infinity();
}

}  // namespace kdctc::ctc

#endif  // KDCTC_CTC_CTC_LOSS_HPP
