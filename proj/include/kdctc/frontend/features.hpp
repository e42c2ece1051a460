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

#ifndef KDCTC_FRONTEND_FEATURES_HPP
#define KDCTC_FRONTEND_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::frontend {

enum class Provenance { raw, stacked, decimated, synthetic };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::raw: return "raw";
    case Provenance::stacked: return "stacked";
    case Provenance::decimated: return "decimated";
    case Provenance::synthetic: return "synthetic";
  }
  return "?";
}

/// N x D frames plus where they are in the pipeline.
struct FeatureSequence {
  Tensor frames;
  double frame_shift_ms = 10.0;
  Provenance provenance = Provenance::raw;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

struct FrontendConfig {
  int left_context = 4;
  int right_context = 4;
  int keep_every = 3;
  bool normalize = false;  // per-utterance mean/variance; off by default
};

/// Concatenates frames t-left .. t+right for every t, repeating the boundary
/// frames past either edge.
inline FeatureSequence stack_context(const FeatureSequence& f, int left = 4, int right = 4) {
  if (f.provenance != Provenance::raw && f.provenance != Provenance::synthetic) {
    throw ConfigError("stack_context: expects raw features, got " + to_string(f.provenance));
  }
  if (left < 0 || right < 0) throw ConfigError("stack_context: negative context");
  const std::size_t n = f.num_frames(), d = f.dim();
  const std::size_t width = static_cast<std::size_t>(left + right + 1);
  Tensor out = Tensor::matrix(n, d * width);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  for (std::size_t t = 0; t < n; ++t) {
    double* dst = out.data() + t * d * width;
    for (int off = -left; off <= right; ++off) {
      const auto src = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) + off, 0, last);
      const auto row = f.frames.row(static_cast<std::size_t>(src));
      std::copy(row.begin(), row.end(), dst);
      dst += d;
    }
  }
  return {std::move(out), f.frame_shift_ms, Provenance::stacked};
}

/// Keeps frames 0, k, 2k, ...
inline FeatureSequence decimate(const FeatureSequence& f, int keep_every = 3) {
  if (f.provenance != Provenance::stacked) {
    throw ConfigError("decimate: expects stacked features, got " + to_string(f.provenance));
  }
  if (keep_every < 1) throw ConfigError("decimate: keep_every must be >= 1");
  const auto k = static_cast<std::size_t>(keep_every);
  const std::size_t n = f.num_frames(), d = f.dim();
  const std::size_t kept = (n + k - 1) / k;
  Tensor out = Tensor::matrix(kept, d);
  for (std::size_t i = 0; i < kept; ++i) {
    const auto row = f.frames.row(i * k);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return {std::move(out), f.frame_shift_ms * keep_every, Provenance::decimated};
}

inline void normalize_inplace(FeatureSequence& f) {
  const std::size_t n = f.num_frames(), d = f.dim();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += f.frames(t, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t) var += (f.frames(t, j) - mean) * (f.frames(t, j) - mean);
    const double inv_sd = 1.0 / std::sqrt(var / static_cast<double>(n) + 1e-10);
    for (std::size_t t = 0; t < n; ++t) f.frames(t, j) = (f.frames(t, j) - mean) * inv_sd;
  }
}

/// raw -> (normalize) -> stack -> decimate.
inline FeatureSequence apply_frontend(FeatureSequence raw, const FrontendConfig& cfg) {
  if (raw.frames.rank() != 2 || raw.num_frames() == 0) {
    throw DataError("frontend: empty feature sequence");
  }
  if (cfg.normalize) normalize_inplace(raw);
  return decimate(stack_context(raw, cfg.left_context, cfg.right_context), cfg.keep_every);
}

}  // namespace kdctc::frontend

#endif  // KDCTC_FRONTEND_FEATURES_HPP
