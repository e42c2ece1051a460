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

#ifndef KDCTC_DECODE_DECODE_HPP
#define KDCTC_DECODE_DECODE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/ctc/posterior.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/math.hpp"

namespace kdctc::decode {

using ctc::collapse;
using ctc::LabelSequence;
using ctc::PosteriorMatrix;

struct DecodeConfig {
  int beam_width = 100;
};

/// Per-frame argmax, lowest index on ties.
using SpikeSequence = std::vector<int>;

inline SpikeSequence spikes(const PosteriorMatrix& o) {
  SpikeSequence out(o.frames());
  for (std::size_t t = 0; t < o.frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < o.symbols(); ++k)
      if (o(k, t) > o(best, t)) best = k;
    out[t] = static_cast<int>(best);
  }
  return out;
}

/// Argmax per row of an N x |S| logit (or probability) matrix. Softmax and
/// tempering preserve the argmax, so this equals spikes() of the posteriors.
inline SpikeSequence spikes_from_rows(const Tensor& rows) {
  SpikeSequence out(rows.rows());
  for (std::size_t t = 0; t < rows.rows(); ++t) out[t] = static_cast<int>(argmax(rows.row(t)));
  return out;
}

inline LabelSequence best_path_decode(const PosteriorMatrix& o, int blank) {
  return collapse(spikes(o), blank);
}

struct Hypothesis {
  LabelSequence label;
  double log_prob = kNegInf;
};

namespace detail {

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (int x : v) h = (h ^ static_cast<std::size_t>(x + 1)) * 1099511628211ULL;
    return h;
  }
};

struct PrefixScore {
  double blank = kNegInf;      // paths ending in blank
  double non_blank = kNegInf;  // paths ending in the prefix's last symbol
  double total() const { return log_add(blank, non_blank); }
};

// Higher probability first; equal scores fall back to the lexicographically
// smaller (lower symbol index) prefix.
inline bool better(const std::pair<std::vector<int>, PrefixScore>& a,
                   const std::pair<std::vector<int>, PrefixScore>& b) {
  const double ta = a.second.total(), tb = b.second.total();
  if (ta != tb) return ta > tb;
  return a.first < b.first;
}

}  // namespace detail

/// Prefix beam search. Paths collapsing to the same prefix are merged, with
/// blank-ending and symbol-ending mass kept apart so repeats are handled.
/// Returns the surviving hypotheses, best first.
inline std::vector<Hypothesis> beam_search(const PosteriorMatrix& o, int blank,
                                           const DecodeConfig& cfg = {}) {
  if (cfg.beam_width < 1) throw ConfigError("beam_search: beam_width must be >= 1");
  using Entry = std::pair<std::vector<int>, detail::PrefixScore>;
  std::vector<Entry> beam{{{}, {0.0, kNegInf}}};
  const std::size_t n_sym = o.symbols();
  std::vector<double> lp(n_sym);
  std::unordered_map<std::vector<int>, detail::PrefixScore, detail::VecHash> next;

  for (std::size_t t = 0; t < o.frames(); ++t) {
    for (std::size_t k = 0; k < n_sym; ++k) lp[k] = o(k, t) > 0.0 ? std::log(o(k, t)) : kNegInf;
    next.clear();
    for (const auto& [prefix, score] : beam) {
      const double total = score.total();
      auto& same = next[prefix];
      same.blank = log_add(same.blank, total + lp[blank]);
      const int last = prefix.empty() ? -1 : prefix.back();
      for (std::size_t k = 0; k < n_sym; ++k) {
        const int c = static_cast<int>(k);
        if (c == blank || lp[k] == kNegInf) continue;
        std::vector<int> extended = prefix;
        extended.push_back(c);
        auto& ext = next[extended];
        if (c == last) {
          // A repeat only extends the prefix after a blank; otherwise it merges.
          ext.non_blank = log_add(ext.non_blank, score.blank + lp[k]);
          auto& stay = next[prefix];
          stay.non_blank = log_add(stay.non_blank, score.non_blank + lp[k]);
        } else {
          ext.non_blank = log_add(ext.non_blank, total + lp[k]);
        }
      }
    }
    beam.assign(next.begin(), next.end());
    const std::size_t keep = std::min(beam.size(), static_cast<std::size_t>(cfg.beam_width));
    std::partial_sort(beam.begin(), beam.begin() + static_cast<std::ptrdiff_t>(keep), beam.end(),
                      detail::better);
    beam.resize(keep);
  }
  std::vector<Hypothesis> out;
  out.reserve(beam.size());
  for (auto& [prefix, score] : beam) out.push_back({{std::move(prefix)}, score.total()});
  return out;
}

inline LabelSequence beam_search_decode(const PosteriorMatrix& o, int blank,
                                        const DecodeConfig& cfg = {}) {
  return beam_search(o, blank, cfg).front().label;
}

/// Levenshtein distance with unit costs.
inline std::size_t edit_distance(const LabelSequence& hyp, const LabelSequence& ref) {
  const auto& a = hyp.indices;
  const auto& b = ref.indices;
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Corpus-pooled character error rate in percent.
inline double cer(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs) {
  if (refs.empty()) throw DataError("cer: empty reference corpus");
  if (hyps.size() != refs.size()) throw DataError("cer: hypothesis/reference count mismatch");
  std::size_t errors = 0, total = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    errors += edit_distance(hyps[i], refs[i]);
    total += refs[i].size();
  }
  if (total == 0) throw DataError("cer: references contain no characters");
  return 100.0 * static_cast<double>(errors) / static_cast<double>(total);
}

struct CsoReport {
  std::string model_a;
  std::string model_b;
  std::vector<double> per_utterance;  // fractions in [0, 1]
  double mean = 0.0;                  // fraction; x100 for percent
};

/// Characters' spikes overlap: fraction of frames whose argmax symbols agree
/// (blank frames included), averaged over utterances.
inline CsoReport cso(const std::vector<SpikeSequence>& a, const std::vector<SpikeSequence>& b,
                     std::string model_a = "a", std::string model_b = "b") {
  if (a.size() != b.size()) throw AlignmentError("cso: different utterance counts");
  if (a.empty()) throw DataError("cso: no utterances");
  CsoReport r{std::move(model_a), std::move(model_b), {}, 0.0};
  r.per_utterance.reserve(a.size());
  for (std::size_t u = 0; u < a.size(); ++u) {
    if (a[u].size() != b[u].size()) {
      throw AlignmentError("cso: utterance " + std::to_string(u) + " has " +
                           std::to_string(a[u].size()) + " vs " + std::to_string(b[u].size()) +
                           " frames");
    }
    if (a[u].empty()) throw DataError("cso: empty spike sequence");
    std::size_t agree = 0;
    for (std::size_t t = 0; t < a[u].size(); ++t) agree += a[u][t] == b[u][t];
    r.per_utterance.push_back(static_cast<double>(agree) / static_cast<double>(a[u].size()));
  }
  double s = 0.0;
  for (double f : r.per_utterance) s += f;
  r.mean = s / static_cast<double>(r.per_utterance.size());
  return r;
}

}  // namespace kdctc::decode

#endif  // KDCTC_DECODE_DECODE_HPP
