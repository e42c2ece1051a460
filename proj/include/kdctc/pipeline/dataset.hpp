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

#ifndef KDCTC_PIPELINE_DATASET_HPP
#define KDCTC_PIPELINE_DATASET_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "kdctc/corpus/corpus.hpp"
#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/frontend/features.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::pipeline {

/// One utterance after the frontend: decimated features ready for the model.
struct Example {
  std::string id;
  std::string speaker;
  std::string accent;
  corpus::Split split = corpus::Split::train;
  ctc::LabelSequence label;
  Tensor features;  // N x input_dim
  bool feasible = true;  // N >= min_frames(label)
};

using ExampleRefs = std::vector<const Example*>;

struct Dataset {
  ctc::Alphabet alphabet = ctc::Alphabet::standard();
  std::vector<std::string> accents;
  std::vector<Example> examples;
  std::size_t input_dim = 0;

  /// Examples of `split` whose accent is in `accent_subset` (all if empty),
  /// in corpus order.
  ExampleRefs select(corpus::Split split, const std::vector<std::string>& accent_subset = {}) const {
    ExampleRefs out;
    for (const auto& e : examples) {
      if (e.split != split) continue;
      if (!accent_subset.empty() &&
          std::find(accent_subset.begin(), accent_subset.end(), e.accent) == accent_subset.end()) {
        continue;
      }
      out.push_back(&e);
    }
    return out;
  }
};

inline Dataset build_dataset(const corpus::Corpus& c, const frontend::FrontendConfig& fe) {
  Dataset d;
  d.alphabet = c.alphabet;
  d.accents = c.accent_names();
  d.examples.reserve(c.utterances.size());
  for (const auto& u : c.utterances) {
    Example e{u.id, u.speaker, u.accent, u.split, u.transcript, {}, true};
    e.features = frontend::apply_frontend(u.features, fe).frames;
    e.feasible = e.features.rows() >= ctc::min_frames(e.label);
    d.input_dim = e.features.cols();
    d.examples.push_back(std::move(e));
  }
  return d;
}

}  // namespace kdctc::pipeline

#endif  // KDCTC_PIPELINE_DATASET_HPP
