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

#ifndef KDCTC_PIPELINE_EVALUATE_HPP
#define KDCTC_PIPELINE_EVALUATE_HPP

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/ctc/posterior.hpp"
#include "kdctc/decode/decode.hpp"
#include "kdctc/model/network.hpp"
#include "kdctc/pipeline/dataset.hpp"

namespace kdctc::pipeline {

struct DecodeRecord {
  std::string id;
  std::string accent;
  ctc::LabelSequence hyp;
  ctc::LabelSequence ref;
  std::size_t edit_distance = 0;
};

struct EvalResult {
  std::map<std::string, double> per_accent;  // CER %
  double average = 0.0;  // unweighted mean over accents
  std::vector<DecodeRecord> records;
};

/// Decodes every example (beam search unless beam_width <= 0, which selects
/// best-path) and pools CER per accent.
inline EvalResult evaluate(const model::ModelParams& p, const ExampleRefs& examples, int blank,
                           const decode::DecodeConfig& cfg = {}) {
  EvalResult r;
  std::map<std::string, std::vector<ctc::LabelSequence>> hyps, refs;
  for (const Example* e : examples) {
    const auto post = ctc::PosteriorMatrix::from_logits(model::infer(p, e->features));
    auto hyp = cfg.beam_width > 0 ? decode::beam_search_decode(post, blank, cfg)
                                  : decode::best_path_decode(post, blank);
    const auto ed = decode::edit_distance(hyp, e->label);
    hyps[e->accent].push_back(hyp);
    refs[e->accent].push_back(e->label);
    r.records.push_back({e->id, e->accent, std::move(hyp), e->label, ed});
  }
  if (hyps.empty()) throw DataError("evaluate: no examples");
  double sum = 0.0;
  for (const auto& [accent, h] : hyps) {
    r.per_accent[accent] = decode::cer(h, refs[accent]);
    sum += r.per_accent[accent];
  }
  r.average = sum / static_cast<double>(r.per_accent.size());
  return r;
}

/// JSON-lines rendering: {id, hyp, ref, edit_distance} per utterance.
inline std::string decode_jsonl(const EvalResult& r, const ctc::Alphabet& alphabet) {
  std::string out;
  for (const auto& rec : r.records) {
    out += nlohmann::json{{"id", rec.id},
                          {"hyp", rec.hyp.text(alphabet)},
                          {"ref", rec.ref.text(alphabet)},
                          {"edit_distance", rec.edit_distance}}
               .dump();
    out += '\n';
  }
  return out;
}

inline std::vector<decode::SpikeSequence> model_spikes(const model::ModelParams& p,
                                                       const ExampleRefs& examples) {
  std::vector<decode::SpikeSequence> out;
  out.reserve(examples.size());
  for (const Example* e : examples) out.push_back(decode::spikes_from_rows(model::infer(p, e->features)));
  return out;
}

inline decode::CsoReport cso_between(const model::ModelParams& a, const model::ModelParams& b,
                                     const ExampleRefs& examples, const std::string& id_a,
                                     const std::string& id_b) {
  return decode::cso(model_spikes(a, examples), model_spikes(b, examples), id_a, id_b);
}

inline nlohmann::json cso_json(const decode::CsoReport& r) {
  return {{"pair", {r.model_a, r.model_b}}, {"per_utterance", r.per_utterance}, {"mean", r.mean}};
}

}  // namespace kdctc::pipeline

#endif  // KDCTC_PIPELINE_EVALUATE_HPP
