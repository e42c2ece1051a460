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

#ifndef KDCTC_PIPELINE_TRAIN_HPP
#define KDCTC_PIPELINE_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/ctc/ctc_loss.hpp"
#include "kdctc/decode/decode.hpp"
#include "kdctc/distill/distill.hpp"
#include "kdctc/io/container.hpp"
#include "kdctc/model/network.hpp"
#include "kdctc/model/params.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/rng.hpp"
#include "kdctc/pipeline/adam.hpp"
#include "kdctc/pipeline/dataset.hpp"

namespace kdctc::pipeline {

enum class LossKind { ctc, distill, kl_adapt };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::ctc: return "ctc";
    case LossKind::distill: return "distill";
    case LossKind::kl_adapt: return "kl_adapt";
  }
  return "?";
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "ctc") return LossKind::ctc;
  if (s == "distill") return LossKind::distill;
  if (s == "kl_adapt") return LossKind::kl_adapt;
  throw ConfigError("unknown loss kind '" + s + "'");
}

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_epochs = 20;
  int patience = 3;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::ctc;
  distill::DistillConfig distill;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (loss != LossKind::ctc) distill.validate();
  }

  nlohmann::json to_json() const {
    return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
            {"max_epochs", max_epochs},       {"patience", patience},
            {"grad_clip_norm", grad_clip_norm}};
  }

  /// Reads the optimizer fields; loss kind, distill config and seed are set
  /// per stage by the caller.
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base) {
    try {
      base.learning_rate = j.value("learning_rate", base.learning_rate);
      base.batch_size = j.value("batch_size", base.batch_size);
      base.max_epochs = j.value("max_epochs", base.max_epochs);
      base.patience = j.value("patience", base.patience);
      base.grad_clip_norm = j.value("grad_clip_norm", base.grad_clip_norm);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("train config: ") + e.what());
    }
    base.validate();
    return base;
  }
};

/// Soft targets keyed by utterance id.
using TargetMap = std::unordered_map<std::string, distill::SoftTargets>;

/// Stops after `patience` consecutive observations without a strict
/// improvement; remembers the best one (earliest on ties).
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when `metric` is a new best.
  bool observe(double metric) {
    ++epoch_;
    if (metric < best_) {
      best_ = metric;
      best_epoch_ = epoch_;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-utterance objective
  double dev_cer = 0.0;
};

struct TrainResult {
  model::ModelParams params;  // best-dev checkpoint
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_dev_cer = 0.0;
  std::size_t skipped = 0;  // infeasible utterances left out
  std::size_t steps = 0;
};

/// Objective and logit gradient of one utterance.
inline ctc::LossAndGrad utterance_loss(const Tensor& logits, const Example& ex, int blank,
                                       const TrainConfig& cfg, const TargetMap* targets) {
  if (cfg.loss == LossKind::ctc) return ctc::ctc_loss_grad(logits, ex.label, blank);
  const auto it = targets->find(ex.id);
  if (it == targets->end()) throw DataError("train: no soft targets for " + ex.id);
  if (cfg.loss == LossKind::distill) {
    return distill::combined_loss(logits, it->second, ex.label, blank, cfg.distill);
  }
  return distill::kl_adaptation_loss(logits, it->second, ex.label, blank, cfg.distill);
}

inline std::vector<ctc::LabelSequence> greedy_decode_all(const model::ModelParams& p,
                                                         const ExampleRefs& examples, int blank) {
  std::vector<ctc::LabelSequence> out;
  out.reserve(examples.size());
  for (const Example* e : examples) {
    const Tensor logits = model::infer(p, e->features);
    out.push_back(ctc::collapse(decode::spikes_from_rows(logits), blank));
  }
  return out;
}

inline double greedy_cer(const model::ModelParams& p, const ExampleRefs& examples, int blank) {
  std::vector<ctc::LabelSequence> refs;
  for (const Example* e : examples) refs.push_back(e->label);
  return decode::cer(greedy_decode_all(p, examples, blank), refs);
}

/// Mini-batch training with early stopping on dev CER (greedy decoding).
/// Each step averages the per-utterance gradients of `batch_size`
/// utterances, clips the global norm and applies Adam.
inline TrainResult train(model::ModelParams init, const ExampleRefs& train_set,
                         const ExampleRefs& dev_set, int blank, const TrainConfig& cfg,
                         const TargetMap* targets = nullptr) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty training set");
  if (dev_set.empty()) throw DataError("train: empty dev set");
  if (cfg.loss != LossKind::ctc) {
    if (targets == nullptr) throw DataError("train: distillation requires soft targets");
    for (const Example* e : train_set) {
      if (e->feasible && !targets->contains(e->id)) {
        throw DataError("train: no soft targets for " + e->id);
      }
    }
  }

  TrainResult result;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (train_set[i]->feasible) {
      order.push_back(i);
    } else {
      ++result.skipped;
    }
  }
  if (order.empty()) throw DataError("train: every training utterance is infeasible");

  model::ModelParams params = std::move(init);
  model::ModelParams grads = model::ModelParams::zeros_like(params);
  AdamState adam(params.size());
  SeededRng rng(cfg.seed);
  EarlyStopping stopper(cfg.patience);
  result.params = params;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      auto& g = grads.mutable_flat().values();
      std::fill(g.begin(), g.end(), 0.0);
      std::size_t used = 0;
      for (std::size_t b = start; b < end; ++b) {
        const Example& ex = *train_set[order[b]];
        auto fr = model::forward(params, ex.features);
        ctc::LossAndGrad lg;
        try {
          lg = utterance_loss(fr.logits, ex, blank, cfg, targets);
        } catch (const InfeasibleAlignmentError&) {
          ++result.skipped;
          continue;
        }
        if (!std::isfinite(lg.loss)) throw NumericError("train: non-finite loss on " + ex.id);
        model::backward_accumulate(params, fr.trace, lg.grad, grads);
        loss_sum += lg.loss;
        ++counted;
        ++used;
      }
      if (used == 0) continue;
      const double scale = 1.0 / static_cast<double>(used);
      for (double& v : g) v *= scale;
      clip_global_norm(g, cfg.grad_clip_norm);
      adam_step(params.mutable_flat().values(), g, adam, cfg.learning_rate);
      ++result.steps;
    }
    const double dev = greedy_cer(params, dev_set, blank);
    result.history.push_back({epoch, counted ? loss_sum / static_cast<double>(counted) : 0.0, dev});
    if (stopper.observe(dev)) result.params = params;
    if (stopper.should_stop()) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_dev_cer = stopper.best();
  return result;
}

/// Tempered teacher posteriors for every example.
inline TargetMap gen_soft_targets(const model::ModelParams& teacher, const ExampleRefs& examples,
                                  double temperature, const std::string& teacher_id) {
  TargetMap out;
  for (const Example* e : examples) {
    out.emplace(e->id,
                distill::make_soft_targets(model::infer(teacher, e->features), temperature, teacher_id));
  }
  return out;
}

/// One file per utterance: <dir>/<id>.acdm holding "soft_targets", plus a
/// JSON sidecar with the teacher id and temperature.
inline void write_soft_targets(const std::filesystem::path& dir, const TargetMap& targets) {
  std::map<std::string, const distill::SoftTargets*> sorted;
  for (const auto& [id, t] : targets) sorted[id] = &t;
  for (const auto& [id, t] : sorted) {
    const auto path = dir / (id + ".acdm");
    io::write_container(path, {{"soft_targets", t->probs}});
    io::write_json(io::sidecar_path(path),
                   {{"utterance", id}, {"teacher_id", t->teacher_id}, {"temperature", t->temperature}});
  }
}

inline TargetMap read_soft_targets(const std::filesystem::path& dir) {
  TargetMap out;
  if (!std::filesystem::is_directory(dir)) throw DataError("no soft-target directory " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".acdm") continue;
    const auto meta = io::read_json(io::sidecar_path(entry.path()));
    const auto bundle = io::read_container(entry.path());
    out.emplace(meta.at("utterance").get<std::string>(),
                distill::SoftTargets{io::find_tensor(bundle, "soft_targets"),
                                     meta.at("teacher_id").get<std::string>(),
                                     meta.at("temperature").get<double>()});
  }
  return out;
}

}  // namespace kdctc::pipeline

#endif  // KDCTC_PIPELINE_TRAIN_HPP
