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

#ifndef KDCTC_PIPELINE_RUNNER_HPP
#define KDCTC_PIPELINE_RUNNER_HPP

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/corpus/corpus.hpp"
#include "kdctc/decode/decode.hpp"
#include "kdctc/distill/distill.hpp"
#include "kdctc/frontend/features.hpp"
#include "kdctc/model/arch.hpp"
#include "kdctc/model/checkpoint.hpp"
#include "kdctc/model/params.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/rng.hpp"
#include "kdctc/pipeline/dataset.hpp"
#include "kdctc/pipeline/evaluate.hpp"
#include "kdctc/pipeline/plan.hpp"
#include "kdctc/pipeline/train.hpp"

namespace kdctc::pipeline {

inline constexpr double kReferenceRelativeGainPct = 20.1;

/// Everything one run needs; parsed from a single JSON file and echoed into
/// the report.
struct RunConfig {
  std::uint64_t seed = 1;
  corpus::CorpusConfig corpus;
  frontend::FrontendConfig frontend;
  nlohmann::json arch = {{"preset", "desk"}};
  TrainConfig train;
  TrainConfig adapt;  // optimizer settings for kl_adapt stages
  distill::DistillConfig distill;
  decode::DecodeConfig decode;
  ExperimentPlan plan;

  model::ArchSpec arch_spec(std::size_t input_dim, std::size_t out_dim) const {
    const std::string preset = arch.value("preset", std::string("custom"));
    if (preset == "desk") return model::ArchSpec::desk(input_dim, out_dim);
    if (preset == "full") return model::ArchSpec::full(input_dim, out_dim);
    nlohmann::json j = arch;
    j["input_dim"] = input_dim;
    j["out_dim"] = out_dim;
    return model::ArchSpec::from_json(j);
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"corpus", corpus.to_json()},
            {"frontend",
             {{"left_context", frontend.left_context},
              {"right_context", frontend.right_context},
              {"keep_every", frontend.keep_every},
              {"normalize", frontend.normalize}}},
            {"arch", arch},
            {"train", train.to_json()},
            {"adapt", adapt.to_json()},
            {"distill", distill.to_json()},
            {"decode", {{"beam_width", decode.beam_width}}},
            {"plan", plan.to_json()}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
      c.seed = j.value("seed", c.seed);
      nlohmann::json cj = j.value("corpus", nlohmann::json::object());
      if (!cj.contains("seed")) cj["seed"] = c.seed;
      c.corpus = corpus::CorpusConfig::from_json(cj);
      const auto fe = j.value("frontend", nlohmann::json::object());
      c.frontend.left_context = fe.value("left_context", c.frontend.left_context);
      c.frontend.right_context = fe.value("right_context", c.frontend.right_context);
      c.frontend.keep_every = fe.value("keep_every", c.frontend.keep_every);
      c.frontend.normalize = fe.value("normalize", c.frontend.normalize);
      c.arch = j.value("arch", c.arch);
      c.train = TrainConfig::from_json(j.value("train", nlohmann::json::object()));
      c.adapt = TrainConfig::from_json(j.value("adapt", nlohmann::json::object()), c.train);
      c.distill = distill::DistillConfig::from_json(j.value("distill", nlohmann::json::object()));
      c.decode.beam_width = j.value("decode", nlohmann::json::object()).value("beam_width", 100);
      if (c.decode.beam_width < 1) throw ConfigError("decode: beam_width must be >= 1");
      const auto pj = j.value("plan", nlohmann::json{{"preset", "standard"}});
      if (pj.contains("stages")) {
        c.plan = ExperimentPlan::from_json(pj);
      } else if (pj.value("preset", std::string("standard")) == "standard") {
        PresetOptions opt;
        opt.alignment_variants = pj.value("alignment_variants", true);
        opt.single_teacher = pj.value("single_teacher", true);
        opt.baseline_adaptation = pj.value("baseline_adaptation", opt.baseline_adaptation);
        c.plan = preset_plan(c.corpus.accents, opt);
      } else {
        throw ConfigError("plan: unknown preset");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("run config: ") + e.what());
    }
    c.plan.validate(c.corpus.accents);
    return c;
  }
};

struct StageTiming {
  std::string id;
  double seconds = 0.0;
};

struct RunOutput {
  nlohmann::json report;
  std::map<std::string, model::ModelParams> models;
  std::vector<StageTiming> timings;
};

using LogSink = std::function<void(const std::string&)>;

namespace detail {

inline std::vector<std::string> stage_accents(const Stage& s, const Dataset& d) {
  return s.accents.empty() ? d.accents : s.accents;
}

}  // namespace detail

/// Executes every stage in order, then evaluates all models on the test
/// split and assembles the report. Models are written to
/// <out_dir>/models/<id>.acdm when out_dir is given. A failing stage aborts
/// the run; the partial report so far is attached to the thrown error's
/// message via `partial` when provided.
inline RunOutput run_plan(const RunConfig& cfg, const Dataset& data,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                          const LogSink& log = {}, nlohmann::json* partial = nullptr) {
  auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  cfg.plan.validate(data.accents);
  const int blank = data.alphabet.blank();
  const auto arch = cfg.arch_spec(data.input_dim, static_cast<std::size_t>(data.alphabet.size()));

  RunOutput out;
  nlohmann::json stages_json = nlohmann::json::array();
  std::map<std::string, TargetMap> target_cache;  // teacher id -> targets

  auto targets_for = [&](const Stage& s, const ExampleRefs& examples) {
    TargetMap merged;
    for (const Example* e : examples) {
      const std::string teacher = s.teacher_for(e->accent);
      auto& cache = target_cache[teacher];
      auto it = cache.find(e->id);
      if (it == cache.end()) {
        it = cache
                 .emplace(e->id, distill::make_soft_targets(
                                     model::infer(out.models.at(teacher), e->features),
                                     cfg.distill.temperature, teacher))
                 .first;
      }
      merged.emplace(e->id, it->second);
    }
    return merged;
  };

  for (const Stage& s : cfg.plan.stages) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto accents = detail::stage_accents(s, data);
    const auto train_set = data.select(corpus::Split::train, accents);
    const auto dev_set = data.select(corpus::Split::dev, accents);

    TrainConfig tc = s.loss == LossKind::kl_adapt ? cfg.adapt : cfg.train;
    tc.seed = derive_seed(cfg.seed, "train/" + s.id);
    tc.loss = s.loss;
    tc.distill = cfg.distill;
    if (s.lambda) tc.distill.lambda = *s.lambda;

    model::ModelParams init;
    if (s.init.empty()) {
      SeededRng rng(derive_seed(cfg.seed, "init/" + s.id));
      init = model::init_params(arch, rng);
    } else {
      init = out.models.at(s.init);
    }
    TargetMap targets;
    if (s.loss != LossKind::ctc) targets = targets_for(s, train_set);

    say("stage " + s.id + " (phase " + std::to_string(s.phase) + ", " + to_string(s.loss) +
        ", teacher " + s.teacher_label() + ", " + std::to_string(train_set.size()) + " utts)");
    TrainResult r;
    try {
      r = train(std::move(init), train_set, dev_set, blank, tc, s.loss == LossKind::ctc ? nullptr : &targets);
    } catch (const Error&) {
      if (partial) *partial = {{"config", cfg.to_json()}, {"stages", stages_json}, {"failed_stage", s.id}};
      throw;
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : r.history) {
      hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"dev_cer", h.dev_cer}});
      say("  epoch " + std::to_string(h.epoch) + " loss " + std::to_string(h.train_loss) +
          " dev CER " + std::to_string(h.dev_cer));
    }
    stages_json.push_back({{"id", s.id},
                           {"phase", s.phase},
                           {"loss", to_string(s.loss)},
                           {"teacher", s.teacher_label()},
                           {"init", s.init.empty() ? "scratch" : s.init},
                           {"lambda", s.loss == LossKind::ctc ? 0.0 : tc.distill.lambda},
                           {"epochs_run", r.history.size()},
                           {"best_epoch", r.best_epoch},
                           {"best_dev_cer", r.best_dev_cer},
                           {"steps", r.steps},
                           {"skipped", r.skipped},
                           {"history", hist}});
    if (out_dir) {
      model::save_checkpoint(*out_dir / "models" / (s.id + ".acdm"),
                             {r.params, data.alphabet,
                              {{"stage", s.to_json()}, {"best_epoch", r.best_epoch}, {"seed", cfg.seed}}});
    }
    out.models.insert_or_assign(s.id, std::move(r.params));
    out.timings.push_back(
        {s.id, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    if (partial) *partial = {{"config", cfg.to_json()}, {"stages", stages_json}};
  }

  // Test-set CER for every model on the accents it was trained for.
  say("evaluating on test split");
  nlohmann::json cer_json = nlohmann::json::object();
  std::map<std::string, std::map<std::string, double>> cer;
  for (const Stage& s : cfg.plan.stages) {
    const auto test_set = data.select(corpus::Split::test, detail::stage_accents(s, data));
    const auto ev = evaluate(out.models.at(s.id), test_set, blank, cfg.decode);
    cer[s.id] = ev.per_accent;
    cer_json[s.id] = {{"per_accent", ev.per_accent}, {"ave", ev.average}};
  }

  // CER table: one row per group, accent-specific members filling their column.
  nlohmann::json cer_rows = nlohmann::json::array();
  std::vector<std::string> row_order;
  std::map<std::string, std::pair<std::string, std::map<std::string, double>>> rows;
  for (const Stage& s : cfg.plan.stages) {
    if (!rows.contains(s.row())) {
      row_order.push_back(s.row());
      std::set<std::string> groups;
      for (const auto& [a, t] : s.teachers) groups.insert(cfg.plan.stage(t).row());
      std::string teacher;
      for (const auto& g : groups) teacher += (teacher.empty() ? "" : "+") + g;
      if (teacher.empty()) teacher = "None";
      rows[s.row()].first = teacher;
    }
    for (const auto& [a, v] : cer[s.id]) rows[s.row()].second[a] = v;
  }
  for (const auto& name : row_order) {
    const auto& [teacher, per] = rows[name];
    double sum = 0.0;
    for (const auto& [a, v] : per) sum += v;
    cer_rows.push_back({{"model", name},
                      {"teacher", teacher},
                      {"per_accent", per},
                      {"ave", per.empty() ? 0.0 : sum / static_cast<double>(per.size())}});
  }

  // Spike overlap between each flagged student and its reference teacher.
  nlohmann::json cso_rows = nlohmann::json::array();
  for (const Stage& s : cfg.plan.stages) {
    if (s.cso_against.empty()) continue;
    const auto accents = detail::stage_accents(s, data);
    nlohmann::json row{{"student", s.id}, {"teacher", s.cso_against}, {"variant", s.cso_label},
                       {"accents", accents}};
    for (const auto split : {corpus::Split::train, corpus::Split::test}) {
      const auto ex = data.select(split, accents);
      const auto rep = cso_between(out.models.at(s.cso_against), out.models.at(s.id), ex,
                                   s.cso_against, s.id);
      row[corpus::to_string(split)] = 100.0 * rep.mean;
    }
    cso_rows.push_back(row);
  }

  // Adaptation: per (base model, accent), the unadapted CER against every
  // adapted variant.
  nlohmann::json adaptation_rows = nlohmann::json::array();
  std::map<std::string, nlohmann::json> adapt_rows;
  std::vector<std::string> adapt_order;
  for (const Stage& s : cfg.plan.stages) {
    if (s.loss != LossKind::kl_adapt) continue;
    for (const auto& a : detail::stage_accents(s, data)) {
      const std::string key = s.init + "/" + a;
      if (!adapt_rows.contains(key)) {
        adapt_order.push_back(key);
        adapt_rows[key] = {{"accent", a},
                         {"base_model", s.init},
                         {"unadapted", cer.at(s.init).at(a)},
                         {"adapted", nlohmann::json::object()},
                         {"reference", nlohmann::json::object()}};
      }
      adapt_rows[key]["adapted"][s.row()] = cer.at(s.id).at(a);
      adapt_rows[key]["reference"][s.row()] = s.teacher_for(a);
    }
  }
  for (const auto& k : adapt_order) adaptation_rows.push_back(adapt_rows[k]);

  nlohmann::json summary{{"reference_relative_gain_pct", kReferenceRelativeGainPct}};
  if (!cfg.plan.baseline.empty() && !cfg.plan.best.empty()) {
    const double base = cer_json[cfg.plan.baseline]["ave"].get<double>();
    const double best = cer_json[cfg.plan.best]["ave"].get<double>();
    summary["baseline"] = cfg.plan.baseline;
    summary["best"] = cfg.plan.best;
    summary["baseline_ave_cer"] = base;
    summary["best_ave_cer"] = best;
    summary["relative_gain_pct"] = base > 0.0 ? 100.0 * (base - best) / base : 0.0;
  }

  out.report = {{"config", cfg.to_json()},
                {"plan", {{"phases", cfg.plan.phase_count()}, {"models", cfg.plan.stages.size()}}},
                {"stages", stages_json},
                {"cer", cer_json},
                {"cso_table", cso_rows},
                {"adaptation_table", adaptation_rows},
                {"cer_table", cer_rows},
                {"summary", summary}};
  if (out_dir) {
    io::write_json(*out_dir / "reports" / "report.json", out.report);
    nlohmann::json tj = nlohmann::json::array();
    for (const auto& t : out.timings) tj.push_back({{"stage", t.id}, {"seconds", t.seconds}});
    io::write_json(*out_dir / "reports" / "timings.json", tj);
  }
  return out;
}

}  // namespace kdctc::pipeline

#endif  // KDCTC_PIPELINE_RUNNER_HPP
