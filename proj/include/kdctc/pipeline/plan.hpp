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

#ifndef KDCTC_PIPELINE_PLAN_HPP
#define KDCTC_PIPELINE_PLAN_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/pipeline/train.hpp"

namespace kdctc::pipeline {

/// One trained model in the generation graph.
struct Stage {
  std::string id;
  int phase = 1;
  std::vector<std::string> accents;              // training data; empty = all accents
  std::map<std::string, std::string> teachers;   // accent -> model id; "*" matches any accent
  LossKind loss = LossKind::ctc;
  std::string init;                              // empty = from scratch, else a model id
  std::optional<double> lambda;                  // overrides the run's distill lambda
  std::string group;                             // row label in the CER table (defaults to id)
  std::string cso_against;                       // teacher whose spikes this model is compared to
  std::string cso_label;                         // column label for that comparison

  const std::string& row() const { return group.empty() ? id : group; }

  /// Teacher for utterances of `accent`, or empty.
  std::string teacher_for(const std::string& accent) const {
    if (auto it = teachers.find(accent); it != teachers.end()) return it->second;
    if (auto it = teachers.find("*"); it != teachers.end()) return it->second;
    return {};
  }

  std::string teacher_label() const {
    if (teachers.empty()) return "None";
    if (teachers.size() == 1) return teachers.begin()->second;
    std::set<std::string> groups;
    for (const auto& [a, t] : teachers) groups.insert(t);
    std::string out;
    for (const auto& g : groups) out += (out.empty() ? "" : "+") + g;
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"id", id},       {"phase", phase}, {"accents", accents},
                     {"teachers", teachers}, {"loss", to_string(loss)}, {"init", init},
                     {"group", row()}};
    if (lambda) j["lambda"] = *lambda;
    if (!cso_against.empty()) {
      j["cso_against"] = cso_against;
      j["cso_label"] = cso_label;
    }
    return j;
  }

  static Stage from_json(const nlohmann::json& j) {
    try {
      Stage s;
      s.id = j.at("id").get<std::string>();
      s.phase = j.value("phase", 1);
      s.accents = j.value("accents", std::vector<std::string>{});
      s.teachers = j.value("teachers", std::map<std::string, std::string>{});
      s.loss = loss_kind_from_string(j.value("loss", std::string("ctc")));
      s.init = j.value("init", std::string{});
      if (j.contains("lambda")) s.lambda = j.at("lambda").get<double>();
      s.group = j.value("group", std::string{});
      s.cso_against = j.value("cso_against", std::string{});
      s.cso_label = j.value("cso_label", std::string{});
      return s;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("plan stage: ") + e.what());
    }
  }
};

/// Ordered teacher -> student stages plus the two models whose average CER
/// defines the headline relative gain.
struct ExperimentPlan {
  std::vector<Stage> stages;
  std::string baseline;
  std::string best;

  std::size_t phase_count() const {
    std::set<int> phases;
    for (const auto& s : stages) phases.insert(s.phase);
    return phases.size();
  }

  const Stage& stage(const std::string& id) const {
    for (const auto& s : stages)
      if (s.id == id) return s;
    throw ConfigError("plan: no stage '" + id + "'");
  }

  /// Ids are unique, every teacher/init/cso reference points to an earlier
  /// stage (so the graph is acyclic), and loss kinds agree with teachers.
  void validate(const std::vector<std::string>& known_accents) const {
    if (stages.empty()) throw ConfigError("plan: no stages");
    std::set<std::string> seen;
    int last_phase = 0;
    auto earlier = [&](const std::string& ref, const std::string& who, const char* what) {
      if (!seen.contains(ref)) {
        throw ConfigError("plan: stage '" + who + "' " + what + " '" + ref +
                          "' is not an earlier stage");
      }
    };
    for (const auto& s : stages) {
      if (s.id.empty()) throw ConfigError("plan: stage without id");
      if (seen.contains(s.id)) throw ConfigError("plan: duplicate stage id '" + s.id + "'");
      if (s.phase < last_phase) throw ConfigError("plan: phases must be non-decreasing");
      last_phase = s.phase;
      for (const auto& a : s.accents) {
        if (std::find(known_accents.begin(), known_accents.end(), a) == known_accents.end()) {
          throw ConfigError("plan: stage '" + s.id + "' uses unknown accent '" + a + "'");
        }
      }
      for (const auto& [a, t] : s.teachers) earlier(t, s.id, "teacher");
      if (!s.init.empty()) earlier(s.init, s.id, "init");
      if (!s.cso_against.empty()) earlier(s.cso_against, s.id, "cso reference");
      if (s.loss == LossKind::ctc && !s.teachers.empty()) {
        throw ConfigError("plan: ctc stage '" + s.id + "' must not name a teacher");
      }
      if (s.loss != LossKind::ctc) {
        const auto& accents = s.accents.empty() ? known_accents : s.accents;
        for (const auto& a : accents) {
          if (s.teacher_for(a).empty()) {
            throw ConfigError("plan: stage '" + s.id + "' has no teacher for accent '" + a + "'");
          }
        }
      }
      seen.insert(s.id);
    }
    if (!baseline.empty()) earlier(baseline, "summary", "baseline");
    if (!best.empty()) earlier(best, "summary", "best");
  }

  nlohmann::json to_json() const {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : stages) st.push_back(s.to_json());
    return {{"stages", st}, {"baseline", baseline}, {"best", best}};
  }

  static ExperimentPlan from_json(const nlohmann::json& j) {
    ExperimentPlan p;
    for (const auto& s : j.at("stages")) p.stages.push_back(Stage::from_json(s));
    p.baseline = j.value("baseline", std::string{});
    p.best = j.value("best", std::string{});
    return p;
  }
};

struct PresetOptions {
  bool alignment_variants = true;  // no-teacher and lambda=0.5 accent models
  bool single_teacher = true;      // MA_ST / MA_ST1 chain
  std::string baseline_adaptation = "ind";  // accent MA_NT is adapted to; empty or absent skips it
};

/// The two-generation multi-teacher pipeline:
///   1. MA_NT       all accents, CTC only
///   2. ACC_SP_x    accent x, teacher MA_NT            (+ ACC_SP0_x, ACC_SP_L05_x, MA_ST)
///   3. MA_MT       all accents, teacher ACC_SP_x per accent   (+ MA_ST1 <- MA_ST)
///   4. ACC_SP1_x   accent x, teacher MA_MT
///   5. MA_MT1      all accents, teacher ACC_SP1_x per accent
///   6. MA_MT1_Adpt_x / MA_MT1_Adpt1_x: MA_MT1 fine-tuned on accent x with
///      tempered-KL toward MA_MT1 itself / toward ACC_SP1_x
///      (+ MA_NT_Adpt_b / MA_NT_Adpt0_b / MA_NT_Adpt1_b: MA_NT fine-tuned on
///      one accent b toward MA_NT, ACC_SP0_b, ACC_SP_b)
inline ExperimentPlan preset_plan(const std::vector<std::string>& accents,
                                  const PresetOptions& opt = {}) {
  ExperimentPlan p;
  p.baseline = "MA_NT";
  p.best = "MA_MT1";
  auto add = [&](Stage s) { p.stages.push_back(std::move(s)); };

  add({.id = "MA_NT", .phase = 1});
  for (const auto& a : accents) {
    if (opt.alignment_variants) {
      add({.id = "ACC_SP0_" + a, .phase = 2, .accents = {a}, .group = "ACC_SP0",
           .cso_against = "MA_NT", .cso_label = "No_Teacher"});
      add({.id = "ACC_SP_L05_" + a, .phase = 2, .accents = {a}, .teachers = {{"*", "MA_NT"}},
           .loss = LossKind::distill, .lambda = 0.5, .group = "ACC_SP_L05",
           .cso_against = "MA_NT", .cso_label = "Teacher_lambda_0.5"});
    }
    add({.id = "ACC_SP_" + a, .phase = 2, .accents = {a}, .teachers = {{"*", "MA_NT"}},
         .loss = LossKind::distill, .group = "ACC_SP", .cso_against = "MA_NT",
         .cso_label = "Teacher_lambda_0.9"});
  }
  if (opt.single_teacher) {
    add({.id = "MA_ST", .phase = 2, .teachers = {{"*", "MA_NT"}}, .loss = LossKind::distill});
  }
  Stage ma_mt{.id = "MA_MT", .phase = 3, .loss = LossKind::distill};
  for (const auto& a : accents) ma_mt.teachers[a] = "ACC_SP_" + a;
  add(ma_mt);
  if (opt.single_teacher) {
    add({.id = "MA_ST1", .phase = 3, .teachers = {{"*", "MA_ST"}}, .loss = LossKind::distill});
  }
  for (const auto& a : accents) {
    add({.id = "ACC_SP1_" + a, .phase = 4, .accents = {a}, .teachers = {{"*", "MA_MT"}},
         .loss = LossKind::distill, .group = "ACC_SP1"});
  }
  Stage ma_mt1{.id = "MA_MT1", .phase = 5, .loss = LossKind::distill};
  for (const auto& a : accents) ma_mt1.teachers[a] = "ACC_SP1_" + a;
  add(ma_mt1);
  for (const auto& a : accents) {
    add({.id = "MA_MT1_Adpt_" + a, .phase = 6, .accents = {a}, .teachers = {{"*", "MA_MT1"}},
         .loss = LossKind::kl_adapt, .init = "MA_MT1", .group = "MA_MT1_Adpt"});
    add({.id = "MA_MT1_Adpt1_" + a, .phase = 6, .accents = {a}, .teachers = {{"*", "ACC_SP1_" + a}},
         .loss = LossKind::kl_adapt, .init = "MA_MT1", .group = "MA_MT1_Adpt1"});
  }
  const std::string& b = opt.baseline_adaptation;
  if (std::find(accents.begin(), accents.end(), b) != accents.end()) {
    add({.id = "MA_NT_Adpt_" + b, .phase = 6, .accents = {b}, .teachers = {{"*", "MA_NT"}},
         .loss = LossKind::kl_adapt, .init = "MA_NT", .group = "MA_NT_Adpt"});
    if (opt.alignment_variants) {
      add({.id = "MA_NT_Adpt0_" + b, .phase = 6, .accents = {b}, .teachers = {{"*", "ACC_SP0_" + b}},
           .loss = LossKind::kl_adapt, .init = "MA_NT", .group = "MA_NT_Adpt0"});
    }
    add({.id = "MA_NT_Adpt1_" + b, .phase = 6, .accents = {b}, .teachers = {{"*", "ACC_SP_" + b}},
         .loss = LossKind::kl_adapt, .init = "MA_NT", .group = "MA_NT_Adpt1"});
  }
  return p;
}

}  // namespace kdctc::pipeline

#endif  // KDCTC_PIPELINE_PLAN_HPP
