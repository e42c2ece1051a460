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

#include <cmath>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "kdctc/kdctc.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

namespace kdctc::pipeline {
namespace {

corpus::CorpusConfig toy_corpus_config() {
  corpus::CorpusConfig c;
  c.accents = {"us"};
  c.speakers_per_accent = 3;
  c.utts_per_speaker = 12;
  c.letters = "at";
  c.min_chars = 2;
  c.max_chars = 4;
  c.space_prob = 0.0;
  c.noise_prob = 0.0;
  c.jitter_sigma = 0.0;
  c.speaker_sigma = 0.0;
  c.token_sigma = 0.0;
  return c;
}

model::ArchSpec tiny_arch(std::size_t input_dim) { return {input_dim, {16}, {8}, {}, 11}; }

struct ToyWorld {
  Dataset data;
  TrainResult trained;
};

// Trained once and shared; training is deterministic.
const ToyWorld& toy_world() {
  static const ToyWorld w = [] {
    ToyWorld t;
    t.data = build_dataset(corpus::gen_corpus(toy_corpus_config()), {});
    SeededRng rng(1);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    cfg.batch_size = 4;
    t.trained = train(model::init_params(tiny_arch(t.data.input_dim), rng),
                      t.data.select(corpus::Split::train), t.data.select(corpus::Split::train), 0, cfg);
    return t;
  }();
  return w;
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  for (double g : {3.0, -0.002, 1e4}) {
    std::vector<double> p{1.0}, grad{g};
    AdamState st(1);
    adam_step(p, grad, st, 0.001);
    const double update = p[0] - 1.0;
    EXPECT_EQ(std::signbit(update), g > 0);
    EXPECT_GE(std::abs(update), 0.99 * 0.001);
    EXPECT_LE(std::abs(update), 0.001);
  }
}

TEST(Adam, ZeroGradientsChangeNothing) {
  std::vector<double> p{1.0, -2.0}, grad{0.0, 0.0};
  AdamState st(2);
  for (int i = 0; i < 5; ++i) adam_step(p, grad, st, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(st.m, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(st.v, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(st.step, 5);
}

TEST(Adam, ConvergesOnQuadratic) {
  std::vector<double> x{1.0};
  AdamState st(1);
  int steps = 0;
  for (; steps < 500 && std::abs(x[0]) >= 1e-3; ++steps) {
    const std::vector<double> g{x[0]};
    adam_step(x, g, st, 0.01);
  }
  EXPECT_LT(std::abs(x[0]), 1e-3);
  EXPECT_LE(steps, 500);
}

TEST(Adam, NonFiniteGradientAborts) {
  std::vector<double> p{1.0}, g{std::nan("")};
  AdamState st(1);
  EXPECT_THROW(adam_step(p, g, st, 0.1), NumericError);
  std::vector<double> wrong(2);
  EXPECT_THROW(adam_step(p, wrong, st, 0.1), ShapeError);
}

TEST(ClipGlobalNorm, ScalesOnlyWhenAbove) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 10.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);
}

TEST(EarlyStopping, PatienceOneStopsAfterFirstWorsening) {
  EarlyStopping s(1);
  EXPECT_TRUE(s.observe(10.0));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.observe(12.0));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1);
}

TEST(EarlyStopping, TiesKeepEarliest) {
  EarlyStopping s(3);
  s.observe(5.0);
  s.observe(4.0);
  s.observe(4.0);
  EXPECT_EQ(s.best_epoch(), 2);
  s.observe(4.5);
  EXPECT_FALSE(s.should_stop());
  s.observe(4.0);
  EXPECT_TRUE(s.should_stop());
}

TEST(TrainConfig, Validation) {
  EXPECT_THROW(TrainConfig::from_json({{"learning_rate", 0.0}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_json({{"patience", 0}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_json({{"batch_size", "x"}}), ConfigError);
  const auto c = TrainConfig::from_json({{"batch_size", 3}});
  EXPECT_EQ(c.batch_size, 3);
  EXPECT_EQ(c.learning_rate, 1e-3);
}

TEST(Dataset, FrontendAppliedAndSplitsSelectable) {
  const auto& d = toy_world().data;
  EXPECT_EQ(d.input_dim, 234u);
  EXPECT_EQ(d.select(corpus::Split::train).size(), 12u);
  EXPECT_EQ(d.select(corpus::Split::dev).size(), 12u);
  EXPECT_EQ(d.select(corpus::Split::test, {"nope"}).size(), 0u);
  for (const auto& e : d.examples) EXPECT_TRUE(e.feasible);
}

TEST(Train, ToyCorpusReachesZeroTrainCer) {
  const auto& w = toy_world();
  EXPECT_EQ(greedy_cer(w.trained.params, w.data.select(corpus::Split::train), 0), 0.0);
}

TEST(Train, BestCheckpointIsEarliestMinimum) {
  const auto& w = toy_world();
  const auto& h = w.trained.history;
  ASSERT_FALSE(h.empty());
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i].dev_cer < h[best].dev_cer) best = i;
  EXPECT_EQ(w.trained.best_epoch, h[best].epoch);
  EXPECT_EQ(w.trained.best_dev_cer, h[best].dev_cer);
  EXPECT_EQ(greedy_cer(w.trained.params, w.data.select(corpus::Split::train), 0), w.trained.best_dev_cer);
}

TEST(Train, StopsWhenPatienceRunsOut) {
  const auto& d = toy_world().data;
  SeededRng rng(3);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.max_epochs = 50;
  cfg.patience = 2;
  const auto r = train(model::init_params(tiny_arch(d.input_dim), rng), d.select(corpus::Split::train),
                       d.select(corpus::Split::dev), 0, cfg);
  if (static_cast<int>(r.history.size()) < cfg.max_epochs) {
    EXPECT_EQ(static_cast<int>(r.history.size()), r.best_epoch + cfg.patience);
  }
}

TEST(Train, LambdaZeroDistillIsExactlyCtc) {
  const auto& d = toy_world().data;
  const auto train_set = d.select(corpus::Split::train);
  const auto dev_set = d.select(corpus::Split::dev);
  SeededRng rng(4);
  const auto init = model::init_params(tiny_arch(d.input_dim), rng);
  SeededRng trng(5);
  const auto teacher = model::init_params(tiny_arch(d.input_dim), trng);
  const auto targets = gen_soft_targets(teacher, train_set, 4.0, "t");

  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.seed = 77;
  const auto plain = train(init, train_set, dev_set, 0, cfg);
  cfg.loss = LossKind::distill;
  cfg.distill.lambda = 0.0;
  const auto kd = train(init, train_set, dev_set, 0, cfg, &targets);
  EXPECT_EQ(plain.params.flat(), kd.params.flat());
  ASSERT_EQ(plain.history.size(), kd.history.size());
  for (std::size_t i = 0; i < plain.history.size(); ++i) {
    EXPECT_EQ(plain.history[i].train_loss, kd.history[i].train_loss);
    EXPECT_EQ(plain.history[i].dev_cer, kd.history[i].dev_cer);
  }
}

TEST(Train, DistillWithoutTargetsRejected) {
  const auto& d = toy_world().data;
  SeededRng rng(6);
  TrainConfig cfg;
  cfg.loss = LossKind::distill;
  const auto init = model::init_params(tiny_arch(d.input_dim), rng);
  EXPECT_THROW(train(init, d.select(corpus::Split::train), d.select(corpus::Split::dev), 0, cfg), DataError);
  TargetMap empty;
  EXPECT_THROW(train(init, d.select(corpus::Split::train), d.select(corpus::Split::dev), 0, cfg, &empty),
               DataError);
  EXPECT_THROW(train(init, {}, d.select(corpus::Split::dev), 0, {}), DataError);
}

TEST(Train, InfeasibleUtterancesSkippedOrFatal) {
  const auto& d = toy_world().data;
  std::vector<Example> copies(d.examples.begin(), d.examples.begin() + 3);
  copies[0].feasible = false;
  ExampleRefs refs{&copies[0], &copies[1], &copies[2]};
  SeededRng rng(7);
  const auto init = model::init_params(tiny_arch(d.input_dim), rng);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  EXPECT_EQ(train(init, refs, refs, 0, cfg).skipped, 1u);
  copies[1].feasible = copies[2].feasible = false;
  EXPECT_THROW(train(init, refs, refs, 0, cfg), DataError);
}

TEST(SoftTargets, UnitTemperatureIsSoftmaxAndRowsSumToOne) {
  const auto& w = toy_world();
  const auto ex = w.data.select(corpus::Split::dev);
  const auto t1 = gen_soft_targets(w.trained.params, ex, 1.0, "toy");
  for (const Example* e : ex) {
    const auto& st = t1.at(e->id);
    const Tensor sm = softmax_rows(model::infer(w.trained.params, e->features));
    for (std::size_t i = 0; i < sm.size(); ++i) EXPECT_NEAR(st.probs[i], sm[i], 1e-12);
    EXPECT_EQ(st.teacher_id, "toy");
  }
  for (const auto& [id, st] : gen_soft_targets(w.trained.params, ex, 4.0, "toy"))
    for (std::size_t t = 0; t < st.probs.rows(); ++t) {
      double s = 0.0;
      for (double v : st.probs.row(t)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(SoftTargets, PersistedByteIdentically) {
  const auto& w = toy_world();
  const auto ex = w.data.select(corpus::Split::dev);
  testing::TempDir a, b;
  write_soft_targets(a.path(), gen_soft_targets(w.trained.params, ex, 4.0, "toy"));
  write_soft_targets(b.path(), gen_soft_targets(w.trained.params, ex, 4.0, "toy"));
  for (const Example* e : ex) {
    for (const std::string& f : {e->id + ".acdm", e->id + ".acdm.json"})
      EXPECT_EQ(io::read_bytes(a / f), io::read_bytes(b / f));
  }
  const auto back = read_soft_targets(a.path());
  ASSERT_EQ(back.size(), ex.size());
  EXPECT_EQ(back.at(ex[0]->id).temperature, 4.0);
  EXPECT_EQ(back.at(ex[0]->id).teacher_id, "toy");
  EXPECT_THROW(read_soft_targets(a / "missing"), DataError);
}

TEST(Evaluate, AllBlankModelScores100) {
  const auto& d = toy_world().data;
  model::ModelParams p(tiny_arch(d.input_dim));
  p.mutable_view("output.bias")[0] = 10.0;
  const auto r = evaluate(p, d.select(corpus::Split::test), 0, {100});
  EXPECT_DOUBLE_EQ(r.per_accent.at("us"), 100.0);
  EXPECT_DOUBLE_EQ(r.average, 100.0);
}

TEST(Evaluate, OneHotAlignmentDecodesPerfectly) {
  // Posteriors one-hot on a valid alignment decode to the reference.
  const auto& d = toy_world().data;
  std::vector<ctc::LabelSequence> hyps, refs;
  for (const Example* e : d.select(corpus::Split::test)) {
    std::vector<int> path;
    int prev = -1;
    for (int s : e->label.indices) {
      if (s == prev) path.push_back(0);
      path.push_back(s);
      prev = s;
    }
    Tensor probs = Tensor::matrix(11, path.size());
    for (std::size_t t = 0; t < path.size(); ++t) probs(static_cast<std::size_t>(path[t]), t) = 1.0;
    hyps.push_back(decode::beam_search_decode(ctc::PosteriorMatrix(probs), 0));
    refs.push_back(e->label);
  }
  EXPECT_EQ(decode::cer(hyps, refs), 0.0);
}

TEST(Evaluate, BeamOneMatchesBestPathOnTrainedModel) {
  const auto& w = toy_world();
  for (const Example* e : w.data.select(corpus::Split::test)) {
    const auto post = ctc::PosteriorMatrix::from_logits(model::infer(w.trained.params, e->features));
    EXPECT_EQ(decode::beam_search_decode(post, 0, {1}), decode::best_path_decode(post, 0)) << e->id;
  }
}

TEST(Evaluate, DecodeJsonlRecords) {
  const auto& w = toy_world();
  const auto r = evaluate(w.trained.params, w.data.select(corpus::Split::test), 0, {0});
  const auto text = decode_jsonl(r, w.data.alphabet);
  std::size_t lines = 0, pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) {
    ++pos;
    ++lines;
  }
  EXPECT_EQ(lines, r.records.size());
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  for (const char* k : {"id", "hyp", "ref", "edit_distance"}) EXPECT_TRUE(first.contains(k)) << k;
}

TEST(Evaluate, CsoJsonShape) {
  const auto& w = toy_world();
  const auto ex = w.data.select(corpus::Split::test);
  const auto rep = cso_between(w.trained.params, w.trained.params, ex, "a", "b");
  EXPECT_DOUBLE_EQ(rep.mean, 1.0);
  const auto j = cso_json(rep);
  EXPECT_EQ(j["pair"], (nlohmann::json{"a", "b"}));
  EXPECT_EQ(j["per_utterance"].size(), ex.size());
}

TEST(Plan, PresetShape) {
  const std::vector<std::string> accents{"us", "ind", "his"};
  const auto full = preset_plan(accents);
  EXPECT_EQ(full.phase_count(), 6u);
  EXPECT_EQ(full.stages.size(), 26u);
  const auto core = preset_plan(accents, {false, false});
  EXPECT_EQ(core.phase_count(), 6u);
  EXPECT_EQ(core.stages.size(), 17u);
  EXPECT_EQ(preset_plan(accents, {false, false, ""}).stages.size(), 15u);
  EXPECT_EQ(preset_plan({"us", "his"}).stages.size(), 17u);
  EXPECT_NO_THROW(full.validate(accents));
  const auto& mt1 = full.stage("MA_MT1");
  EXPECT_EQ(mt1.teacher_for("ind"), "ACC_SP1_ind");
  EXPECT_EQ(full.stage("MA_MT1_Adpt1_ind").init, "MA_MT1");
  EXPECT_EQ(full.stage("ACC_SP_L05_us").lambda, 0.5);
  EXPECT_EQ(full.stage("MA_NT_Adpt0_ind").teacher_for("ind"), "ACC_SP0_ind");
  EXPECT_EQ(full.stage("MA_NT_Adpt1_ind").init, "MA_NT");
  EXPECT_EQ(ExperimentPlan::from_json(full.to_json()).to_json(), full.to_json());
}

Stage stage(const std::string& id, const std::string& teacher = "", LossKind loss = LossKind::ctc) {
  Stage s;
  s.id = id;
  s.loss = loss;
  if (!teacher.empty()) s.teachers["*"] = teacher;
  return s;
}

TEST(Plan, ValidationCatchesBadGraphs) {
  const std::vector<std::string> acc{"us"};
  auto make = [](std::vector<Stage> s) { return ExperimentPlan{std::move(s), "", ""}; };
  const auto kd = LossKind::distill;
  EXPECT_THROW(make({}).validate(acc), ConfigError);
  EXPECT_THROW(make({stage("A"), stage("A")}).validate(acc), ConfigError);
  EXPECT_THROW(make({stage("A", "B", kd), stage("B")}).validate(acc), ConfigError);
  EXPECT_THROW(make({stage("A"), stage("B", "A")}).validate(acc), ConfigError);
  EXPECT_THROW(make({stage("A"), stage("B", "", kd)}).validate(acc), ConfigError);
  auto foreign = stage("A");
  foreign.accents = {"aus"};
  EXPECT_THROW(make({foreign}).validate(acc), ConfigError);
  auto self_init = stage("A");
  self_init.init = "A";
  EXPECT_THROW(make({self_init}).validate(acc), ConfigError);
  EXPECT_NO_THROW(make({stage("A"), stage("B", "A", kd)}).validate(acc));
}

nlohmann::json tiny_run_config() {
  return {{"seed", 3},
          {"corpus", {{"speakers_per_accent", 3}, {"utts_per_speaker", 6}}},
          {"arch", {{"preset", "custom"}, {"ff_pre", {8}}, {"blstm", {6}}, {"ff_post", nlohmann::json::array()}}},
          {"train", {{"max_epochs", 2}, {"patience", 1}, {"learning_rate", 0.005}}},
          {"decode", {{"beam_width", 8}}}};
}

TEST(RunConfig, JsonRoundTripAndErrors) {
  const auto cfg = RunConfig::from_json(tiny_run_config());
  EXPECT_EQ(RunConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
  EXPECT_EQ(cfg.plan.stages.size(), 26u);
  auto bad = tiny_run_config();
  bad["decode"]["beam_width"] = 0;
  EXPECT_THROW(RunConfig::from_json(bad), ConfigError);
  bad = tiny_run_config();
  bad["plan"] = {{"preset", "other"}};
  EXPECT_THROW(RunConfig::from_json(bad), ConfigError);
  bad = tiny_run_config();
  bad["arch"] = {{"preset", "custom"}, {"ff_pre", {0}}, {"blstm", {2}}, {"ff_post", {2}}};
  EXPECT_THROW(RunConfig::from_json(bad).arch_spec(10, 11), ConfigError);
}

TEST(RunPlan, DeterministicAndComplete) {
  const auto cfg = RunConfig::from_json(tiny_run_config());
  const auto data = build_dataset(corpus::gen_corpus(cfg.corpus), cfg.frontend);
  testing::TempDir a, b;
  const auto ra = run_plan(cfg, data, a.path());
  run_plan(cfg, data, b.path());
  EXPECT_EQ(io::read_bytes(a / "reports/report.json"), io::read_bytes(b / "reports/report.json"));
  std::set<std::string> reported;
  for (const auto& s : ra.report["stages"]) reported.insert(s["id"].get<std::string>());
  for (const auto& s : cfg.plan.stages) {
    EXPECT_TRUE(reported.contains(s.id)) << s.id;
    EXPECT_TRUE(ra.report["cer"].contains(s.id)) << s.id;
    EXPECT_TRUE(std::filesystem::exists(a / ("models/" + s.id + ".acdm"))) << s.id;
  }
  EXPECT_EQ(ra.report["cso_table"].size(), 9u);
  EXPECT_EQ(ra.report["adaptation_table"].size(), 4u);
  EXPECT_EQ(ra.report["summary"]["reference_relative_gain_pct"], 20.1);
  EXPECT_EQ(ra.report["config"], cfg.to_json());
  EXPECT_TRUE(std::filesystem::exists(a / "reports/timings.json"));

  render_report(ra.report, a / "rendered");
  for (const char* f : {"report.md", "cer.csv", "cso.csv", "adaptation.csv"})
    EXPECT_TRUE(std::filesystem::exists(a / ("rendered/" + std::string(f)))) << f;
  const auto md = render_markdown(ra.report);
  EXPECT_NE(md.find("MA_MT1"), std::string::npos);
}

TEST(RunPlan, SingleAccentDegenerates) {
  auto j = tiny_run_config();
  j["corpus"]["accents"] = {"us"};
  const auto cfg = RunConfig::from_json(j);
  const auto data = build_dataset(corpus::gen_corpus(cfg.corpus), cfg.frontend);
  const auto out = run_plan(cfg, data);
  EXPECT_EQ(out.models.size(), cfg.plan.stages.size());
  bool have_no_teacher = false, have_teacher = false;
  for (const auto& row : out.report["cso_table"]) {
    have_no_teacher |= row["variant"] == "No_Teacher";
    have_teacher |= row["variant"] == "Teacher_lambda_0.9";
    EXPECT_GE(row["train"].get<double>(), 0.0);
  }
  EXPECT_TRUE(have_no_teacher && have_teacher);
}

TEST(RunPlan, FailingStageLeavesPartialReport) {
  auto j = tiny_run_config();
  j["frontend"] = {{"keep_every", 100}};  // every utterance becomes infeasible
  const auto cfg = RunConfig::from_json(j);
  const auto data = build_dataset(corpus::gen_corpus(cfg.corpus), cfg.frontend);
  nlohmann::json partial;
  EXPECT_THROW(run_plan(cfg, data, std::nullopt, {}, &partial), DataError);
  EXPECT_EQ(partial["failed_stage"], "MA_NT");
  EXPECT_TRUE(partial.contains("config"));
}

}  // namespace
}  // namespace kdctc::pipeline
