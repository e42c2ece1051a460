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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kdctc/kdctc.hpp"

namespace fs = std::filesystem;
using namespace kdctc;

namespace {

struct Common {
  std::string config;
  std::string corpus;
  std::string split = "test";
  std::vector<std::string> accents;
};

pipeline::RunConfig load_config(const std::string& path) {
  if (path.empty()) return pipeline::RunConfig::from_json(nlohmann::json::object());
  nlohmann::json j;
  try {
    j = io::read_json(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return pipeline::RunConfig::from_json(j);
}

// Corpus from a directory when given, otherwise generated from the config.
corpus::Corpus load_or_generate(const pipeline::RunConfig& cfg, const std::string& dir) {
  return dir.empty() ? corpus::gen_corpus(cfg.corpus) : corpus::load_corpus(dir);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  io::write_bytes(out, text);
}

void add_common(CLI::App* cmd, Common& c, bool need_corpus) {
  cmd->add_option("-c,--config", c.config, "run config JSON");
  auto* opt = cmd->add_option("--corpus", c.corpus, "corpus directory written by gen-corpus");
  if (need_corpus) opt->required();
  cmd->add_option("--split", c.split, "train | dev | test");
  cmd->add_option("--accents", c.accents, "accent subset (default: all)")->delimiter(',');
}

int cmd_gen_corpus(const Common& c, const std::string& out) {
  const auto cfg = load_config(c.config);
  const auto corp = corpus::gen_corpus(cfg.corpus);
  for (const auto& [accent, v] : corpus::oracle_separability_check(corp)) {
    std::fprintf(stderr, "oracle CER %s: %.2f%%\n", accent.c_str(), v);
  }
  corpus::save_corpus(corp, out);
  std::fprintf(stderr, "wrote %zu utterances to %s\n", corp.utterances.size(), out.c_str());
  return 0;
}

int cmd_train(const Common& c, const std::string& out, const std::string& init,
              const std::vector<std::string>& target_dirs, const std::string& loss,
              std::optional<double> lambda, const std::string& id) {
  const auto cfg = load_config(c.config);
  const auto data = pipeline::build_dataset(corpus::load_corpus(c.corpus), cfg.frontend);
  const auto kind = pipeline::loss_kind_from_string(loss);
  pipeline::TrainConfig tc = kind == pipeline::LossKind::kl_adapt ? cfg.adapt : cfg.train;
  tc.seed = derive_seed(cfg.seed, "train/" + id);
  tc.loss = kind;
  tc.distill = cfg.distill;
  if (lambda) tc.distill.lambda = *lambda;

  model::ModelParams params;
  if (init.empty()) {
    SeededRng rng(derive_seed(cfg.seed, "init/" + id));
    params = model::init_params(
        cfg.arch_spec(data.input_dim, static_cast<std::size_t>(data.alphabet.size())), rng);
  } else {
    params = model::load_checkpoint(init).params;
  }
  pipeline::TargetMap targets;
  for (const auto& dir : target_dirs) targets.merge(pipeline::read_soft_targets(dir));
  if (kind != pipeline::LossKind::ctc && targets.empty()) {
    throw ConfigError("train: loss " + loss + " needs --targets");
  }

  const auto train_set = data.select(corpus::Split::train, c.accents);
  const auto dev_set = data.select(corpus::Split::dev, c.accents);
  auto r = pipeline::train(std::move(params), train_set, dev_set, data.alphabet.blank(), tc,
                           kind == pipeline::LossKind::ctc ? nullptr : &targets);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.history) {
    std::fprintf(stderr, "epoch %d loss %.5f dev CER %.2f\n", h.epoch, h.train_loss, h.dev_cer);
    hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"dev_cer", h.dev_cer}});
  }
  model::save_checkpoint(out, {r.params, data.alphabet,
                               {{"id", id},
                                {"loss", loss},
                                {"accents", c.accents},
                                {"best_epoch", r.best_epoch},
                                {"best_dev_cer", r.best_dev_cer},
                                {"skipped", r.skipped},
                                {"history", hist}}});
  return 0;
}

int cmd_soft_targets(const Common& c, const std::string& model_path, const std::string& out,
                     std::optional<double> temperature, std::string teacher_id) {
  const auto cfg = load_config(c.config);
  const auto data = pipeline::build_dataset(corpus::load_corpus(c.corpus), cfg.frontend);
  const auto ck = model::load_checkpoint(model_path);
  if (teacher_id.empty()) teacher_id = fs::path(model_path).stem().string();
  const double t = temperature.value_or(cfg.distill.temperature);
  if (!(t > 0.0)) throw ConfigError("soft-targets: temperature must be > 0");
  const auto targets = pipeline::gen_soft_targets(
      ck.params, data.select(corpus::split_from_string(c.split), c.accents), t, teacher_id);
  pipeline::write_soft_targets(out, targets);
  std::fprintf(stderr, "wrote %zu soft-target files to %s\n", targets.size(), out.c_str());
  return 0;
}

pipeline::EvalResult run_eval(const Common& c, const std::string& model_path,
                              std::optional<int> beam) {
  const auto cfg = load_config(c.config);
  const auto data = pipeline::build_dataset(corpus::load_corpus(c.corpus), cfg.frontend);
  const auto ck = model::load_checkpoint(model_path);
  decode::DecodeConfig dc = cfg.decode;
  if (beam) dc.beam_width = *beam;
  return pipeline::evaluate(ck.params, data.select(corpus::split_from_string(c.split), c.accents),
                            data.alphabet.blank(), dc);
}

int cmd_decode(const Common& c, const std::string& model_path, std::optional<int> beam,
               const std::string& out) {
  const auto ck = model::load_checkpoint(model_path);
  emit(pipeline::decode_jsonl(run_eval(c, model_path, beam), ck.alphabet), out);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& model_path, std::optional<int> beam,
                 const std::string& out) {
  const auto r = run_eval(c, model_path, beam);
  emit(nlohmann::json{{"model", model_path}, {"split", c.split}, {"per_accent", r.per_accent},
                      {"ave", r.average}}
               .dump(2) +
           "\n",
       out);
  return 0;
}

int cmd_cso(const Common& c, const std::string& a, const std::string& b, const std::string& out) {
  const auto cfg = load_config(c.config);
  const auto data = pipeline::build_dataset(corpus::load_corpus(c.corpus), cfg.frontend);
  const auto rep = pipeline::cso_between(
      model::load_checkpoint(a).params, model::load_checkpoint(b).params,
      data.select(corpus::split_from_string(c.split), c.accents), fs::path(a).stem().string(),
      fs::path(b).stem().string());
  emit(pipeline::cso_json(rep).dump(2) + "\n", out);
  return 0;
}

int cmd_plan_run(const Common& c, const std::string& out, bool quiet) {
  const auto cfg = load_config(c.config);
  const auto corp = load_or_generate(cfg, c.corpus);
  const auto data = pipeline::build_dataset(corp, cfg.frontend);
  pipeline::LogSink log;
  if (!quiet) log = [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); };
  nlohmann::json partial;
  try {
    const auto result = pipeline::run_plan(cfg, data, fs::path(out), log, &partial);
    pipeline::render_report(result.report, fs::path(out) / "reports");
    std::cout << pipeline::render_markdown(result.report);
  } catch (const Error&) {
    if (!partial.is_null()) io::write_json(fs::path(out) / "reports" / "partial_report.json", partial);
    throw;
  }
  return 0;
}

int cmd_report_render(const std::string& report, const std::string& out) {
  const auto j = io::read_json(report);
  pipeline::render_report(j, out);
  std::cout << pipeline::render_markdown(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-distilled CTC acoustic models on a synthetic accent corpus"};
  app.require_subcommand(1);
  Common common;
  std::string out, model_path, init, loss = "ctc", id = "model", teacher_id, model_a, model_b, report;
  std::vector<std::string> target_dirs;
  std::optional<double> lambda, temperature;
  std::optional<int> beam;
  bool quiet = false;

  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  gen->add_option("-c,--config", common.config, "run config JSON");
  gen->add_option("-o,--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train one model");
  add_common(train, common, true);
  train->add_option("-o,--out", out, "output checkpoint (.acdm)")->required();
  train->add_option("--init", init, "initialize from this checkpoint");
  train->add_option("--targets", target_dirs, "soft-target directories")->delimiter(',');
  train->add_option("--loss", loss, "ctc | distill | kl_adapt");
  train->add_option("--lambda", lambda, "distillation weight override");
  train->add_option("--id", id, "model id (seeds init and shuffling)");

  auto* soft = app.add_subcommand("soft-targets", "write tempered teacher posteriors");
  add_common(soft, common, true);
  soft->add_option("--model", model_path, "teacher checkpoint")->required();
  soft->add_option("-o,--out", out, "output directory")->required();
  soft->add_option("-T,--temperature", temperature, "temperature (default from config)");
  soft->add_option("--teacher-id", teacher_id, "recorded teacher id (default: file stem)");

  auto* dec = app.add_subcommand("decode", "decode a split to JSON lines");
  add_common(dec, common, true);
  dec->add_option("--model", model_path, "checkpoint")->required();
  dec->add_option("--beam", beam, "beam width; 0 selects best path");
  dec->add_option("-o,--out", out, "output file (default stdout)");

  auto* ev = app.add_subcommand("evaluate", "per-accent CER on a split");
  add_common(ev, common, true);
  ev->add_option("--model", model_path, "checkpoint")->required();
  ev->add_option("--beam", beam, "beam width; 0 selects best path");
  ev->add_option("-o,--out", out, "output file (default stdout)");

  auto* cso = app.add_subcommand("cso", "spike overlap between two models");
  add_common(cso, common, true);
  cso->add_option("--model-a", model_a, "first checkpoint")->required();
  cso->add_option("--model-b", model_b, "second checkpoint")->required();
  cso->add_option("-o,--out", out, "output file (default stdout)");

  auto* plan = app.add_subcommand("plan", "experiment plans");
  plan->require_subcommand(1);
  auto* plan_run = plan->add_subcommand("run", "run a full plan");
  add_common(plan_run, common, false);
  plan_run->add_option("-o,--out", out, "output directory")->required();
  plan_run->add_flag("-q,--quiet", quiet, "no progress log");

  auto* rep = app.add_subcommand("report", "reports");
  rep->require_subcommand(1);
  auto* render = rep->add_subcommand("render", "render tables from report.json");
  render->add_option("--report", report, "report.json")->required();
  render->add_option("-o,--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_corpus(common, out);
    if (*train) return cmd_train(common, out, init, target_dirs, loss, lambda, id);
    if (*soft) return cmd_soft_targets(common, model_path, out, temperature, teacher_id);
    if (*dec) return cmd_decode(common, model_path, beam, out);
    if (*ev) return cmd_evaluate(common, model_path, beam, out);
    if (*cso) return cmd_cso(common, model_a, model_b, out);
    if (*plan_run) return cmd_plan_run(common, out, quiet);
    if (*render) return cmd_report_render(report, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
