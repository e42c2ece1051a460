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

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "kdctc/kdctc.hpp"
#include "support/tempdir.hpp"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(KDCTC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

nlohmann::json tiny_config() {
  return {{"seed", 5},
          {"corpus", {{"accents", {"us", "ind"}}, {"speakers_per_accent", 3}, {"utts_per_speaker", 4}}},
          {"arch", {{"preset", "custom"}, {"ff_pre", {8}}, {"blstm", {4}}, {"ff_post", nlohmann::json::array()}}},
          {"train", {{"max_epochs", 1}, {"patience", 1}}}};
}

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("plan run --help"), 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("train --corpus x"), 2);
}

TEST(Cli, BadConfigExitsTwo) {
  kdctc::testing::TempDir dir;
  write_text(dir / "bad.json", R"({"train": {"learning_rate": -1}})");
  EXPECT_EQ(run("gen-corpus -c " + (dir / "bad.json").string() + " -o " + (dir / "c").string()), 2);
  write_text(dir / "broken.json", "{not json");
  EXPECT_EQ(run("gen-corpus -c " + (dir / "broken.json").string() + " -o " + (dir / "c").string()), 2);
  EXPECT_EQ(run("gen-corpus -c " + (dir / "absent.json").string() + " -o " + (dir / "c").string()), 2);
}

TEST(Cli, MissingCorpusExitsThree) {
  kdctc::testing::TempDir dir;
  EXPECT_EQ(run("train --corpus " + (dir / "nothing").string() + " -o " + (dir / "m.acdm").string()), 3);
}

TEST(Cli, MissingCheckpointExitsThree) {
  kdctc::testing::TempDir dir;
  write_text(dir / "cfg.json", tiny_config().dump());
  const std::string cfg = " -c " + (dir / "cfg.json").string();
  ASSERT_EQ(run("gen-corpus" + cfg + " -o " + (dir / "corpus").string()), 0);
  EXPECT_EQ(run("decode" + cfg + " --corpus " + (dir / "corpus").string() + " --model " +
                (dir / "absent.acdm").string()),
            3);
}

TEST(Cli, GenTrainDecodeSmoke) {
  kdctc::testing::TempDir dir;
  write_text(dir / "cfg.json", tiny_config().dump());
  const std::string cfg = " -c " + (dir / "cfg.json").string();
  const std::string corp = " --corpus " + (dir / "corpus").string();
  ASSERT_EQ(run("gen-corpus" + cfg + " -o " + (dir / "corpus").string()), 0);
  ASSERT_EQ(run("train" + cfg + corp + " --id T -o " + (dir / "t.acdm").string()), 0);
  ASSERT_EQ(run("soft-targets" + cfg + corp + " --split train --model " + (dir / "t.acdm").string() + " -o " +
                (dir / "targets").string()),
            0);
  ASSERT_EQ(run("train" + cfg + corp + " --id S --loss distill --targets " + (dir / "targets").string() +
                " -o " + (dir / "s.acdm").string()),
            0);
  ASSERT_EQ(run("decode" + cfg + corp + " --model " + (dir / "s.acdm").string() + " -o " +
                (dir / "hyp.jsonl").string()),
            0);
  const std::string text = slurp(dir / "hyp.jsonl");
  ASSERT_FALSE(text.empty());
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_TRUE(first.contains("hyp"));
  ASSERT_EQ(run("evaluate" + cfg + corp + " --model " + (dir / "s.acdm").string() + " -o " +
                (dir / "eval.json").string()),
            0);
  const auto ev = nlohmann::json::parse(slurp(dir / "eval.json"));
  EXPECT_TRUE(ev["per_accent"].contains("ind"));
  ASSERT_EQ(run("cso" + cfg + corp + " --model-a " + (dir / "t.acdm").string() + " --model-b " +
                (dir / "s.acdm").string() + " -o " + (dir / "cso.json").string()),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "cso.json"))["pair"], (nlohmann::json{"t", "s"}));
}

}  // namespace
