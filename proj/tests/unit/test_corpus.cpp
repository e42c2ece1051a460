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

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "kdctc/corpus/corpus.hpp"
#include "kdctc/frontend/features.hpp"
#include "kdctc/numcore/errors.hpp"
#include "support/tempdir.hpp"

namespace kdctc::corpus {
namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.speakers_per_accent = 4;
  c.utts_per_speaker = 6;
  return c;
}

TEST(Corpus, DeterministicInMemoryAndOnDisk) {
  const auto a = gen_corpus(small_config());
  const auto b = gen_corpus(small_config());
  EXPECT_EQ(manifest_json(a).dump(), manifest_json(b).dump());
  ASSERT_EQ(a.utterances.size(), b.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i)
    EXPECT_EQ(a.utterances[i].features.frames, b.utterances[i].features.frames);

  testing::TempDir d1, d2;
  save_corpus(a, d1.path());
  save_corpus(b, d2.path());
  EXPECT_EQ(io::read_bytes(d1 / "manifest.json"), io::read_bytes(d2 / "manifest.json"));
  for (const auto& u : a.utterances) {
    const std::string f = "feats/" + u.id + ".acdm";
    ASSERT_EQ(io::read_bytes(d1 / f), io::read_bytes(d2 / f)) << f;
  }
}

TEST(Corpus, DifferentSeedsDiffer) {
  auto cfg = small_config();
  const auto a = gen_corpus(cfg);
  cfg.seed = 2;
  const auto b = gen_corpus(cfg);
  EXPECT_NE(manifest_json(a).dump(), manifest_json(b).dump());
}

TEST(Corpus, SaveLoadRoundTrip) {
  const auto a = gen_corpus(small_config());
  testing::TempDir dir;
  save_corpus(a, dir.path());
  const auto b = load_corpus(dir.path());
  EXPECT_EQ(manifest_json(a).dump(), manifest_json(b).dump());
  for (std::size_t i = 0; i < a.utterances.size(); ++i)
    EXPECT_EQ(a.utterances[i].features.frames, b.utterances[i].features.frames);
  EXPECT_THROW(load_corpus(dir / "nothing"), DataError);
}

TEST(Corpus, IdentityAccentEmitsBaseTemplates) {
  auto cfg = small_config();
  cfg.accents = {"us"};
  cfg.jitter_sigma = 0.0;
  cfg.speaker_sigma = 0.0;
  cfg.token_sigma = 0.0;
  const auto c = gen_corpus(cfg);
  ASSERT_TRUE(c.accents[0].is_identity());
  std::set<std::vector<double>> means;
  for (const auto& [sym, t] : c.templates) means.insert(t.mean);
  for (const auto& u : c.utterances)
    for (std::size_t t = 0; t < u.features.num_frames(); ++t) {
      const auto r = u.features.frames.row(t);
      ASSERT_TRUE(means.contains(std::vector<double>(r.begin(), r.end())));
    }
}

TEST(Corpus, DefaultSizesAndIds) {
  const auto c = gen_corpus({});
  EXPECT_EQ(c.utterances.size(), 3u * 12 * 40);
  std::set<std::string> ids;
  for (const auto& u : c.utterances) ids.insert(u.id);
  EXPECT_EQ(ids.size(), c.utterances.size());
  EXPECT_EQ(c.utterances.front().id, "us_s00_u000");
}

TEST(Corpus, SpeakersNeverShareSplits) {
  const auto c = gen_corpus(small_config());
  std::map<std::string, Split> seen;
  for (const auto& u : c.utterances) {
    auto [it, fresh] = seen.emplace(u.speaker, u.split);
    EXPECT_EQ(it->second, u.split) << u.speaker;
  }
  std::map<Split, int> per_split;
  for (int s = 0; s < 12; ++s) ++per_split[speaker_split(s, 12)];
  EXPECT_EQ(per_split[Split::train], 8);
  EXPECT_EQ(per_split[Split::dev], 2);
  EXPECT_EQ(per_split[Split::test], 2);
  for (int n = 3; n <= 40; ++n) {
    std::set<Split> splits;
    for (int s = 0; s < n; ++s) splits.insert(speaker_split(s, n));
    EXPECT_EQ(splits.size(), 3u) << n;
  }
}

TEST(Corpus, EveryUtteranceFeasibleAfterFrontend) {
  const auto c = gen_corpus({});
  for (const auto& u : c.utterances) {
    ASSERT_FALSE(u.transcript.empty());
    for (int s : u.transcript.indices) ASSERT_NE(s, c.alphabet.blank());
    const auto f = frontend::apply_frontend(u.features, {});
    ASSERT_GE(f.num_frames(), ctc::min_frames(u.transcript)) << u.id;
  }
}

TEST(Corpus, ConfigValidation) {
  auto bad = small_config();
  bad.speakers_per_accent = 2;
  EXPECT_THROW(gen_corpus(bad), ConfigError);
  bad = small_config();
  bad.min_duration = 2;
  EXPECT_THROW(gen_corpus(bad), ConfigError);
  bad = small_config();
  bad.accents = {};
  EXPECT_THROW(gen_corpus(bad), ConfigError);
  EXPECT_THROW(CorpusConfig::from_json({{"utts_per_speaker", "many"}}), ConfigError);
  AccentSpec wide{"x", {}, {}, 3.0};
  EXPECT_THROW(gen_corpus(small_config(), {wide}), ConfigError);
  AccentSpec heavy{"x", {{"t", {"d", 1.5}}}, {}, 1.0};
  EXPECT_THROW(gen_corpus(small_config(), {heavy}), ConfigError);
}

TEST(Corpus, TokenOffsetSharedWithinCharacter) {
  auto cfg = small_config();
  cfg.accents = {"us"};
  cfg.jitter_sigma = 0.0;
  cfg.speaker_sigma = 0.0;
  cfg.token_sigma = 0.5;
  for (const auto& u : gen_corpus(cfg).utterances) {
    std::set<std::vector<double>> rows;
    for (std::size_t t = 0; t < u.features.num_frames(); ++t) {
      const auto r = u.features.frames.row(t);
      rows.insert(std::vector<double>(r.begin(), r.end()));
    }
    // One row per spoken character plus the shared silence row.
    EXPECT_LE(rows.size(), u.transcript.indices.size() + 1) << u.id;
    EXPECT_GT(rows.size(), 1u) << u.id;
  }
}

TEST(Corpus, ConfigJsonRoundTrip) {
  auto cfg = small_config();
  cfg.jitter_sigma = 0.25;
  cfg.token_sigma = 0.125;
  cfg.ind_i_to_e = 0.25;
  cfg.accents = {"ind"};
  EXPECT_EQ(CorpusConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
}

TEST(Oracle, ZeroJitterIsPerfect) {
  auto cfg = small_config();
  cfg.jitter_sigma = 0.0;
  cfg.speaker_sigma = 0.0;
  cfg.token_sigma = 0.0;
  for (const auto& [accent, v] : oracle_separability_check(gen_corpus(cfg))) EXPECT_EQ(v, 0.0) << accent;
}

TEST(Oracle, DefaultCorpusIsLearnable) {
  const auto c = gen_corpus({});
  for (const auto& [accent, v] : oracle_separability_check(c)) EXPECT_LT(v, 15.0) << accent;
}

TEST(Oracle, MismatchedTemplatesAreWorse) {
  const auto c = gen_corpus({});
  for (const auto& data : c.accents) {
    if (data.is_identity()) continue;
    const double matched = oracle_cer(c, data.name, data.name);
    for (const auto& other : c.accents) {
      if (other.name == data.name) continue;
      EXPECT_GT(oracle_cer(c, data.name, other.name), matched) << data.name << " with " << other.name;
    }
  }
}

TEST(Oracle, JitterSweepApproachesChance) {
  auto cfg = small_config();
  cfg.accents = {"us"};
  cfg.token_sigma = 0.0;
  double prev = -1.0;
  for (double jitter : {0.0, 0.5, 1.0, 2.0, 4.0, 16.0}) {
    cfg.jitter_sigma = jitter;
    const double v = oracle_cer(gen_corpus(cfg), "us", "us");
    EXPECT_GE(v, prev) << "jitter " << jitter;
    prev = v;
  }
  EXPECT_GT(prev, 90.0);
}

TEST(Oracle, TokenOffsetSweepIsMonotone) {
  auto cfg = small_config();
  cfg.accents = {"us"};
  cfg.jitter_sigma = 0.0;
  double prev = -1.0;
  for (double sigma : {0.0, 0.5, 1.0, 2.0, 8.0}) {
    cfg.token_sigma = sigma;
    const double v = oracle_cer(gen_corpus(cfg), "us", "us");
    EXPECT_GE(v, prev) << "token sigma " << sigma;
    prev = v;
  }
  EXPECT_GT(prev, 50.0);
}

TEST(Accents, PresetsFollowTheirDescription) {
  const auto c = gen_corpus(small_config());
  const auto& ind = c.accent("ind");
  EXPECT_EQ(ind.substitution_map.at("t").target, "d");
  EXPECT_DOUBLE_EQ(ind.substitution_map.at("t").weight, 0.6);
  const auto t = accent_template(c, ind, "t");
  const auto& base_t = c.templates.at("t").mean;
  const auto& base_d = c.templates.at("d").mean;
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(t[k], 0.4 * base_t[k] + 0.6 * base_d[k], 1e-12);
  EXPECT_EQ(ind.substitution_map.at("i").target, "e");
  EXPECT_DOUBLE_EQ(ind.substitution_map.at("i").weight, 0.3);
  const auto i = accent_template(c, ind, "i");
  const auto& base_i = c.templates.at("i").mean;
  const auto& base_e = c.templates.at("e").mean;
  for (std::size_t k = 0; k < i.size(); ++k) EXPECT_NEAR(i[k], 0.7 * base_i[k] + 0.3 * base_e[k], 1e-12);
  const auto& his = c.accent("his");
  EXPECT_EQ(his.template_shift.size(), 4u);
  EXPECT_FALSE(his.is_identity());
  EXPECT_TRUE(c.accent("us").is_identity());
  EXPECT_THROW(c.accent("aus"), ConfigError);

  auto t_only = small_config();
  t_only.ind_i_to_e = 0.0;
  EXPECT_EQ(gen_corpus(t_only).accent("ind").substitution_map.size(), 1u);
}

TEST(Accents, JsonRoundTrip) {
  const auto c = gen_corpus(small_config());
  for (const auto& a : c.accents) EXPECT_EQ(AccentSpec::from_json(a.to_json()).to_json(), a.to_json());
}

}  // namespace
}  // namespace kdctc::corpus
