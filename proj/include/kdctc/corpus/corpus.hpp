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

#ifndef KDCTC_CORPUS_CORPUS_HPP
#define KDCTC_CORPUS_CORPUS_HPP

// Deterministic synthetic multi-accent corpus. Every character has a mean
// feature template; an accent bends some templates (blending toward another
// character, or shifting them), a speaker adds a fixed offset, each spoken
// character gets its own offset and each frame gets Gaussian jitter. Features are produced at the raw (pre-stacking) stage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/decode/decode.hpp"
#include "kdctc/frontend/features.hpp"
#include "kdctc/io/container.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/rng.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::corpus {

enum class Split { train, dev, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "'");
}

struct Substitution {
  std::string target;
  double weight = 0.0;  // 0 keeps the source template, 1 replaces it
};

struct AccentSpec {
  std::string name;
  std::map<std::string, Substitution> substitution_map;
  std::map<std::string, std::vector<double>> template_shift;
  double duration_scale = 1.0;

  bool is_identity() const {
    for (const auto& [c, s] : substitution_map)
      if (s.weight != 0.0 && s.target != c) return false;
    for (const auto& [c, v] : template_shift)
      for (double x : v)
        if (x != 0.0) return false;
    return true;
  }

  void validate() const {
    if (name.empty()) throw ConfigError("accent: empty name");
    if (!(duration_scale >= 0.5 && duration_scale <= 2.0)) {
      throw ConfigError("accent " + name + ": duration_scale must be in [0.5, 2]");
    }
    for (const auto& [c, s] : substitution_map) {
      if (!(s.weight >= 0.0 && s.weight <= 1.0)) {
        throw ConfigError("accent " + name + ": blend weight outside [0,1]");
      }
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json subs = nlohmann::json::object();
    for (const auto& [c, s] : substitution_map) subs[c] = {{"target", s.target}, {"weight", s.weight}};
    nlohmann::json shifts = nlohmann::json::object();
    for (const auto& [c, v] : template_shift) shifts[c] = v;
    return {{"name", name},
            {"substitution_map", subs},
            {"template_shift", shifts},
            {"duration_scale", duration_scale}};
  }

  static AccentSpec from_json(const nlohmann::json& j) {
    AccentSpec a;
    a.name = j.at("name").get<std::string>();
    const auto subs = j.value("substitution_map", nlohmann::json::object());
    for (const auto& [c, s] : subs.items()) {
      a.substitution_map[c] = {s.at("target").get<std::string>(), s.at("weight").get<double>()};
    }
    const auto shifts = j.value("template_shift", nlohmann::json::object());
    for (const auto& [c, v] : shifts.items()) {
      a.template_shift[c] = v.get<std::vector<double>>();
    }
    a.duration_scale = j.value("duration_scale", 1.0);
    a.validate();
    return a;
  }
};

/// Mean emission and duration of one character.
struct CharacterTemplate {
  std::string character;
  std::vector<double> mean;
  double duration_mean = 6.0;  // raw frames
  double duration_std = 1.5;
};

struct CorpusConfig {
  std::uint64_t seed = 1;
  std::vector<std::string> accents{"us", "ind", "his"};
  int speakers_per_accent = 12;
  int utts_per_speaker = 40;
  int min_chars = 3;
  int max_chars = 10;
  std::size_t feature_dim = 26;
  std::string letters = "adeinost";  // subset of the alphabet used in transcripts
  double template_scale = 1.0;
  double jitter_sigma = 0.7;
  double speaker_sigma = 0.3;
  double token_sigma = 0.0;  // per-character-occurrence offset, shared by its frames
  double duration_mean = 6.0;
  double duration_std = 1.5;
  int min_duration = 3;  // raw frames per character; >= keep_every keeps CTC feasible
  int edge_silence_min = 3;
  int edge_silence_max = 6;
  int repeat_gap = 3;  // silence frames between identical adjacent characters
  double space_prob = 0.2;
  double noise_prob = 0.1;
  // Accent presets.
  double ind_t_to_d = 0.6;
  double ind_i_to_e = 0.3;
  double his_vowel_shift = 0.55;

  void validate() const {
    if (accents.empty()) throw ConfigError("corpus: need at least one accent");
    if (speakers_per_accent < 3) throw ConfigError("corpus: need >= 3 speakers per accent");
    if (utts_per_speaker < 1) throw ConfigError("corpus: utts_per_speaker must be >= 1");
    if (min_chars < 1 || max_chars < min_chars) throw ConfigError("corpus: bad transcript lengths");
    if (feature_dim == 0) throw ConfigError("corpus: feature_dim must be > 0");
    if (min_duration < 3) {
      throw ConfigError("corpus: min_duration below 3 raw frames cannot survive decimation");
    }
    if (repeat_gap < 3) throw ConfigError("corpus: repeat_gap must be >= 3 raw frames");
    if (edge_silence_min < 0 || edge_silence_max < edge_silence_min) {
      throw ConfigError("corpus: bad edge silence range");
    }
    if (jitter_sigma < 0.0 || speaker_sigma < 0.0 || token_sigma < 0.0 || template_scale <= 0.0) {
      throw ConfigError("corpus: negative noise scale");
    }
    if (letters.empty()) throw ConfigError("corpus: no letters");
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"accents", accents},
            {"speakers_per_accent", speakers_per_accent},
            {"utts_per_speaker", utts_per_speaker},
            {"min_chars", min_chars},
            {"max_chars", max_chars},
            {"feature_dim", feature_dim},
            {"letters", letters},
            {"template_scale", template_scale},
            {"jitter_sigma", jitter_sigma},
            {"speaker_sigma", speaker_sigma},
            {"token_sigma", token_sigma},
            {"duration_mean", duration_mean},
            {"duration_std", duration_std},
            {"min_duration", min_duration},
            {"edge_silence_min", edge_silence_min},
            {"edge_silence_max", edge_silence_max},
            {"repeat_gap", repeat_gap},
            {"space_prob", space_prob},
            {"noise_prob", noise_prob},
            {"ind_t_to_d", ind_t_to_d},
            {"ind_i_to_e", ind_i_to_e},
            {"his_vowel_shift", his_vowel_shift}};
  }

  static CorpusConfig from_json(const nlohmann::json& j) {
    CorpusConfig c;
    try {
      c.seed = j.value("seed", c.seed);
      c.accents = j.value("accents", c.accents);
      c.speakers_per_accent = j.value("speakers_per_accent", c.speakers_per_accent);
      c.utts_per_speaker = j.value("utts_per_speaker", c.utts_per_speaker);
      c.min_chars = j.value("min_chars", c.min_chars);
      c.max_chars = j.value("max_chars", c.max_chars);
      c.feature_dim = j.value("feature_dim", c.feature_dim);
      c.letters = j.value("letters", c.letters);
      c.template_scale = j.value("template_scale", c.template_scale);
      c.jitter_sigma = j.value("jitter_sigma", c.jitter_sigma);
      c.speaker_sigma = j.value("speaker_sigma", c.speaker_sigma);
      c.token_sigma = j.value("token_sigma", c.token_sigma);
      c.duration_mean = j.value("duration_mean", c.duration_mean);
      c.duration_std = j.value("duration_std", c.duration_std);
      c.min_duration = j.value("min_duration", c.min_duration);
      c.edge_silence_min = j.value("edge_silence_min", c.edge_silence_min);
      c.edge_silence_max = j.value("edge_silence_max", c.edge_silence_max);
      c.repeat_gap = j.value("repeat_gap", c.repeat_gap);
      c.space_prob = j.value("space_prob", c.space_prob);
      c.noise_prob = j.value("noise_prob", c.noise_prob);
      c.ind_t_to_d = j.value("ind_t_to_d", c.ind_t_to_d);
      c.ind_i_to_e = j.value("ind_i_to_e", c.ind_i_to_e);
      c.his_vowel_shift = j.value("his_vowel_shift", c.his_vowel_shift);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("corpus config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct UtteranceRecord {
  std::string id;
  std::string speaker;
  std::string accent;
  ctc::LabelSequence transcript;
  frontend::FeatureSequence features;  // raw stage
  Split split = Split::train;
};

/// Generated corpus: configuration, symbol inventory, templates, accents
/// and utterances.
struct Corpus {
  CorpusConfig config;
  ctc::Alphabet alphabet = ctc::Alphabet::standard();
  std::map<std::string, CharacterTemplate> templates;  // keyed by symbol; "" is silence
  std::vector<AccentSpec> accents;
  std::vector<UtteranceRecord> utterances;

  const AccentSpec& accent(const std::string& name) const {
    for (const auto& a : accents)
      if (a.name == name) return a;
    throw ConfigError("corpus: unknown accent '" + name + "'");
  }

  std::vector<std::string> accent_names() const {
    std::vector<std::string> out;
    for (const auto& a : accents) out.push_back(a.name);
    return out;
  }
};

inline constexpr const char* kSilence = "";

/// Emission mean of `symbol` under `accent` (before speaker offset/jitter).
inline std::vector<double> accent_template(const Corpus& c, const AccentSpec& accent,
                                           const std::string& symbol) {
  std::vector<double> mean = c.templates.at(symbol).mean;
  if (auto it = accent.substitution_map.find(symbol); it != accent.substitution_map.end()) {
    const auto& other = c.templates.at(it->second.target).mean;
    const double w = it->second.weight;
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] = (1.0 - w) * mean[d] + w * other[d];
  }
  if (auto it = accent.template_shift.find(symbol); it != accent.template_shift.end()) {
    if (it->second.size() != mean.size()) throw ConfigError("accent shift has wrong dimension");
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += it->second[d];
  }
  return mean;
}

/// Built-in accents. "us" is the identity; "ind" blends the t template
/// toward d and the i template toward e; "his" moves each vowel part of the way toward the next vowel
/// in the cycle a -> e -> i -> o -> a. Unknown names get the identity.
inline AccentSpec accent_preset(const std::string& name, const CorpusConfig& cfg,
                                const std::map<std::string, CharacterTemplate>& templates) {
  AccentSpec a;
  a.name = name;
  if (name == "ind") {
    a.substitution_map["t"] = {"d", cfg.ind_t_to_d};
    if (cfg.ind_i_to_e > 0.0) a.substitution_map["i"] = {"e", cfg.ind_i_to_e};
    a.duration_scale = 0.9;
  } else if (name == "his") {
    const std::vector<std::pair<std::string, std::string>> chain{
        {"a", "e"}, {"e", "i"}, {"i", "o"}, {"o", "a"}};
    for (const auto& [from, to] : chain) {
      if (!templates.contains(from) || !templates.contains(to)) continue;
      const auto& src = templates.at(from).mean;
      const auto& dst = templates.at(to).mean;
      std::vector<double> shift(src.size());
      for (std::size_t d = 0; d < src.size(); ++d) shift[d] = cfg.his_vowel_shift * (dst[d] - src[d]);
      a.template_shift[from] = std::move(shift);
    }
    a.duration_scale = 1.1;
  }
  return a;
}

namespace detail {

inline std::vector<int> sample_transcript(SeededRng& rng, const CorpusConfig& cfg,
                                          const std::vector<int>& letters, const ctc::Alphabet& ab) {
  const int len = cfg.min_chars + static_cast<int>(rng.below(
                                      static_cast<std::uint64_t>(cfg.max_chars - cfg.min_chars + 1)));
  const bool noise_front = rng.uniform() < cfg.noise_prob;
  const bool noise_back = rng.uniform() < cfg.noise_prob;
  int body = len - static_cast<int>(noise_front) - static_cast<int>(noise_back);
  std::vector<int> out;
  if (noise_front && body >= 1) out.push_back(ab.noise());
  if (body < 1) body = len;
  for (int i = 0; i < body; ++i) {
    const bool can_space = i > 0 && i + 1 < body && !out.empty() && out.back() != ab.space();
    if (can_space && rng.uniform() < cfg.space_prob) {
      out.push_back(ab.space());
    } else {
      out.push_back(letters[rng.below(letters.size())]);
    }
  }
  if (noise_back && static_cast<int>(out.size()) < len) out.push_back(ab.noise());
  return out;
}

inline void emit(std::vector<std::vector<double>>& frames, const std::vector<double>& mean,
                 const std::vector<double>& offset, int count, double jitter, SeededRng& rng) {
  for (int f = 0; f < count; ++f) {
    std::vector<double> v(mean.size());
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = mean[d] + offset[d] + jitter * rng.normal();
    frames.push_back(std::move(v));
  }
}

}  // namespace detail

/// Speakers 0..n-1 of each accent are split train/dev/test in the ratio
/// 28:5:5, with at least one speaker in each split.
inline Split speaker_split(int speaker, int n_speakers) {
  const int held = std::max(1, static_cast<int>(std::lround(n_speakers * 5.0 / 38.0)));
  const int train = n_speakers - 2 * held;
  if (speaker < train) return Split::train;
  if (speaker < train + held) return Split::dev;
  return Split::test;
}

inline Corpus gen_corpus(const CorpusConfig& cfg, std::vector<AccentSpec> accents = {}) {
  cfg.validate();
  Corpus c;
  c.config = cfg;
  const auto& ab = c.alphabet;

  std::vector<int> letters;
  for (std::size_t i = 0; i < cfg.letters.size(); ++i) {
    letters.push_back(ab.index_of(cfg.letters.substr(i, 1)));
  }

  SeededRng trng(derive_seed(cfg.seed, "templates"));
  auto make_template = [&](const std::string& sym) {
    CharacterTemplate t{sym, std::vector<double>(cfg.feature_dim), cfg.duration_mean, cfg.duration_std};
    for (auto& v : t.mean) v = cfg.template_scale * trng.normal();
    c.templates[sym] = std::move(t);
  };
  make_template(kSilence);
  for (int i = 0; i < ab.size(); ++i)
    if (i != ab.blank()) make_template(ab.symbol(i));

  if (accents.empty()) {
    for (const auto& name : cfg.accents) accents.push_back(accent_preset(name, cfg, c.templates));
  }
  for (const auto& a : accents) {
    a.validate();
    for (const auto& [sym, sub] : a.substitution_map) {
      if (!c.templates.contains(sym) || !c.templates.contains(sub.target)) {
        throw ConfigError("accent " + a.name + ": substitution uses unknown symbol");
      }
    }
  }
  c.accents = std::move(accents);

  for (const auto& accent : c.accents) {
    std::map<std::string, std::vector<double>> emission;
    for (const auto& [sym, t] : c.templates) emission[sym] = accent_template(c, accent, sym);

    for (int s = 0; s < cfg.speakers_per_accent; ++s) {
      char spk_buf[32];
      std::snprintf(spk_buf, sizeof spk_buf, "%s_s%02d", accent.name.c_str(), s);
      const std::string speaker = spk_buf;
      SeededRng srng(derive_seed(cfg.seed, "speaker/" + speaker));
      std::vector<double> offset(cfg.feature_dim);
      for (auto& v : offset) v = cfg.speaker_sigma * srng.normal();

      for (int u = 0; u < cfg.utts_per_speaker; ++u) {
        char id_buf[48];
        std::snprintf(id_buf, sizeof id_buf, "%s_u%03d", speaker.c_str(), u);
        UtteranceRecord rec;
        rec.id = id_buf;
        rec.speaker = speaker;
        rec.accent = accent.name;
        rec.split = speaker_split(s, cfg.speakers_per_accent);

        SeededRng rng(derive_seed(cfg.seed, "utt/" + rec.id));
        rec.transcript.indices = detail::sample_transcript(rng, cfg, letters, ab);

        std::vector<std::vector<double>> frames;
        const auto& sil = emission.at(kSilence);
        auto edge = [&] {
          return cfg.edge_silence_min +
                 static_cast<int>(rng.below(static_cast<std::uint64_t>(
                     cfg.edge_silence_max - cfg.edge_silence_min + 1)));
        };
        detail::emit(frames, sil, offset, edge(), cfg.jitter_sigma, rng);
        int prev = -1;
        for (int sym : rec.transcript.indices) {
          if (sym == prev) detail::emit(frames, sil, offset, cfg.repeat_gap, cfg.jitter_sigma, rng);
          const auto& tmpl = c.templates.at(ab.symbol(sym));
          const double dur = accent.duration_scale * tmpl.duration_mean + tmpl.duration_std * rng.normal();
          const int n = std::max(cfg.min_duration, static_cast<int>(std::lround(dur)));
          if (cfg.token_sigma > 0.0) {
            std::vector<double> token = offset;
            for (auto& v : token) v += cfg.token_sigma * rng.normal();
            detail::emit(frames, emission.at(ab.symbol(sym)), token, n, cfg.jitter_sigma, rng);
          } else {
            detail::emit(frames, emission.at(ab.symbol(sym)), offset, n, cfg.jitter_sigma, rng);
          }
          prev = sym;
        }
        detail::emit(frames, sil, offset, edge(), cfg.jitter_sigma, rng);

        Tensor feats = Tensor::matrix(frames.size(), cfg.feature_dim);
        for (std::size_t t = 0; t < frames.size(); ++t)
          std::copy(frames[t].begin(), frames[t].end(), feats.row(t).begin());
        rec.features = {std::move(feats), 10.0, frontend::Provenance::raw};
        c.utterances.push_back(std::move(rec));
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// On-disk layout: <dir>/manifest.json and <dir>/feats/<id>.acdm

inline nlohmann::json manifest_json(const Corpus& c) {
  nlohmann::json templates = nlohmann::json::object();
  for (const auto& [sym, t] : c.templates) {
    templates[sym.empty() ? "<sil>" : sym] = {{"mean", t.mean},
                                              {"duration_mean", t.duration_mean},
                                              {"duration_std", t.duration_std}};
  }
  nlohmann::json accents = nlohmann::json::array();
  for (const auto& a : c.accents) accents.push_back(a.to_json());
  nlohmann::json utts = nlohmann::json::array();
  for (const auto& u : c.utterances) {
    utts.push_back({{"id", u.id},
                    {"speaker", u.speaker},
                    {"accent", u.accent},
                    {"split", to_string(u.split)},
                    {"transcript", u.transcript.text(c.alphabet)},
                    {"num_frames", u.features.num_frames()},
                    {"file", "feats/" + u.id + ".acdm"}});
  }
  return {{"seed", c.config.seed},
          {"config", c.config.to_json()},
          {"alphabet", c.alphabet.to_json()},
          {"templates", templates},
          {"accents", accents},
          {"utterances", utts}};
}

inline void save_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "feats");
  for (const auto& u : c.utterances) {
    io::write_container(dir / "feats" / (u.id + ".acdm"), {{"features", u.features.frames}});
  }
  io::write_json(dir / "manifest.json", manifest_json(c));
}

inline Corpus load_corpus(const std::filesystem::path& dir) {
  const auto m = io::read_json(dir / "manifest.json");
  Corpus c;
  try {
    c.config = CorpusConfig::from_json(m.at("config"));
    c.alphabet = ctc::Alphabet::from_json(m.at("alphabet"));
    for (const auto& [key, t] : m.at("templates").items()) {
      const std::string sym = key == "<sil>" ? "" : key;
      c.templates[sym] = {sym, t.at("mean").get<std::vector<double>>(),
                          t.at("duration_mean").get<double>(), t.at("duration_std").get<double>()};
    }
    for (const auto& a : m.at("accents")) c.accents.push_back(AccentSpec::from_json(a));
    for (const auto& u : m.at("utterances")) {
      UtteranceRecord r;
      r.id = u.at("id").get<std::string>();
      r.speaker = u.at("speaker").get<std::string>();
      r.accent = u.at("accent").get<std::string>();
      r.split = split_from_string(u.at("split").get<std::string>());
      r.transcript = ctc::LabelSequence::from_text(u.at("transcript").get<std::string>(), c.alphabet);
      const auto bundle = io::read_container(dir / u.at("file").get<std::string>());
      r.features = {io::find_tensor(bundle, "features"), 10.0, frontend::Provenance::raw};
      c.utterances.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Learnability guard: nearest-template frame classification + collapse.

/// CER (%) of decoding `data_accent` utterances by labelling each raw frame
/// with its nearest emission template under `template_accent` (silence maps
/// to blank), then collapsing.
inline double oracle_cer(const Corpus& c, const std::string& data_accent,
                         const std::string& template_accent) {
  const auto& acc = c.accent(template_accent);
  std::vector<std::pair<int, std::vector<double>>> table;
  for (const auto& [sym, t] : c.templates) {
    const int idx = sym.empty() ? c.alphabet.blank() : c.alphabet.index_of(sym);
    table.emplace_back(idx, accent_template(c, acc, sym));
  }
  std::vector<ctc::LabelSequence> hyps, refs;
  for (const auto& u : c.utterances) {
    if (u.accent != data_accent) continue;
    std::vector<int> path(u.features.num_frames());
    for (std::size_t t = 0; t < path.size(); ++t) {
      const auto x = u.features.frames.row(t);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [idx, mean] : table) {
        double d = 0.0;
        for (std::size_t k = 0; k < mean.size(); ++k) d += (x[k] - mean[k]) * (x[k] - mean[k]);
        if (d < best) {
          best = d;
          path[t] = idx;
        }
      }
    }
    hyps.push_back(ctc::collapse(path, c.alphabet.blank()));
    refs.push_back(u.transcript);
  }
  return decode::cer(hyps, refs);
}

/// Matched-template oracle CER per accent.
inline std::map<std::string, double> oracle_separability_check(const Corpus& c) {
  std::map<std::string, double> out;
  for (const auto& a : c.accents) out[a.name] = oracle_cer(c, a.name, a.name);
  return out;
}

}  // namespace kdctc::corpus

#endif  // KDCTC_CORPUS_CORPUS_HPP
