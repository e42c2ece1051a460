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

#ifndef KDCTC_CTC_ALPHABET_HPP
#define KDCTC_CTC_ALPHABET_HPP

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/numcore/errors.hpp"

namespace kdctc::ctc {

/// Output symbol inventory: characters plus blank, space and noise.
/// Every symbol is a single UTF-8 encoded character.
class Alphabet {
 public:
  Alphabet(std::vector<std::string> symbols, int blank_index, int space_index, int noise_index)
      : symbols_(std::move(symbols)),
        blank_(blank_index),
        space_(space_index),
        noise_(noise_index) {
    const int n = size();
    auto in_range = [n](int i) { return i >= 0 && i < n; };
    if (!in_range(blank_) || !in_range(space_) || !in_range(noise_)) {
      throw ConfigError("alphabet: special index out of range");
    }
    if (blank_ == space_ || blank_ == noise_ || space_ == noise_) {
      throw ConfigError("alphabet: blank, space and noise indices must be distinct");
    }
    std::set<std::string> seen(symbols_.begin(), symbols_.end());
    if (seen.size() != symbols_.size()) throw ConfigError("alphabet: duplicate symbol");
    for (const auto& s : symbols_) {
      if (s.empty()) throw ConfigError("alphabet: empty symbol");
    }
  }

  /// Blank first (so lowest-index tie-breaking favours it), eight letters,
  /// then space and noise.
  static Alphabet standard() {
    return Alphabet({"_", "a", "d", "e", "i", "n", "o", "s", "t", " ", "#"}, 0, 9, 10);
  }

  int size() const noexcept { return static_cast<int>(symbols_.size()); }
  int blank() const noexcept { return blank_; }
  int space() const noexcept { return space_; }
  int noise() const noexcept { return noise_; }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  const std::string& symbol(int i) const { return symbols_.at(static_cast<std::size_t>(i)); }

  int index_of(std::string_view sym) const {
    for (int i = 0; i < size(); ++i)
      if (symbols_[i] == sym) return i;
    throw DataError("alphabet: unknown symbol '" + std::string(sym) + "'");
  }

  /// Letters that may appear in transcripts (everything except blank).
  std::vector<int> letters() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (i != blank_ && i != space_ && i != noise_) out.push_back(i);
    return out;
  }

  std::vector<int> encode(std::string_view text) const {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < text.size()) {
      const auto lead = static_cast<unsigned char>(text[i]);
      const std::size_t len = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
      const int idx = index_of(text.substr(i, len));
      if (idx == blank_) throw DataError("alphabet: blank symbol inside transcript");
      out.push_back(idx);
      i += len;
    }
    return out;
  }

  std::string decode(std::span<const int> labels) const {
    std::string out;
    for (int l : labels) out += symbol(l);
    return out;
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

  nlohmann::json to_json() const {
    return {{"symbols", symbols_}, {"blank", blank_}, {"space", space_}, {"noise", noise_}};
  }

  static Alphabet from_json(const nlohmann::json& j) {
    try {
      return Alphabet(j.at("symbols").get<std::vector<std::string>>(), j.at("blank").get<int>(),
                      j.at("space").get<int>(), j.at("noise").get<int>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("alphabet: ") + e.what());
    }
  }

 private:
  std::vector<std::string> symbols_;
  int blank_;
  int space_;
  int noise_;
};

/// Target transcript as alphabet indices; never contains blank.
struct LabelSequence {
  std::vector<int> indices;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  friend bool operator==(const LabelSequence&, const LabelSequence&) = default;
  friend auto operator<=>(const LabelSequence&, const LabelSequence&) = default;

  std::string text(const Alphabet& a) const { return a.decode(indices); }

  static LabelSequence from_text(std::string_view text, const Alphabet& a) {
    return {a.encode(text)};
  }
};

/// Merges adjacent duplicates, then deletes blanks.
inline LabelSequence collapse(std::span<const int> path, int blank) {
  LabelSequence out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.indices.push_back(s);
    prev = s;
  }
  return out;
}

/// Smallest frame count that admits an alignment: one frame per label plus a
/// separating blank between each adjacent repeat.
inline std::size_t min_frames(const LabelSequence& label) {
  std::size_t n = label.size();
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label.indices[i] == label.indices[i - 1]) ++n;
  return n;
}

}  // namespace kdctc::ctc

#endif  // KDCTC_CTC_ALPHABET_HPP
