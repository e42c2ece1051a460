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

#ifndef KDCTC_MODEL_ARCH_HPP
#define KDCTC_MODEL_ARCH_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/numcore/errors.hpp"

namespace kdctc::model {

/// Layer widths of the FF -> BLSTM -> FF -> output network.
struct ArchSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> ff_pre;
  std::vector<std::size_t> blstm;  // per direction
  std::vector<std::size_t> ff_post;
  std::size_t out_dim = 0;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;

  void validate() const {
    auto check = [](std::size_t w, const char* what) {
      if (w == 0) throw ConfigError(std::string("arch: zero-width ") + what);
    };
    check(input_dim, "input");
    check(out_dim, "output");
    for (auto w : ff_pre) check(w, "ff_pre layer");
    for (auto w : blstm) check(w, "blstm layer");
    for (auto w : ff_post) check(w, "ff_post layer");
  }

  /// Closed-form parameter count.
  std::size_t param_count() const {
    std::size_t n = 0, in = input_dim;
    for (auto w : ff_pre) {
      n += in * w + w;
      in = w;
    }
    for (auto h : blstm) {
      n += 2 * (4 * h * in + 4 * h * h + 4 * h);
      in = 2 * h;
    }
    for (auto w : ff_post) {
      n += in * w + w;
      in = w;
    }
    return n + in * out_dim + out_dim;
  }

  /// Desk-scale default.
  static ArchSpec desk(std::size_t input_dim, std::size_t out_dim) {
    return {input_dim, {64, 64}, {48, 48}, {64, 64}, out_dim};
  }

  /// Two 500-unit dense layers, two BLSTM layers of 300 per direction, two
  /// 500-unit dense layers.
  static ArchSpec full(std::size_t input_dim, std::size_t out_dim) {
    return {input_dim, {500, 500}, {300, 300}, {500, 500}, out_dim};
  }

  nlohmann::json to_json() const {
    return {{"input_dim", input_dim}, {"ff_pre", ff_pre}, {"blstm", blstm},
            {"ff_post", ff_post},     {"out_dim", out_dim}};
  }

  static ArchSpec from_json(const nlohmann::json& j) {
    try {
      ArchSpec a{j.at("input_dim").get<std::size_t>(), j.at("ff_pre").get<std::vector<std::size_t>>(),
                 j.at("blstm").get<std::vector<std::size_t>>(),
                 j.at("ff_post").get<std::vector<std::size_t>>(), j.at("out_dim").get<std::size_t>()};
      a.validate();
      return a;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("arch: ") + e.what());
    }
  }
};

}  // namespace kdctc::model

#endif  // KDCTC_MODEL_ARCH_HPP
