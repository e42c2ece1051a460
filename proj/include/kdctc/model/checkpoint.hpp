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

#ifndef KDCTC_MODEL_CHECKPOINT_HPP
#define KDCTC_MODEL_CHECKPOINT_HPP

#include <filesystem>

#include <nlohmann/json.hpp>

#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/io/container.hpp"
#include "kdctc/model/params.hpp"

namespace kdctc::model {

struct Checkpoint {
  ModelParams params;
  ctc::Alphabet alphabet = ctc::Alphabet::standard();
  nlohmann::json meta = nlohmann::json::object();
};

/// Writes <path> (tensors) and <path>.json (arch, alphabet, free-form meta).
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  io::write_container(path, ck.params.to_bundle());
  io::write_json(io::sidecar_path(path), {{"arch", ck.params.arch().to_json()},
                                          {"alphabet", ck.alphabet.to_json()},
                                          {"meta", ck.meta}});
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto side = io::read_json(io::sidecar_path(path));
  if (!side.contains("arch") || !side.contains("alphabet")) {
    throw DataError("checkpoint sidecar lacks arch/alphabet: " + path.string());
  }
  const auto arch = ArchSpec::from_json(side.at("arch"));
  return {ModelParams::from_bundle(arch, io::read_container(path)),
          ctc::Alphabet::from_json(side.at("alphabet")), side.value("meta", nlohmann::json::object())};
}

}  // namespace kdctc::model

#endif  // KDCTC_MODEL_CHECKPOINT_HPP
