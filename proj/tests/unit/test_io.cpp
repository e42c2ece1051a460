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

#include <bit>
#include <cstring>
#include <string>

#include <gtest/gtest.h>

#include "kdctc/io/container.hpp"
#include "kdctc/model/checkpoint.hpp"
#include "kdctc/numcore/errors.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

namespace kdctc::io {
namespace {

TEST(Container, ByteLayout) {
  const std::string bytes = encode_container({{"w", Tensor::matrix({{1.5, -2.0}})}});
  // magic + u16 + u32 + (u16 + 1 + u8 + 2*u32 + 2*f64)
  ASSERT_EQ(bytes.size(), 4u + 2 + 4 + 2 + 1 + 1 + 8 + 16);
  EXPECT_EQ(bytes.substr(0, 4), "ACDM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 1);  // one tensor
  EXPECT_EQ(bytes[10], 1);  // name length
  EXPECT_EQ(bytes[12], 'w');
  EXPECT_EQ(bytes[13], 2);  // rank
  EXPECT_EQ(bytes[14], 1);  // rows
  EXPECT_EQ(bytes[18], 2);  // cols
  std::uint64_t raw = 0;
  for (int i = 0; i < 8; ++i) raw |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[22 + i])) << (8 * i);
  EXPECT_EQ(std::bit_cast<double>(raw), 1.5);
}

TEST(Container, RoundTrip) {
  SeededRng rng(1);
  TensorBundle b{{"a", testing::random_matrix(rng, 3, 4)},
                 {"vec", Tensor::vector({1, 2, 3})},
                 {"cube", Tensor({2, 2, 2}, 0.25)}};
  const auto back = decode_container(encode_container(b));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].name, b[i].name);
    EXPECT_EQ(back[i].tensor, b[i].tensor);
  }
  EXPECT_EQ(find_tensor(back, "vec"), b[1].tensor);
  EXPECT_THROW(find_tensor(back, "nope"), DataError);
}

TEST(Container, CorruptInputRejected) {
  const std::string good = encode_container({{"x", Tensor::vector({1, 2})}});
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_container(bad_magic), DataError);
  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(decode_container(bad_version), DataError);
  EXPECT_THROW(decode_container(good.substr(0, good.size() - 1)), DataError);
  EXPECT_THROW(decode_container(good + "z"), DataError);
  EXPECT_THROW(decode_container(""), DataError);
}

TEST(Container, FileRoundTripAndSidecar) {
  testing::TempDir dir;
  const auto path = dir / "sub/t.acdm";
  write_container(path, {{"x", Tensor::vector({4, 5})}});
  EXPECT_EQ(find_tensor(read_container(path), "x"), Tensor::vector({4, 5}));
  EXPECT_EQ(sidecar_path(path).filename(), "t.acdm.json");
  write_json(sidecar_path(path), {{"k", 1}});
  EXPECT_EQ(read_json(sidecar_path(path))["k"], 1);
  EXPECT_THROW(read_container(dir / "missing.acdm"), DataError);
  write_bytes(dir / "bad.json", "{not json");
  EXPECT_THROW(read_json(dir / "bad.json"), DataError);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  testing::TempDir dir;
  const auto arch = model::ArchSpec{5, {4}, {3}, {4}, 11};
  SeededRng rng(2);
  const auto p = model::init_params(arch, rng);
  model::save_checkpoint(dir / "m.acdm", {p, ctc::Alphabet::standard(), {{"note", "x"}}});
  const auto ck = model::load_checkpoint(dir / "m.acdm");
  EXPECT_EQ(ck.params.arch(), arch);
  EXPECT_EQ(ck.params.flat(), p.flat());
  EXPECT_EQ(ck.alphabet.size(), 11);
  EXPECT_EQ(ck.meta["note"], "x");
}

}  // namespace
}  // namespace kdctc::io
