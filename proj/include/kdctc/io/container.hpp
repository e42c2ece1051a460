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

#ifndef KDCTC_IO_CONTAINER_HPP
#define KDCTC_IO_CONTAINER_HPP

// Binary tensor container shared by models, features, soft targets and
// dumped posteriors:
//
//   "ACDM" | version u16 | count u32 |
//   count x ( name_len u16 | name bytes | rank u8 | dims u32[rank] |
//             data f64[prod(dims)] )
//
// All integers and floats are little-endian. An optional JSON sidecar lives
// next to the file as "<file>.json".

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::io {

inline constexpr std::string_view kMagic = "ACDM";
inline constexpr std::uint16_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using TensorBundle = std::vector<NamedTensor>;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("container: truncated data");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_container(const TensorBundle& bundle) {
  std::string out(kMagic);
  detail::put_le<std::uint16_t>(out, kContainerVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.size()));
  for (const auto& [name, t] : bundle) {
    if (name.size() > 0xFFFF) throw DataError("container: tensor name too long");
    if (t.rank() > 0xFF) throw DataError("container: rank too large");
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(t.rank()));
    for (std::size_t d : t.dims()) {
      detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.values()) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline TensorBundle decode_container(std::string_view bytes) {
  detail::Reader in(bytes);
  if (in.take(4) != kMagic) throw DataError("container: bad magic");
  const auto version = in.get_le<std::uint16_t>();
  if (version != kContainerVersion) {
    throw DataError("container: unsupported version " + std::to_string(version));
  }
  const auto count = in.get_le<std::uint32_t>();
  TensorBundle bundle;
  bundle.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get_le<std::uint16_t>();
    std::string name(in.take(name_len));
    const auto rank = in.get_le<std::uint8_t>();
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = in.get_le<std::uint32_t>();
    std::vector<double> data(Tensor::extent(dims));
    for (auto& v : data) v = std::bit_cast<double>(in.get_le<std::uint64_t>());
    bundle.push_back({std::move(name), Tensor(std::move(dims), std::move(data))});
  }
  if (!in.done()) throw DataError("container: trailing bytes");
  return bundle;
}

inline void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void write_container(const std::filesystem::path& path, const TensorBundle& bundle) {
  write_bytes(path, encode_container(bundle));
}

inline TensorBundle read_container(const std::filesystem::path& path) {
  return decode_container(read_bytes(path));
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_bytes(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_bytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline const Tensor& find_tensor(const TensorBundle& bundle, std::string_view name) {
  for (const auto& nt : bundle)
    if (nt.name == name) return nt.tensor;
  throw DataError("container: no tensor named '" + std::string(name) + "'");
}

}  // namespace kdctc::io

#endif  // KDCTC_IO_CONTAINER_HPP
