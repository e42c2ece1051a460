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

#ifndef KDCTC_MODEL_PARAMS_HPP
#define KDCTC_MODEL_PARAMS_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kdctc/io/container.hpp"
#include "kdctc/model/arch.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/rng.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::model {

struct ParamSlot {
  std::string name;
  std::vector<std::size_t> dims;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// All weights and biases of one network, stored in a single flat buffer with
/// named views. Gradients use the same type and layout.
///
/// Every instance carries an identity (fresh on construction and copy) and a
/// version bumped by each mutable access, so a ForwardTrace can tell whether
/// the parameters it was recorded with are still the ones in hand.
class ModelParams {
 public:
  ModelParams() = default;

  explicit ModelParams(ArchSpec arch) : arch_(std::move(arch)) {
    arch_.validate();
    build_layout();
    flat_ = Tensor({total_}, 0.0);
  }

  ModelParams(const ModelParams& o)
      : arch_(o.arch_), slots_(o.slots_), total_(o.total_), flat_(o.flat_), identity_(next_identity()) {}
  ModelParams& operator=(const ModelParams& o) {
    if (this != &o) {
      arch_ = o.arch_;
      slots_ = o.slots_;
      total_ = o.total_;
      flat_ = o.flat_;
      identity_ = next_identity();
      version_ = 0;
    }
    return *this;
  }
  ModelParams(ModelParams&&) noexcept = default;
  ModelParams& operator=(ModelParams&&) noexcept = default;

  static ModelParams zeros_like(const ModelParams& p) { return ModelParams(p.arch()); }

  static ModelParams from_flat(const ArchSpec& arch, const Tensor& flat) {
    ModelParams p(arch);
    if (flat.size() != p.total_) throw ShapeError("params: flat vector has wrong length");
    p.flat_ = Tensor({p.total_}, flat.values());
    return p;
  }

  const ArchSpec& arch() const noexcept { return arch_; }
  const std::vector<ParamSlot>& slots() const noexcept { return slots_; }
  std::size_t size() const noexcept { return total_; }

  const Tensor& flat() const noexcept { return flat_; }
  Tensor& mutable_flat() noexcept {
    ++version_;
    return flat_;
  }

  std::span<const double> view(const std::string& name) const {
    const auto& s = slot(name);
    return {flat_.data() + s.offset, s.size};
  }
  std::span<double> mutable_view(const std::string& name) {
    const auto& s = slot(name);
    ++version_;
    return {flat_.data() + s.offset, s.size};
  }

  const ParamSlot& slot(const std::string& name) const {
    for (const auto& s : slots_)
      if (s.name == name) return s;
    throw ShapeError("params: no slot named " + name);
  }

  std::uint64_t identity() const noexcept { return identity_; }
  std::uint64_t version() const noexcept { return version_; }

  io::TensorBundle to_bundle() const {
    io::TensorBundle b;
    for (const auto& s : slots_) {
      std::vector<double> data(flat_.data() + s.offset, flat_.data() + s.offset + s.size);
      b.push_back({s.name, Tensor(s.dims, std::move(data))});
    }
    return b;
  }

  static ModelParams from_bundle(const ArchSpec& arch, const io::TensorBundle& bundle) {
    ModelParams p(arch);
    for (const auto& s : p.slots_) {
      const Tensor& t = io::find_tensor(bundle, s.name);
      if (t.dims() != s.dims) throw DataError("params: tensor " + s.name + " has wrong shape");
      std::copy(t.values().begin(), t.values().end(), p.flat_.data() + s.offset);
    }
    return p;
  }

 private:
  static std::uint64_t next_identity() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  void add(std::string name, std::vector<std::size_t> dims) {
    const std::size_t n = Tensor::extent(dims);
    slots_.push_back({std::move(name), std::move(dims), total_, n});
    total_ += n;
  }

  void build_layout() {
    std::size_t in = arch_.input_dim;
    for (std::size_t i = 0; i < arch_.ff_pre.size(); ++i) {
      const auto w = arch_.ff_pre[i];
      add("ff_pre." + std::to_string(i) + ".weight", {w, in});
      add("ff_pre." + std::to_string(i) + ".bias", {w});
      in = w;
    }
    for (std::size_t i = 0; i < arch_.blstm.size(); ++i) {
      const auto h = arch_.blstm[i];
      for (const char* dir : {"fwd", "bwd"}) {
        const std::string p = "blstm." + std::to_string(i) + "." + dir;
        add(p + ".w_input", {4 * h, in});
        add(p + ".w_recurrent", {4 * h, h});
        add(p + ".bias", {4 * h});
      }
      in = 2 * h;
    }
    for (std::size_t i = 0; i < arch_.ff_post.size(); ++i) {
      const auto w = arch_.ff_post[i];
      add("ff_post." + std::to_string(i) + ".weight", {w, in});
      add("ff_post." + std::to_string(i) + ".bias", {w});
      in = w;
    }
    add("output.weight", {arch_.out_dim, in});
    add("output.bias", {arch_.out_dim});
  }

  ArchSpec arch_;
  std::vector<ParamSlot> slots_;
  std::size_t total_ = 0;
  Tensor flat_;
  std::uint64_t identity_ = next_identity();
  std::uint64_t version_ = 0;
};

/// Weights ~ U(+-sqrt(6 / (fan_in + fan_out))), biases zero, LSTM forget-gate
/// bias 1.
inline ModelParams init_params(const ArchSpec& arch, SeededRng& rng) {
  ModelParams p(arch);
  auto& flat = p.mutable_flat();
  for (const auto& s : p.slots()) {
    double* dst = flat.data() + s.offset;
    if (s.dims.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(s.dims[0] + s.dims[1]));
      for (std::size_t i = 0; i < s.size; ++i) dst[i] = rng.uniform(-limit, limit);
    } else if (s.name.starts_with("blstm.")) {
      const std::size_t h = s.size / 4;
      for (std::size_t i = h; i < 2 * h; ++i) dst[i] = 1.0;
    }
  }
  return p;
}

}  // namespace kdctc::model

#endif  // KDCTC_MODEL_PARAMS_HPP
