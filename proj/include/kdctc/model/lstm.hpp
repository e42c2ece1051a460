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

#ifndef KDCTC_MODEL_LSTM_HPP
#define KDCTC_MODEL_LSTM_HPP

#include <cmath>
#include <span>
#include <vector>

#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::model {

/// Weights of one LSTM direction. Gate rows are stacked as [i; f; g; o].
struct LstmWeights {
  std::span<const double> w_input;      // 4H x in
  std::span<const double> w_recurrent;  // 4H x H
  std::span<const double> bias;         // 4H
  std::size_t hidden = 0;
  std::size_t input = 0;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// Turns pre-activations (4H) into gate values in place, then writes c and h.
inline void lstm_activate(std::span<double> gates, std::span<const double> c_prev,
                          std::span<double> c, std::span<double> tanh_c, std::span<double> h) {
  const std::size_t hid = c.size();
  for (std::size_t j = 0; j < hid; ++j) {
    const double i = sigmoid(gates[j]);
    const double f = sigmoid(gates[hid + j]);
    const double g = std::tanh(gates[2 * hid + j]);
    const double o = sigmoid(gates[3 * hid + j]);
    gates[j] = i;
    gates[hid + j] = f;
    gates[2 * hid + j] = g;
    gates[3 * hid + j] = o;
    c[j] = f * c_prev[j] + i * g;
    tanh_c[j] = std::tanh(c[j]);
    h[j] = o * tanh_c[j];
  }
}

}  // namespace detail

/// One step of a standard LSTM cell (no peepholes, no projection):
///   i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
inline LstmState lstm_cell_step(const LstmWeights& w, std::span<const double> x,
                                std::span<const double> h_prev, std::span<const double> c_prev) {
  const std::size_t hid = w.hidden;
  if (x.size() != w.input || h_prev.size() != hid || c_prev.size() != hid ||
      w.w_input.size() != 4 * hid * w.input || w.w_recurrent.size() != 4 * hid * hid ||
      w.bias.size() != 4 * hid) {
    throw ShapeError("lstm_cell_step: inconsistent shapes");
  }
  std::vector<double> gates(w.bias.begin(), w.bias.end());
  kernels::gemm_nt(x.data(), w.w_input.data(), gates.data(), 1, w.input, 4 * hid, true);
  kernels::gemm_nt(h_prev.data(), w.w_recurrent.data(), gates.data(), 1, hid, 4 * hid, true);
  LstmState out{std::vector<double>(hid), std::vector<double>(hid)};
  std::vector<double> tanh_c(hid);
  detail::lstm_activate(gates, c_prev, out.c, tanh_c, out.h);
  return out;
}

}  // namespace kdctc::model

#endif  // KDCTC_MODEL_LSTM_HPP
