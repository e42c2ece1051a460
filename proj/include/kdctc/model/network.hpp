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

#ifndef KDCTC_MODEL_NETWORK_HPP
#define KDCTC_MODEL_NETWORK_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "kdctc/model/lstm.hpp"
#include "kdctc/model/params.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::model {

/// Cached values of one LSTM direction over an utterance.
struct DirectionTrace {
  Tensor gates;   // N x 4H, post-nonlinearity [i f g o]
  Tensor cell;    // N x H
  Tensor tanh_c;  // N x H
  Tensor hidden;  // N x H
};

struct BlstmTrace {
  DirectionTrace fwd;
  DirectionTrace bwd;
  Tensor output;  // N x 2H, [forward | backward]
};

/// Everything backward() needs from one forward() call.
struct ForwardTrace {
  Tensor input;
  std::vector<Tensor> ff_pre;   // post-ReLU
  std::vector<BlstmTrace> blstm;
  std::vector<Tensor> ff_post;  // post-ReLU
  std::uint64_t params_identity = 0;
  std::uint64_t params_version = 0;
};

struct ForwardResult {
  Tensor logits;  // N x |S|
  ForwardTrace trace;
};

namespace detail {

inline Tensor dense(const Tensor& x, std::span<const double> w, std::span<const double> b,
                    std::size_t out, bool relu) {
  const std::size_t n = x.rows(), in = x.cols();
  Tensor y = Tensor::matrix(n, out);
  kernels::gemm_nt(x.data(), w.data(), y.data(), n, in, out);
  for (std::size_t t = 0; t < n; ++t) {
    double* r = y.data() + t * out;
    for (std::size_t j = 0; j < out; ++j) {
      const double v = r[j] + b[j];
      r[j] = relu ? std::max(v, 0.0) : v;
    }
  }
  return y;
}

// dy is the gradient w.r.t. the layer output (post-activation); for ReLU
// layers it is masked in place. Returns the gradient w.r.t. x.
inline Tensor dense_backward(const Tensor& x, const Tensor& y, Tensor dy, std::span<const double> w,
                             std::span<double> dw, std::span<double> db, bool relu,
                             bool need_dx = true) {
  const std::size_t n = x.rows(), in = x.cols(), out = dy.cols();
  if (relu) {
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (y[i] <= 0.0) dy[i] = 0.0;
  }
  kernels::gemm_tn_acc(dy.data(), x.data(), dw.data(), n, out, in);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < out; ++j) db[j] += dy(t, j);
  Tensor dx;
  if (need_dx) {
    dx = Tensor::matrix(n, in);
    kernels::gemm_nn(dy.data(), w.data(), dx.data(), n, out, in);
  }
  return dx;
}

inline DirectionTrace lstm_direction(const Tensor& x, const LstmWeights& w, bool reverse) {
  const std::size_t n = x.rows(), hid = w.hidden;
  DirectionTrace tr{Tensor::matrix(n, 4 * hid), Tensor::matrix(n, hid), Tensor::matrix(n, hid),
                    Tensor::matrix(n, hid)};
  kernels::gemm_nt(x.data(), w.w_input.data(), tr.gates.data(), n, w.input, 4 * hid);
  const std::vector<double> zeros(hid, 0.0);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    auto g = tr.gates.row(t);
    for (std::size_t j = 0; j < 4 * hid; ++j) g[j] += w.bias[j];
    std::span<const double> h_prev = zeros, c_prev = zeros;
    if (step > 0) {
      const std::size_t p = reverse ? t + 1 : t - 1;
      h_prev = tr.hidden.row(p);
      c_prev = tr.cell.row(p);
    }
    kernels::gemm_nt(h_prev.data(), w.w_recurrent.data(), g.data(), 1, hid, 4 * hid, true);
    lstm_activate(g, c_prev, tr.cell.row(t), tr.tanh_c.row(t), tr.hidden.row(t));
  }
  return tr;
}

// d_hidden: N x H gradient w.r.t. this direction's outputs. Accumulates into
// dw_input / dw_recurrent / dbias and returns the gradient w.r.t. x.
inline Tensor lstm_direction_backward(const Tensor& x, const DirectionTrace& tr,
                                      const Tensor& d_hidden, const LstmWeights& w, bool reverse,
                                      std::span<double> dw_input, std::span<double> dw_recurrent,
                                      std::span<double> dbias, bool need_dx) {
  const std::size_t n = x.rows(), hid = w.hidden;
  Tensor d_pre = Tensor::matrix(n, 4 * hid);
  std::vector<double> dh_next(hid, 0.0), dc_next(hid, 0.0);
  for (std::size_t step = n; step-- > 0;) {
    const std::size_t t = reverse ? n - 1 - step : step;
    const bool has_prev = step > 0;
    const std::size_t p = reverse ? t + 1 : t - 1;
    const auto g = tr.gates.row(t);
    const auto tc = tr.tanh_c.row(t);
    auto da = d_pre.row(t);
    for (std::size_t j = 0; j < hid; ++j) {
      const double i = g[j], f = g[hid + j], gg = g[2 * hid + j], o = g[3 * hid + j];
      const double dh = d_hidden(t, j) + dh_next[j];
      const double d_o = dh * tc[j];
      const double dc = dh * o * (1.0 - tc[j] * tc[j]) + dc_next[j];
      const double c_prev = has_prev ? tr.cell(p, j) : 0.0;
      da[j] = dc * gg * i * (1.0 - i);
      da[hid + j] = dc * c_prev * f * (1.0 - f);
      da[2 * hid + j] = dc * i * (1.0 - gg * gg);
      da[3 * hid + j] = d_o * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    if (has_prev) {
      kernels::gemm_tn_acc(da.data(), tr.hidden.row(p).data(), dw_recurrent.data(), 1, 4 * hid, hid);
      kernels::gemm_nn(da.data(), w.w_recurrent.data(), dh_next.data(), 1, 4 * hid, hid);
    } else {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
    }
  }
  kernels::gemm_tn_acc(d_pre.data(), x.data(), dw_input.data(), n, 4 * hid, w.input);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < 4 * hid; ++j) dbias[j] += d_pre(t, j);
  Tensor dx;
  if (need_dx) {
    dx = Tensor::matrix(n, w.input);
    kernels::gemm_nn(d_pre.data(), w.w_input.data(), dx.data(), n, 4 * hid, w.input);
  }
  return dx;
}

inline LstmWeights lstm_weights(const ModelParams& p, const std::string& prefix, std::size_t hid,
                                std::size_t in) {
  return {p.view(prefix + ".w_input"), p.view(prefix + ".w_recurrent"), p.view(prefix + ".bias"),
          hid, in};
}

}  // namespace detail

/// Runs the network over one utterance (N x input_dim). Dense layers use
/// ReLU; each BLSTM layer concatenates its forward and backward outputs.
inline ForwardResult forward(const ModelParams& p, const Tensor& x) {
  const ArchSpec& a = p.arch();
  if (x.rank() != 2 || x.cols() != a.input_dim || x.rows() == 0) {
    throw ShapeError("forward: expected N x " + std::to_string(a.input_dim) + " input, got " +
                     Tensor::shape_string(x.dims()));
  }
  ForwardResult r;
  ForwardTrace& tr = r.trace;
  tr.input = x;
  tr.params_identity = p.identity();
  tr.params_version = p.version();

  const Tensor* h = &tr.input;
  for (std::size_t i = 0; i < a.ff_pre.size(); ++i) {
    const std::string pre = "ff_pre." + std::to_string(i);
    tr.ff_pre.push_back(detail::dense(*h, p.view(pre + ".weight"), p.view(pre + ".bias"),
                                      a.ff_pre[i], true));
    h = &tr.ff_pre.back();
  }
  tr.blstm.reserve(a.blstm.size());
  for (std::size_t i = 0; i < a.blstm.size(); ++i) {
    const std::size_t hid = a.blstm[i], in = h->cols();
    const std::string pre = "blstm." + std::to_string(i);
    BlstmTrace layer;
    layer.fwd = detail::lstm_direction(*h, detail::lstm_weights(p, pre + ".fwd", hid, in), false);
    layer.bwd = detail::lstm_direction(*h, detail::lstm_weights(p, pre + ".bwd", hid, in), true);
    layer.output = Tensor::matrix(h->rows(), 2 * hid);
    for (std::size_t t = 0; t < h->rows(); ++t) {
      auto o = layer.output.row(t);
      std::copy_n(layer.fwd.hidden.row(t).begin(), hid, o.begin());
      std::copy_n(layer.bwd.hidden.row(t).begin(), hid, o.begin() + static_cast<std::ptrdiff_t>(hid));
    }
    tr.blstm.push_back(std::move(layer));
    h = &tr.blstm.back().output;
  }
  for (std::size_t i = 0; i < a.ff_post.size(); ++i) {
    const std::string pre = "ff_post." + std::to_string(i);
    tr.ff_post.push_back(detail::dense(*h, p.view(pre + ".weight"), p.view(pre + ".bias"),
                                       a.ff_post[i], true));
    h = &tr.ff_post.back();
  }
  r.logits = detail::dense(*h, p.view("output.weight"), p.view("output.bias"), a.out_dim, false);
  return r;
}

/// Logits only; skips nothing but saves callers from holding the trace.
inline Tensor infer(const ModelParams& p, const Tensor& x) { return forward(p, x).logits; }

/// Adds d(loss)/d(params) to `grads`, where grad_logits = d(loss)/d(logits).
inline void backward_accumulate(const ModelParams& p, const ForwardTrace& tr,
                                const Tensor& grad_logits, ModelParams& grads) {
  if (tr.params_identity != p.identity() || tr.params_version != p.version()) {
    throw ContractError("backward: trace was recorded with different parameters");
  }
  const ArchSpec& a = p.arch();
  if (grads.arch() != a) throw ShapeError("backward: gradient buffer has a different arch");
  const std::size_t n = tr.input.rows();
  if (grad_logits.rank() != 2 || grad_logits.rows() != n || grad_logits.cols() != a.out_dim) {
    throw ShapeError("backward: grad_logits must be N x |S|");
  }
  auto top_input = [&](std::size_t post_idx) -> const Tensor& {
    if (post_idx > 0) return tr.ff_post[post_idx - 1];
    if (!tr.blstm.empty()) return tr.blstm.back().output;
    if (!tr.ff_pre.empty()) return tr.ff_pre.back();
    return tr.input;
  };

  const Tensor& out_in = top_input(a.ff_post.size());
  Tensor d = detail::dense_backward(out_in, Tensor{}, grad_logits, p.view("output.weight"),
                                    grads.mutable_view("output.weight"),
                                    grads.mutable_view("output.bias"), false);
  for (std::size_t i = a.ff_post.size(); i-- > 0;) {
    const std::string pre = "ff_post." + std::to_string(i);
    d = detail::dense_backward(top_input(i), tr.ff_post[i], std::move(d), p.view(pre + ".weight"),
                               grads.mutable_view(pre + ".weight"),
                               grads.mutable_view(pre + ".bias"), true);
  }
  for (std::size_t i = a.blstm.size(); i-- > 0;) {
    const std::size_t hid = a.blstm[i];
    const Tensor& x = i > 0 ? tr.blstm[i - 1].output : (tr.ff_pre.empty() ? tr.input : tr.ff_pre.back());
    const bool need_dx = i > 0 || !a.ff_pre.empty();
    Tensor d_fwd = Tensor::matrix(n, hid), d_bwd = Tensor::matrix(n, hid);
    for (std::size_t t = 0; t < n; ++t) {
      const auto row = d.row(t);
      std::copy_n(row.begin(), hid, d_fwd.row(t).begin());
      std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(hid), hid, d_bwd.row(t).begin());
    }
    const std::string pre = "blstm." + std::to_string(i);
    Tensor dx;
    for (const bool reverse : {false, true}) {
      const std::string dir = pre + (reverse ? ".bwd" : ".fwd");
      Tensor part = detail::lstm_direction_backward(
          x, reverse ? tr.blstm[i].bwd : tr.blstm[i].fwd, reverse ? d_bwd : d_fwd,
          detail::lstm_weights(p, dir, hid, x.cols()), reverse, grads.mutable_view(dir + ".w_input"),
          grads.mutable_view(dir + ".w_recurrent"), grads.mutable_view(dir + ".bias"), need_dx);
      if (!need_dx) continue;
      if (dx.empty()) {
        dx = std::move(part);
      } else {
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += part[k];
      }
    }
    d = std::move(dx);
  }
  for (std::size_t i = a.ff_pre.size(); i-- > 0;) {
    const std::string pre = "ff_pre." + std::to_string(i);
    const Tensor& x = i > 0 ? tr.ff_pre[i - 1] : tr.input;
    d = detail::dense_backward(x, tr.ff_pre[i], std::move(d), p.view(pre + ".weight"),
                               grads.mutable_view(pre + ".weight"), grads.mutable_view(pre + ".bias"),
                               true, i > 0);
  }
}

/// Gradients shaped like `p`.
inline ModelParams backward(const ModelParams& p, const ForwardTrace& tr, const Tensor& grad_logits) {
  ModelParams grads = ModelParams::zeros_like(p);
  backward_accumulate(p, tr, grad_logits, grads);
  return grads;
}

}  // namespace kdctc::model

#endif  // KDCTC_MODEL_NETWORK_HPP
