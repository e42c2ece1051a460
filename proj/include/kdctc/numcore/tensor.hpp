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

#ifndef KDCTC_NUMCORE_TENSOR_HPP
#define KDCTC_NUMCORE_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kdctc/numcore/errors.hpp"

namespace kdctc {

/// Dense row-major tensor of doubles. Rank 1 and 2 are what the library
/// actually uses; higher ranks only round-trip through the container format.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0)
      : dims_(std::move(dims)), data_(extent(dims_), fill) {}

  Tensor(std::vector<std::size_t> dims, std::vector<double> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != extent(dims_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match dims " + shape_string(dims_));
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const {
    require_rank(2);
    return dims_[0];
  }
  std::size_t cols() const {
    require_rank(2);
    return dims_[1];
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * dims_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dims_[1] + c]; }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * dims_[1], dims_[1]};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * dims_[1], dims_[1]};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  Tensor transposed() const {
    require_rank(2);
    Tensor out = matrix(dims_[1], dims_[0]);
    for (std::size_t r = 0; r < dims_[0]; ++r)
      for (std::size_t c = 0; c < dims_[1]; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

  static std::size_t extent(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  static std::string shape_string(const std::vector<std::size_t>& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
    os << ']';
    return os.str();
  }

 private:
  void require_rank(std::size_t r) const {
    if (dims_.size() != r) {
      throw ShapeError("expected rank " + std::to_string(r) + ", got " +
                       shape_string(dims_));
    }
  }

  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

/// Standard matrix product.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + Tensor::shape_string(a.dims()) +
                     " by " + Tensor::shape_string(b.dims()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * brow[j];
    }
  }
  return out;
}

namespace kernels {

// out[n x m] (+)= x[n x k] * w[m x k]^T. Rows of both operands are contiguous.
inline void gemm_nt(const double* x, const double* w, double* out, std::size_t n,
                    std::size_t k, std::size_t m, bool accumulate = false) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xr = x + i * k;
    double* o = out + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* wr = w + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += xr[p] * wr[p];
      o[j] = accumulate ? o[j] + s : s;
    }
  }
}

// dw[m x k] += dy[n x m]^T * x[n x k]
inline void gemm_tn_acc(const double* dy, const double* x, double* dw, std::size_t n,
                        std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* dyr = dy + i * m;
    const double* xr = x + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double g = dyr[j];
      if (g == 0.0) continue;
      double* dwr = dw + j * k;
      for (std::size_t p = 0; p < k; ++p) dwr[p] += g * xr[p];
    }
  }
}

// dx[n x k] (+)= dy[n x m] * w[m x k]
inline void gemm_nn(const double* dy, const double* w, double* dx, std::size_t n,
                    std::size_t m, std::size_t k, bool accumulate = false) {
  for (std::size_t i = 0; i < n; ++i) {
    double* dxr = dx + i * k;
    if (!accumulate) std::fill(dxr, dxr + k, 0.0);
    const double* dyr = dy + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double g = dyr[j];
      if (g == 0.0) continue;
      const double* wr = w + j * k;
      for (std::size_t p = 0; p < k; ++p) dxr[p] += g * wr[p];
    }
  }
}

}  // namespace kernels

}  // namespace kdctc

#endif  // KDCTC_NUMCORE_TENSOR_HPP
