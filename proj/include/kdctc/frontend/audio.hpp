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

#ifndef KDCTC_FRONTEND_AUDIO_HPP
#define KDCTC_FRONTEND_AUDIO_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <fftw3.h>

#include "kdctc/frontend/features.hpp"
#include "kdctc/io/container.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::frontend {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  double sample_rate = 16000.0;

  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / sample_rate;
  }
};

inline constexpr double kEnergyFloor = 1e-10;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Splits the waveform into overlapping windows; a trailing partial window
/// is dropped.
inline std::vector<std::vector<double>> frame_signal(const Waveform& w, double win_ms = 25.0,
                                                     double hop_ms = 10.0) {
  if (!(hop_ms > 0.0 && win_ms >= hop_ms)) {
    throw ConfigError("frame_signal: need win_ms >= hop_ms > 0");
  }
  if (w.sample_rate <= 0.0) throw ConfigError("frame_signal: sample_rate must be positive");
  const auto win = static_cast<std::size_t>(std::llround(win_ms * w.sample_rate / 1000.0));
  const auto hop = static_cast<std::size_t>(std::llround(hop_ms * w.sample_rate / 1000.0));
  if (w.samples.size() < win || win == 0) {
    throw DataError("frame_signal: waveform shorter than one window");
  }
  const std::size_t count = (w.samples.size() - win) / hop + 1;
  std::vector<std::vector<double>> frames(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto first = w.samples.begin() + static_cast<std::ptrdiff_t>(i * hop);
    frames[i].assign(first, first + static_cast<std::ptrdiff_t>(win));
  }
  return frames;
}

/// Center frequencies (Hz) of the triangular filters.
inline std::vector<double> mel_centers(double sample_rate, int n_filters) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(static_cast<std::size_t>(n_filters));
  for (int m = 0; m < n_filters; ++m) centers[m] = mel_to_hz(top * (m + 1) / (n_filters + 1));
  return centers;
}

/// Log energies of `n_filters` triangular mel filters over the power spectrum
/// of one Hamming-windowed frame, zero-padded to a power of two.
inline Tensor mel_filterbank(const std::vector<double>& frame, double sample_rate,
                             int n_filters = 26) {
  if (frame.empty()) throw DataError("mel_filterbank: empty frame");
  if (n_filters < 1) throw ConfigError("mel_filterbank: n_filters must be >= 1");
  const std::size_t fft_len = std::bit_ceil(frame.size());
  const std::size_t n_bins = fft_len / 2 + 1;

  std::vector<double> in(fft_len, 0.0);
  const std::size_t n = frame.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double hamming =
        n == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    in[i] = frame[i] * hamming;
  }
  std::vector<fftw_complex> out(n_bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(fft_len), in.data(), out.data(),
                                        FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  std::vector<double> power(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];

  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_filters) + 2);
  for (std::size_t m = 0; m < edges.size(); ++m) {
    edges[m] = mel_to_hz(top * static_cast<double>(m) / (n_filters + 1));
  }
  Tensor energies({static_cast<std::size_t>(n_filters)});
  for (int m = 0; m < n_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double e = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = sample_rate * static_cast<double>(k) / static_cast<double>(fft_len);
      double wgt = 0.0;
      if (f > lo && f <= mid) wgt = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) wgt = (hi - f) / (hi - mid);
      e += wgt * power[k];
    }
    energies[m] = std::log(std::max(e, kEnergyFloor));
  }
  return energies;
}

/// 25/10 ms framing followed by the mel filterbank: the raw-feature stage.
inline FeatureSequence waveform_features(const Waveform& w, int n_filters = 26,
                                         double win_ms = 25.0, double hop_ms = 10.0) {
  const auto frames = frame_signal(w, win_ms, hop_ms);
  Tensor out = Tensor::matrix(frames.size(), static_cast<std::size_t>(n_filters));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Tensor e = mel_filterbank(frames[t], w.sample_rate, n_filters);
    std::copy(e.values().begin(), e.values().end(), out.row(t).begin());
  }
  return {std::move(out), hop_ms, Provenance::raw};
}

/// 16-bit PCM mono RIFF/WAVE.
inline Waveform decode_wav(std::string_view bytes) {
  io::detail::Reader in(bytes);
  if (in.take(4) != "RIFF") throw DataError("wav: missing RIFF header");
  in.get_le<std::uint32_t>();
  if (in.take(4) != "WAVE") throw DataError("wav: not a WAVE file");
  Waveform w;
  bool have_fmt = false;
  while (true) {
    const auto id = in.take(4);
    const auto size = in.get_le<std::uint32_t>();
    if (id == "fmt ") {
      const auto chunk = in.take(size);
      io::detail::Reader fmt(chunk);
      const auto format = fmt.get_le<std::uint16_t>();
      const auto channels = fmt.get_le<std::uint16_t>();
      const auto rate = fmt.get_le<std::uint32_t>();
      fmt.get_le<std::uint32_t>();
      fmt.get_le<std::uint16_t>();
      const auto bits = fmt.get_le<std::uint16_t>();
      if (format != 1 || channels != 1 || bits != 16) {
        throw DataError("wav: only 16-bit PCM mono is supported");
      }
      w.sample_rate = rate;
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("wav: data chunk before fmt chunk");
      const auto data = in.take(size);
      io::detail::Reader pcm(data);
      w.samples.resize(size / 2);
      for (auto& s : w.samples) {
        s = static_cast<std::int16_t>(pcm.get_le<std::uint16_t>()) / 32768.0;
      }
      if (w.samples.empty()) throw DataError("wav: no samples");
      return w;
    } else {
      in.take(size + (size & 1u));
    }
  }
}

inline std::string encode_wav(const Waveform& w) {
  std::string out = "RIFF";
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  io::detail::put_le<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  io::detail::put_le<std::uint32_t>(out, 16);
  io::detail::put_le<std::uint16_t>(out, 1);
  io::detail::put_le<std::uint16_t>(out, 1);
  const auto rate = static_cast<std::uint32_t>(w.sample_rate);
  io::detail::put_le<std::uint32_t>(out, rate);
  io::detail::put_le<std::uint32_t>(out, rate * 2);
  io::detail::put_le<std::uint16_t>(out, 2);
  io::detail::put_le<std::uint16_t>(out, 16);
  out += "data";
  io::detail::put_le<std::uint32_t>(out, data_bytes);
  for (double s : w.samples) {
    const auto q = static_cast<std::int16_t>(std::clamp<long>(std::lround(s * 32768.0), -32768, 32767));
    io::detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

inline Waveform load_wav(const std::filesystem::path& path) {
  return decode_wav(io::read_bytes(path));
}

}  // namespace kdctc::frontend

#endif  // KDCTC_FRONTEND_AUDIO_HPP
