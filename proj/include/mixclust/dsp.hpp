// Copyright 2026 The mixclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Short-time Fourier analysis and overlap-add synthesis.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "mixclust/error.hpp"

namespace mixclust {

enum class WindowKind { kSqrtHann };

struct StftConfig {
  std::size_t fft_size = 512;
  std::size_t hop = 128;
  WindowKind window = WindowKind::kSqrtHann;
  double sample_rate = 16000.0;

  std::size_t bins() const { return fft_size / 2 + 1; }
  double bin_hz(std::size_t k) const { return static_cast<double>(k) * sample_rate / fft_size; }
  // Angular frequency of bin k in radians per second.
  double omega(std::size_t k) const { return 2.0 * std::numbers::pi * bin_hz(k); }

  // A periodic Hann window is COLA for every hop that divides the frame into
  // at least two pieces, so the checks below are sufficient.
  void validate() const {
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
      throw InvalidInput("stft: fft_size must be a power of two");
    if (hop == 0 || fft_size % hop != 0) throw InvalidInput("stft: hop must divide fft_size");
    if (fft_size < 2 * hop) throw InvalidInput("stft: fft_size must be at least twice the hop");
    if (!(sample_rate > 0) || !std::isfinite(sample_rate))
      throw InvalidInput("stft: sample_rate must be positive");
  }

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  std::size_t size() const { return samples.size(); }
};

struct Spectrogram {
  Eigen::MatrixXcd bins;  // F rows (frequency) x T columns (frames)
  StftConfig config;

  std::size_t num_bins() const { return static_cast<std::size_t>(bins.rows()); }
  std::size_t num_frames() const { return static_cast<std::size_t>(bins.cols()); }
};

inline std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.fft_size);
  const double n = static_cast<double>(cfg.fft_size);
  for (std::size_t i = 0; i < cfg.fft_size; ++i) {
    // periodic Hann, square-rooted so analysis * synthesis = Hann
    w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n));
  }
  return w;
}

// Frames lying fully inside a signal of `length` samples; no padding.
inline std::size_t frame_count(std::size_t length, const StftConfig& cfg) {
  if (length < cfg.fft_size) return 0;
  return (length - cfg.fft_size) / cfg.hop + 1;
}

inline std::size_t covered_length(std::size_t frames, const StftConfig& cfg) {
  return frames == 0 ? 0 : (frames - 1) * cfg.hop + cfg.fft_size;
}

inline Spectrogram stft(const Waveform& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.sample_rate != cfg.sample_rate) throw InvalidInput("stft: sample rate mismatch");
  if (x.size() < cfg.fft_size) throw InvalidInput("stft: signal shorter than one frame");
  for (double v : x.samples) {
    if (!std::isfinite(v)) throw InvalidInput("stft: non-finite sample");
  }
  const std::size_t frames = frame_count(x.size(), cfg);
  const std::size_t nbins = cfg.bins();
  const auto window = analysis_window(cfg);

  Spectrogram out;
  out.config = cfg;
  out.bins.resize(static_cast<Eigen::Index>(nbins), static_cast<Eigen::Index>(frames));

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(cfg.fft_size);
  std::vector<std::complex<double>> spec;
  for (std::size_t m = 0; m < frames; ++m) {
    const double* src = x.samples.data() + m * cfg.hop;
    for (std::size_t i = 0; i < cfg.fft_size; ++i) frame[i] = src[i] * window[i];
    fft.fwd(spec, frame);
    for (std::size_t k = 0; k < nbins; ++k) {
      out.bins(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = spec[k];
    }
  }
  return out;
}

// Weighted overlap-add with the analysis window as synthesis window. Output
// is normalised by the accumulated squared window, which is constant on the
// fully overlapped interior. `length` pads (or truncates) the result; 0 means
// the span covered by the frames.
inline Waveform istft(const Spectrogram& spec, std::size_t length = 0) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.num_bins() != cfg.bins()) throw InvalidInput("istft: bin count does not match config");
  const std::size_t frames = spec.num_frames();
  const std::size_t span = covered_length(frames, cfg);
  if (length == 0) length = span;

  const auto window = analysis_window(cfg);
  std::vector<double> acc(std::max(span, length), 0.0);
  std::vector<double> norm(acc.size(), 0.0);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> column(cfg.bins());
  std::vector<double> frame;
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t k = 0; k < cfg.bins(); ++k) {
      column[k] = spec.bins(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
    }
    // DC and Nyquist must be real for a real frame
    column.front() = column.front().real();
    column.back() = column.back().real();
    fft.inv(frame, column, static_cast<int>(cfg.fft_size));
    const std::size_t offset = m * cfg.hop;
    for (std::size_t i = 0; i < cfg.fft_size; ++i) {
      acc[offset + i] += frame[i] * window[i];
      norm[offset + i] += window[i] * window[i];
    }
  }

  Waveform out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(length, 0.0);
  const std::size_t n = std::min(length, span);
  for (std::size_t i = 0; i < n; ++i) {
    if (norm[i] > 1e-10) out.samples[i] = acc[i] / norm[i];
  }
  return out;
}

}  // namespace mixclust
