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


#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mixclust {
namespace {

using testing::brute_force_frame;
using testing::random_waveform;

double rel_interior_error(const Waveform& a, const Waveform& b, std::size_t edge) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = edge; i + edge < a.size(); ++i) {
    num += (a.samples[i] - b.samples[i]) * (a.samples[i] - b.samples[i]);
    den += a.samples[i] * a.samples[i];
  }
  return std::sqrt(num / den);
}

TEST(Stft, TwoSecondClipShape) {
  Rng rng(1);
  const Spectrogram s = stft(random_waveform(rng, 32000), StftConfig{});
  EXPECT_EQ(s.num_bins(), 257u);
  EXPECT_EQ(s.num_frames(), 247u);
}

TEST(Stft, FrameCountFormula) {
  const StftConfig cfg;
  for (std::size_t n : {512u, 513u, 639u, 640u, 1000u, 32000u}) EXPECT_EQ(frame_count(n, cfg), (n - 512) / 128 + 1) << n;
  EXPECT_EQ(frame_count(511, cfg), 0u);
}

TEST(Stft, ZerosGiveZeros) {
  const Spectrogram s = stft(Waveform{std::vector<double>(4000, 0.0), 16000.0}, StftConfig{});
  EXPECT_EQ(s.bins.cwiseAbs().maxCoeff(), 0.0);
  const Waveform w = istft(s);
  for (double v : w.samples) EXPECT_EQ(v, 0.0);
}

TEST(Stft, MatchesBruteForceDft) {
  Rng rng(2);
  const StftConfig cfg;
  const Waveform x = random_waveform(rng, 2000);
  const Spectrogram s = stft(x, cfg);
  const auto window = analysis_window(cfg);
  for (std::size_t m : {std::size_t{0}, std::size_t{5}, frame_count(2000, cfg) - 1}) {
    const auto ref = brute_force_frame(x.samples, m * cfg.hop, window);
    for (std::size_t k = 0; k < ref.size(); ++k)
      EXPECT_LT(std::abs(s.bins(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) - ref[k]), 1e-9);
  }
}

// A bin-centred cosine under a sqrt-Hann window spreads into neighbouring
// rows (about -9.5 dB at +-1 and -23.5 dB at +-2); rows three or more bins
// away fall below -30 dB.
TEST(Stft, BinCentredCosineConcentratesAtItsRow) {
  const StftConfig cfg;
  for (std::size_t k : {10u, 64u, 200u}) {
    Waveform x;
    for (std::size_t t = 0; t < 4096; ++t)
      x.samples.push_back(std::cos(2.0 * std::numbers::pi * static_cast<double>(k * t) / 512.0));
    const Spectrogram s = stft(x, cfg);
    const auto window = analysis_window(cfg);
    const auto ref = brute_force_frame(x.samples, 3 * cfg.hop, window);
    Eigen::Index arg;
    s.bins.col(3).cwiseAbs().maxCoeff(&arg);
    EXPECT_EQ(arg, static_cast<Eigen::Index>(k));
    const double peak = std::norm(ref[k]);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      EXPECT_LT(std::abs(s.bins(static_cast<Eigen::Index>(j), 3) - ref[j]), 1e-8);
      if (j + 3 <= k || j >= k + 3) EXPECT_LT(10.0 * std::log10(std::norm(ref[j]) / peak + 1e-300), -30.0) << j;
    }
  }
}

TEST(Stft, RoundTripWhiteNoiseBelowMinus60dB) {
  Rng rng(3);
  const Waveform x = random_waveform(rng, 32000);
  const Waveform y = istft(stft(x, StftConfig{}), x.size());
  const double err = rel_interior_error(x, y, 512);
  EXPECT_LT(20.0 * std::log10(err), -60.0);
  EXPECT_LT(err, 1e-6);
}

TEST(Stft, RoundTripPropertyOverLengths) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 512 + 3 * 128 + rng.index(5000);
    const Waveform x = random_waveform(rng, n);
    const Waveform y = istft(stft(x, StftConfig{}), n);
    ASSERT_EQ(y.size(), n);
    EXPECT_LT(rel_interior_error(x, y, 512), 1e-6) << n;
  }
}

TEST(Stft, IdentityMaskMatchesPlainRoundTrip) {
  Rng rng(5);
  const Waveform x = random_waveform(rng, 6000);
  Spectrogram s = stft(x, StftConfig{});
  const Waveform plain = istft(s, x.size());
  s.bins = (s.bins.array() * 1.0).matrix();
  const Waveform masked = istft(s, x.size());
  EXPECT_EQ(plain.samples, masked.samples);
}

TEST(Stft, Linearity) {
  Rng rng(6);
  const Waveform x = random_waveform(rng, 3000), y = random_waveform(rng, 3000);
  Waveform z = x;
  for (std::size_t i = 0; i < z.size(); ++i) z.samples[i] = 2.5 * x.samples[i] - 0.75 * y.samples[i];
  const StftConfig cfg;
  const Eigen::MatrixXcd lhs = stft(z, cfg).bins;
  const Eigen::MatrixXcd rhs = 2.5 * stft(x, cfg).bins - 0.75 * stft(y, cfg).bins;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Stft, Parseval) {
  Rng rng(7);
  const StftConfig cfg;
  const Waveform x = random_waveform(rng, 3000);
  const Spectrogram s = stft(x, cfg);
  const auto w = analysis_window(cfg);
  for (std::size_t m = 0; m < s.num_frames(); ++m) {
    double time = 0.0;
    for (std::size_t i = 0; i < cfg.fft_size; ++i) time += std::pow(x.samples[m * cfg.hop + i] * w[i], 2);
    double freq = std::norm(s.bins(0, static_cast<Eigen::Index>(m))) + std::norm(s.bins(256, static_cast<Eigen::Index>(m)));
    for (Eigen::Index k = 1; k < 256; ++k) freq += 2.0 * std::norm(s.bins(k, static_cast<Eigen::Index>(m)));
    freq /= static_cast<double>(cfg.fft_size);
    EXPECT_NEAR(freq / time, 1.0, 1e-8);
  }
}

TEST(Stft, RejectsShortSignals) {
  EXPECT_THROW(stft(Waveform{std::vector<double>(511, 0.0), 16000.0}, StftConfig{}), InvalidInput);
}

TEST(Stft, RejectsRateMismatchAndNonFinite) {
  EXPECT_THROW(stft(Waveform{std::vector<double>(1000, 0.0), 8000.0}, StftConfig{}), InvalidInput);
  std::vector<double> x(1000, 0.0);
  x[10] = std::nan("");
  EXPECT_THROW(stft(Waveform{x, 16000.0}, StftConfig{}), InvalidInput);
}

TEST(Stft, ConfigValidation) {
  StftConfig c;
  c.fft_size = 500;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.hop = 384;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.hop = 512;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Istft, RejectsBinMismatch) {
  Spectrogram s;
  s.bins = Eigen::MatrixXcd::Zero(100, 4);
  EXPECT_THROW(istft(s), InvalidInput);
}

TEST(Istft, WindowIsCola) {
  const StftConfig cfg;
  const auto w = analysis_window(cfg);
  for (std::size_t i = 0; i < cfg.hop; ++i) {
    double acc = 0.0;
    for (std::size_t j = i; j < cfg.fft_size; j += cfg.hop) acc += w[j] * w[j];
    EXPECT_NEAR(acc, 2.0, 1e-12);
  }
}

}  // namespace
}  // namespace mixclust
