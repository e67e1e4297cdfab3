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

// Normalized phase difference (NPD) between two microphone spectrograms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"

namespace mixclust {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct NpdMap {
  Eigen::MatrixXd values;  // seconds of delay, F x T
  BoolMatrix valid;        // false on the DC row and on silent bins

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::size_t valid_count() const { return static_cast<std::size_t>(valid.count()); }
};

// Per bin: the principal angle of M2 * conj(M1) divided by the angular
// frequency, which equals the planted delay dt of a source rendered as
// m2(t) = m1(t + dt). A bin is silent when both magnitudes fall more than
// `silence_floor_db` below the largest magnitude of its frame.
inline NpdMap normalized_phase_difference(const Spectrogram& m1, const Spectrogram& m2,
                                          double silence_floor_db = -60.0) {
  if (m1.bins.rows() != m2.bins.rows() || m1.bins.cols() != m2.bins.cols())
    throw InvalidInput("npd: spectrogram shapes differ");
  if (!(m1.config == m2.config)) throw InvalidInput("npd: spectrogram configs differ");
  const Eigen::Index nbins = m1.bins.rows(), frames = m1.bins.cols();
  const double floor_ratio = std::pow(10.0, silence_floor_db / 20.0);

  NpdMap out;
  out.values = Eigen::MatrixXd::Zero(nbins, frames);
  out.valid = BoolMatrix::Constant(nbins, frames, false);
  for (Eigen::Index m = 0; m < frames; ++m) {
    const double peak = std::max(m1.bins.col(m).cwiseAbs().maxCoeff(), m2.bins.col(m).cwiseAbs().maxCoeff());
    if (!(peak > 0.0)) continue;
    const double threshold = peak * floor_ratio;
    for (Eigen::Index k = 1; k < nbins; ++k) {
      const auto a = m1.bins(k, m), b = m2.bins(k, m);
      if (std::abs(a) < threshold && std::abs(b) < threshold) continue;
      double phi = std::arg(b * std::conj(a));
      if (phi <= -std::numbers::pi) phi = std::numbers::pi;  // (-pi, pi]; real bins can land on -pi
      out.values(k, m) = phi / m1.config.omega(static_cast<std::size_t>(k));
      out.valid(k, m) = true;
    }
  }
  return out;
}

struct Histogram {
  std::vector<double> edges;  // bin_count + 1 edges, seconds
  std::vector<std::size_t> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

// Counts valid NPD values in `bin_count` equal bins over [-range, range].
// Values outside the range are not counted.
inline Histogram npd_histogram(const NpdMap& npd, std::size_t bin_count, double range) {
  if (bin_count < 2) throw InvalidInput("histogram: need at least two bins");
  if (!(range > 0)) throw InvalidInput("histogram: range must be positive");
  Histogram h;
  h.edges.resize(bin_count + 1);
  for (std::size_t i = 0; i <= bin_count; ++i) {
    h.edges[i] = -range + 2.0 * range * static_cast<double>(i) / static_cast<double>(bin_count);
  }
  h.counts.assign(bin_count, 0);
  const double width = 2.0 * range / static_cast<double>(bin_count);
  for (Eigen::Index m = 0; m < npd.cols(); ++m) {
    for (Eigen::Index k = 0; k < npd.rows(); ++k) {
      if (!npd.valid(k, m)) continue;
      const double v = npd.values(k, m);
      if (v < -range || v > range) continue;
      auto idx = static_cast<std::size_t>((v + range) / width);
      h.counts[std::min(idx, bin_count - 1)] += 1;
    }
  }
  return h;
}

// Indices of local maxima of the 3-bin moving average whose prominence
// (height above the higher of the two valleys separating it from taller
// peaks or the edges) is at least `min_fraction` of the highest smoothed
// count. Plateaus count once.
inline std::vector<std::size_t> histogram_peaks(const Histogram& h, double min_fraction = 0.1) {
  const std::size_t n = h.counts.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j <= std::min(n - 1, i + 1); ++j) acc += static_cast<double>(h.counts[j]);
    s[i] = acc / 3.0;
  }
  const double top = n ? *std::max_element(s.begin(), s.end()) : 0.0;
  std::vector<std::size_t> peaks;
  if (!(top > 0.0)) return peaks;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;  // plateau [i, j]
    const bool left = i == 0 || s[i - 1] < s[i];
    const bool right = j + 1 == n || s[j + 1] < s[i];
    if (left && right) {
      double lmin = s[i], rmin = s[i];
      for (std::size_t k = i; k-- > 0 && s[k] <= s[i];) lmin = std::min(lmin, s[k]);
      for (std::size_t k = j + 1; k < n && s[k] <= s[i]; ++k) rmin = std::min(rmin, s[k]);
      if (s[i] - std::max(lmin, rmin) >= min_fraction * top) peaks.push_back((i + j) / 2);
    }
    i = j + 1;
  }
  return peaks;
}

inline void write_histogram_csv(const std::string& path, const Histogram& h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("histogram: cannot write " + path);
  out.precision(10);
  out << "bin_left_seconds,bin_right_seconds,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  }
}

// Median of valid NPD values weighted by |M1|^2 of each bin.
inline double energy_weighted_median(const NpdMap& npd, const Spectrogram& m1) {
  std::vector<std::pair<double, double>> items;
  double total = 0.0;
  for (Eigen::Index m = 0; m < npd.cols(); ++m) {
    for (Eigen::Index k = 0; k < npd.rows(); ++k) {
      if (!npd.valid(k, m)) continue;
      const double w = std::norm(m1.bins(k, m));
      items.emplace_back(npd.values(k, m), w);
      total += w;
    }
  }
  if (items.empty() || !(total > 0)) throw InvalidInput("npd: no valid bins");
  std::sort(items.begin(), items.end());
  double acc = 0.0;
  for (const auto& [v, w] : items) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return items.back().first;
}

}  // namespace mixclust
