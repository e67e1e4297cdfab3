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

// Binary masks (dominant source, clustered phase difference), training
// targets and mask application.
//
// Bins are vectorised frequency-fastest: row index = frame * F + bin. The
// network output uses the same order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixclust/clustering.hpp"
#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/features.hpp"
#include "mixclust/rng.hpp"

namespace mixclust {

using LabelMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline Eigen::Index vec_index(Eigen::Index bin, Eigen::Index frame, Eigen::Index num_bins) {
  return frame * num_bins + bin;
}

struct BinaryMask {
  LabelMatrix assignments;  // F x T, source index per bin
  std::size_t n_sources = 0;

  Eigen::Index rows() const { return assignments.rows(); }
  Eigen::Index cols() const { return assignments.cols(); }
};

enum class TargetKind { kDs, kBpd, kRpd };

inline std::string to_string(TargetKind k) {
  switch (k) {
    case TargetKind::kDs: return "DS";
    case TargetKind::kBpd: return "BPD";
    case TargetKind::kRpd: return "RPD";
  }
  return "DS";
}

inline TargetKind parse_target_kind(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "DS") return TargetKind::kDs;
  if (s == "BPD") return TargetKind::kBpd;
  if (s == "RPD") return TargetKind::kRpd;
  throw ConfigError("unknown target kind '" + s + "' (expected ds, bpd or rpd)");
}

struct PartitionTarget {
  TargetKind kind = TargetKind::kDs;
  Eigen::MatrixXd matrix;  // L x C
};

inline PartitionTarget one_hot(const BinaryMask& mask, TargetKind kind = TargetKind::kDs) {
  const Eigen::Index f = mask.rows(), t = mask.cols();
  PartitionTarget y;
  y.kind = kind;
  y.matrix = Eigen::MatrixXd::Zero(f * t, static_cast<Eigen::Index>(mask.n_sources));
  for (Eigen::Index m = 0; m < t; ++m) {
    for (Eigen::Index k = 0; k < f; ++k) y.matrix(vec_index(k, m, f), mask.assignments(k, m)) = 1.0;
  }
  return y;
}

// Per bin, the source with the largest weights[j] * |S_j|; ties go to the
// lowest index.
inline BinaryMask dominant_source_mask(std::span<const Spectrogram> sources, std::span<const double> weights) {
  if (sources.empty()) throw InvalidInput("ds mask: no sources");
  if (weights.size() != sources.size()) throw InvalidInput("ds mask: weight count does not match sources");
  if (sources.size() > 255) throw InvalidInput("ds mask: at most 255 sources");
  const Eigen::Index f = sources[0].bins.rows(), t = sources[0].bins.cols();
  for (const auto& s : sources) {
    if (s.bins.rows() != f || s.bins.cols() != t) throw InvalidInput("ds mask: spectrogram shapes differ");
  }
  BinaryMask mask;
  mask.n_sources = sources.size();
  mask.assignments = LabelMatrix::Zero(f, t);
  for (Eigen::Index m = 0; m < t; ++m) {
    for (Eigen::Index k = 0; k < f; ++k) {
      double best = weights[0] * std::abs(sources[0].bins(k, m));
      std::uint8_t arg = 0;
      for (std::size_t j = 1; j < sources.size(); ++j) {
        const double v = weights[j] * std::abs(sources[j].bins(k, m));
        if (v > best) {
          best = v;
          arg = static_cast<std::uint8_t>(j);
        }
      }
      mask.assignments(k, m) = arg;
    }
  }
  return mask;
}

struct BpdOptions {
  // Valid NPD values are clamped to +-delay_limit before clustering when
  // set. Physical delays never exceed mic_distance / c, while bins where
  // the sources nearly cancel produce arbitrarily large NPD outliers.
  std::optional<double> delay_limit;
  KmeansOptions kmeans;
};

// K-means (k = n_sources) over the valid NPD values. Labels are ordered by
// ascending centroid delay. Invalid bins take the label of the centroid
// nearest to zero delay.
inline BinaryMask bpd_mask(const NpdMap& npd, std::size_t n_sources, Rng& rng, const BpdOptions& opt = {}) {
  if (n_sources < 1) throw InvalidInput("bpd mask: n_sources must be >= 1");
  if (n_sources > 255) throw InvalidInput("bpd mask: at most 255 sources");
  const std::size_t nvalid = npd.valid_count();
  if (nvalid < n_sources) throw InvalidInput("bpd mask: fewer valid bins than sources");
  const Eigen::Index f = npd.rows(), t = npd.cols();

  Eigen::MatrixXd pts(static_cast<Eigen::Index>(nvalid), 1);
  Eigen::Index r = 0;
  for (Eigen::Index m = 0; m < t; ++m) {
    for (Eigen::Index k = 0; k < f; ++k) {
      if (!npd.valid(k, m)) continue;
      double v = npd.values(k, m);
      if (opt.delay_limit) v = std::clamp(v, -*opt.delay_limit, *opt.delay_limit);
      pts(r++, 0) = v;
    }
  }
  const KmeansResult km = kmeans(pts, n_sources, rng, opt.kmeans);

  std::vector<std::size_t> order(n_sources);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return km.centroids(static_cast<Eigen::Index>(a), 0) < km.centroids(static_cast<Eigen::Index>(b), 0);
  });
  std::vector<std::uint8_t> relabel(n_sources);
  for (std::size_t i = 0; i < n_sources; ++i) relabel[order[i]] = static_cast<std::uint8_t>(i);

  std::size_t zero_label = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_sources; ++j) {
    const double dist = std::abs(km.centroids(static_cast<Eigen::Index>(j), 0));
    if (dist < best) {
      best = dist;
      zero_label = j;
    }
  }

  BinaryMask mask;
  mask.n_sources = n_sources;
  mask.assignments = LabelMatrix::Constant(f, t, relabel[zero_label]);
  r = 0;
  for (Eigen::Index m = 0; m < t; ++m) {
    for (Eigen::Index k = 0; k < f; ++k) {
      if (npd.valid(k, m)) mask.assignments(k, m) = relabel[km.assignments[static_cast<std::size_t>(r++)]];
    }
  }
  return mask;
}

enum class RpdScaling {
  kRaw,          // NPD in seconds, invalid bins 0
  kStandardized  // clamped, centred and scaled to unit variance over valid bins
};

struct RpdOptions {
  RpdScaling scaling = RpdScaling::kStandardized;
  std::optional<double> delay_limit;  // clamp before standardising
};

// Single-column target built directly from the NPD values.
inline PartitionTarget rpd_target(const NpdMap& npd, const RpdOptions& opt = {}) {
  const Eigen::Index f = npd.rows(), t = npd.cols();
  PartitionTarget y;
  y.kind = TargetKind::kRpd;
  y.matrix = Eigen::MatrixXd::Zero(f * t, 1);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (Eigen::Index m = 0; m < t; ++m) {
    for (Eigen::Index k = 0; k < f; ++k) {
      if (!npd.valid(k, m)) continue;
      double v = npd.values(k, m);
      if (opt.scaling == RpdScaling::kStandardized && opt.delay_limit)
        v = std::clamp(v, -*opt.delay_limit, *opt.delay_limit);
      y.matrix(vec_index(k, m, f), 0) = v;
      sum += v;
      sum2 += v * v;
      ++n;
    }
  }
  if (opt.scaling == RpdScaling::kStandardized && n > 0) {
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (Eigen::Index m = 0; m < t; ++m) {
      for (Eigen::Index k = 0; k < f; ++k) {
        const Eigen::Index i = vec_index(k, m, f);
        y.matrix(i, 0) = npd.valid(k, m) ? (y.matrix(i, 0) - mean) * scale : 0.0;
      }
    }
  }
  return y;
}

// Source i keeps exactly the bins labelled i, so the outputs sum to the
// mixture bit for bit.
inline std::vector<Spectrogram> apply_mask(const Spectrogram& mixture, const BinaryMask& mask) {
  if (mask.rows() != mixture.bins.rows() || mask.cols() != mixture.bins.cols())
    throw InvalidInput("apply mask: mask and spectrogram shapes differ");
  std::vector<Spectrogram> out(mask.n_sources);
  for (auto& s : out) {
    s.config = mixture.config;
    s.bins = Eigen::MatrixXcd::Zero(mixture.bins.rows(), mixture.bins.cols());
  }
  for (Eigen::Index m = 0; m < mask.cols(); ++m) {
    for (Eigen::Index k = 0; k < mask.rows(); ++k) {
      const std::size_t i = mask.assignments(k, m);
      if (i >= mask.n_sources) throw InvalidInput("apply mask: label out of range");
      out[i].bins(k, m) = mixture.bins(k, m);
    }
  }
  return out;
}

// Compact mask format: little-endian u32 F, T, N then one byte per bin,
// frequency fastest.
inline std::vector<std::uint8_t> encode_mask(const BinaryMask& mask) {
  std::vector<std::uint8_t> out;
  auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  };
  put(static_cast<std::uint32_t>(mask.rows()));
  put(static_cast<std::uint32_t>(mask.cols()));
  put(static_cast<std::uint32_t>(mask.n_sources));
  out.insert(out.end(), mask.assignments.data(), mask.assignments.data() + mask.assignments.size());
  return out;
}

inline BinaryMask decode_mask(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw InvalidInput("mask: truncated header");
  auto get = [&](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) | (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 16) | (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
  };
  const std::uint32_t f = get(0), t = get(4), n = get(8);
  if (bytes.size() != 12 + static_cast<std::size_t>(f) * t) throw InvalidInput("mask: size does not match header");
  BinaryMask mask;
  mask.n_sources = n;
  mask.assignments.resize(f, t);
  std::copy(bytes.begin() + 12, bytes.end(), mask.assignments.data());
  for (Eigen::Index i = 0; i < mask.assignments.size(); ++i) {
    if (mask.assignments.data()[i] >= n) throw InvalidInput("mask: label out of range");
  }
  return mask;
}

inline void write_mask(const std::string& path, const BinaryMask& mask) {
  const auto bytes = encode_mask(mask);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("mask: cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline BinaryMask read_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("mask: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_mask(bytes);
}

// Fraction of bins on which two masks agree, restricted to bins holding at
// least `min_frame_share` of their frame's energy in `weighting`.
inline double mask_agreement(const BinaryMask& a, const BinaryMask& b, const Spectrogram& weighting,
                             double min_frame_share = 0.01) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != weighting.bins.rows() ||
      a.cols() != weighting.bins.cols())
    throw InvalidInput("mask agreement: shapes differ");
  std::size_t agree = 0, total = 0;
  for (Eigen::Index m = 0; m < a.cols(); ++m) {
    const double frame_energy = weighting.bins.col(m).cwiseAbs2().sum();
    if (!(frame_energy > 0)) continue;
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      if (std::norm(weighting.bins(k, m)) < min_frame_share * frame_energy) continue;
      ++total;
      agree += a.assignments(k, m) == b.assignments(k, m);
    }
  }
  return total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
}

// Agreement maximised over relabelings of `b` (at most 4 sources).
inline double mask_agreement_any_labels(const BinaryMask& a, const BinaryMask& b, const Spectrogram& weighting,
                                        double min_frame_share = 0.01) {
  if (b.n_sources > 4) throw InvalidInput("mask agreement: at most 4 sources");
  std::vector<std::uint8_t> perm(b.n_sources);
  std::iota(perm.begin(), perm.end(), std::uint8_t{0});
  double best = 0.0;
  do {
    BinaryMask relabeled = b;
    for (Eigen::Index i = 0; i < relabeled.assignments.size(); ++i) {
      relabeled.assignments.data()[i] = perm[relabeled.assignments.data()[i]];
    }
    best = std::max(best, mask_agreement(a, relabeled, weighting, min_frame_share));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace mixclust
