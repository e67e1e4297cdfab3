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

// Single-channel inference: embeddings, K-means over bins, masked resynthesis.

#include <cstdint>
#include <string>
#include <vector>

#include "mixclust/checkpoint.hpp"
#include "mixclust/clustering.hpp"
#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/masks.hpp"
#include "mixclust/network.hpp"
#include "mixclust/rng.hpp"
#include "mixclust/wav.hpp"

namespace mixclust {

struct SeparationResult {
  std::vector<Waveform> sources;
  BinaryMask mask;
  double embedding_inertia = 0.0;
};

// Clusters the embedding rows of an already computed V (L x K, bin order
// frame * F + bin) into a mask.
inline BinaryMask embedding_mask(const Eigen::MatrixXd& v, Eigen::Index num_bins, std::size_t n_sources, Rng& rng,
                                 const KmeansOptions& opt, double* inertia = nullptr) {
  if (n_sources < 1 || n_sources > 255) throw InvalidInput("separate: n_sources must be in [1, 255]");
  if (num_bins < 1 || v.rows() % num_bins != 0) throw InvalidInput("separate: embedding rows do not match bin count");
  const KmeansResult km = kmeans(v, n_sources, rng, opt);
  BinaryMask mask;
  mask.n_sources = n_sources;
  mask.assignments.resize(num_bins, v.rows() / num_bins);
  for (Eigen::Index m = 0; m < mask.cols(); ++m) {
    for (Eigen::Index k = 0; k < num_bins; ++k)
      mask.assignments(k, m) = static_cast<std::uint8_t>(km.assignments[static_cast<std::size_t>(vec_index(k, m, num_bins))]);
  }
  if (inertia) *inertia = km.inertia;
  return mask;
}

inline SeparationResult separate(const EmbeddingNetwork& net, const StftConfig& stft_cfg, const Waveform& mixture,
                                 std::size_t n_sources, Rng& rng, const KmeansOptions& opt = {}) {
  if (n_sources < 1) throw InvalidInput("separate: n_sources must be >= 1");
  if (mixture.sample_rate != stft_cfg.sample_rate)
    throw InvalidInput("separate: mixture sample rate " + std::to_string(mixture.sample_rate) +
                       " does not match model rate " + std::to_string(stft_cfg.sample_rate));
  const Spectrogram spec = stft(mixture, stft_cfg);
  const Eigen::MatrixXd v = net.forward(log_magnitude_features(spec), Mode::kInfer);
  SeparationResult out;
  out.mask = embedding_mask(v, spec.bins.rows(), n_sources, rng, opt, &out.embedding_inertia);
  for (const auto& s : apply_mask(spec, out.mask)) out.sources.push_back(istft(s, mixture.size()));
  return out;
}

inline SeparationResult separate(const Checkpoint& ckpt, const Waveform& mixture, std::size_t n_sources, Rng& rng) {
  KmeansOptions opt;
  opt.restarts = ckpt.train.kmeans_restarts;
  return separate(ckpt.make_network(), ckpt.stft, mixture, n_sources, rng, opt);
}

// Only mono buffers are accepted; pick a channel explicitly beforehand.
inline SeparationResult separate(const Checkpoint& ckpt, const AudioBuffer& mixture, std::size_t n_sources, Rng& rng) {
  if (mixture.num_channels() != 1)
    throw InvalidInput("separate: expected a mono mixture, got " + std::to_string(mixture.num_channels()) +
                       " channels; select one channel first");
  return separate(ckpt, Waveform{mixture.channels[0], mixture.sample_rate}, n_sources, rng);
}

}  // namespace mixclust
