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

// Training loop: targets per clip, forward, loss, backward, Adam update.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixclust/adam.hpp"
#include "mixclust/checkpoint.hpp"
#include "mixclust/dc_loss.hpp"
#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/features.hpp"
#include "mixclust/masks.hpp"
#include "mixclust/network.hpp"
#include "mixclust/parallel.hpp"
#include "mixclust/rng.hpp"
#include "mixclust/spatial_sim.hpp"
#include "mixclust/train_config.hpp"

namespace mixclust {

// Raised when the loss or the parameters stop being finite. Carries the
// state after the last fully completed epoch.
class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, Checkpoint last_good)
      : Error(what), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

struct TrainingExample {
  std::string id;
  Eigen::MatrixXd features;  // F x T
  PartitionTarget target;    // L x C
};

// Hash of the manifest lines in order, as written by write_manifest.
inline std::string manifest_fingerprint(const DatasetManifest& m) {
  std::string text;
  for (const auto& e : m.entries) text += to_json(e).dump() + '\n';
  return fnv1a_hex(text);
}

inline TrainingExample prepare_example(const LoadedClip& clip, const TrainConfig& cfg, const StftConfig& stft_cfg,
                                       std::uint64_t kmeans_seed) {
  if (clip.mixture.num_channels() < 1) throw InvalidInput("train: clip " + clip.entry.id + " has no audio");
  const Waveform mic1{clip.mixture.channels[0], clip.mixture.sample_rate};
  const Spectrogram m1 = stft(mic1, stft_cfg);

  TrainingExample ex;
  ex.id = clip.entry.id;
  ex.features = log_magnitude_features(m1);
  switch (cfg.target) {
    case TargetKind::kDs: {
      if (clip.references.empty()) throw ConfigError("train: DS targets need clean references (" + clip.entry.id + ")");
      std::vector<Spectrogram> refs;
      for (const auto& r : clip.references) refs.push_back(stft(r, stft_cfg));
      // References already carry their mixing weights.
      const std::vector<double> ones(refs.size(), 1.0);
      ex.target = one_hot(dominant_source_mask(refs, ones), TargetKind::kDs);
      break;
    }
    case TargetKind::kBpd:
    case TargetKind::kRpd: {
      if (clip.mixture.num_channels() != 2)
        throw ConfigError("train: " + to_string(cfg.target) + " targets need stereo mixtures (" + clip.entry.id + ")");
      const Spectrogram m2 = stft(Waveform{clip.mixture.channels[1], clip.mixture.sample_rate}, stft_cfg);
      const NpdMap npd = normalized_phase_difference(m1, m2, cfg.silence_floor_db);
      if (cfg.target == TargetKind::kBpd) {
        BpdOptions opt;
        opt.delay_limit = cfg.delay_limit;
        opt.kmeans.restarts = cfg.kmeans_restarts;
        Rng rng(kmeans_seed);
        const std::size_t n = std::max<std::size_t>(clip.entry.n_sources, 1);
        ex.target = one_hot(bpd_mask(npd, n, rng, opt), TargetKind::kBpd);
      } else {
        RpdOptions opt;
        opt.scaling = cfg.rpd_scaling;
        opt.delay_limit = cfg.delay_limit;
        ex.target = rpd_target(npd, opt);
      }
      break;
    }
  }
  return ex;
}

// Loads and converts every clip of one split. Clip i uses the kmeans
// sub-stream with index i.
inline std::vector<TrainingExample> prepare_examples(const DatasetManifest& manifest, Split split,
                                                     const TrainConfig& cfg, const StftConfig& stft_cfg,
                                                     std::size_t threads = 0) {
  const auto entries = manifest.split(split);
  if (entries.empty()) throw ConfigError("train: split '" + to_string(split) + "' is empty");
  std::vector<TrainingExample> out(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    const LoadedClip clip = load_clip(manifest, entries[i], cfg.target == TargetKind::kDs);
    out[i] = prepare_example(clip, cfg, stft_cfg, derive_seed(cfg.seed, "kmeans", i));
  });
  return out;
}

// Factor applied to V before the loss. Unit rows give VV^T a unit diagonal
// while YY^T/sqrt(C) asks for sqrt(K/C) on it; without the factor the
// collapsed embedding (every row equal) is a stable minimum.
inline double affinity_scale(const NetworkConfig& net_cfg, const TrainConfig& cfg, Eigen::Index target_cols) {
  if (!cfg.scale_affinity || !net_cfg.normalize_rows) return 1.0;
  return std::pow(static_cast<double>(net_cfg.embed) / static_cast<double>(std::max<Eigen::Index>(1, target_cols)), 0.25);
}

// Loss of (scale * V) divided by L^2 so values are comparable across clip lengths.
inline double normalized_dc_loss(const Eigen::MatrixXd& v, const Eigen::MatrixXd& y, double scale = 1.0) {
  const double l = static_cast<double>(v.rows());
  return dc_loss(scale * v, y) / (l * l);
}

// Mean training loss over the examples in infer mode.
inline double mean_loss(const EmbeddingNetwork& net, const TrainConfig& cfg,
                        const std::vector<TrainingExample>& examples, std::size_t threads = 0) {
  std::vector<double> losses(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    const Eigen::MatrixXd& y = examples[i].target.matrix;
    losses[i] = normalized_dc_loss(net.forward(examples[i].features, Mode::kInfer), y,
                                   affinity_scale(net.config(), cfg, y.cols()));
  });
  return examples.empty() ? 0.0 : std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

inline Checkpoint initial_checkpoint(const NetworkConfig& net_cfg, const StftConfig& stft_cfg, const TrainConfig& cfg,
                                     std::string fingerprint) {
  net_cfg.validate();
  cfg.validate();
  EmbeddingNetwork net(net_cfg);
  Rng init(derive_seed(cfg.seed, "init", 0));
  net.initialize(init);
  Checkpoint ck;
  ck.network = net_cfg;
  ck.stft = stft_cfg;
  ck.train = cfg;
  ck.params = net.params();
  ck.dataset_fingerprint = std::move(fingerprint);
  return ck;
}

using EpochCallback = std::function<void(const Checkpoint&)>;

// Runs epochs until start.loss_history reaches start.train.epochs. The
// shuffle and dropout streams depend only on (seed, epoch, position), so a
// run resumed from any epoch boundary matches an uninterrupted one.
inline Checkpoint train_on_examples(const std::vector<TrainingExample>& examples, Checkpoint start,
                                    std::size_t threads = 0, const EpochCallback& on_epoch = {}) {
  const TrainConfig& cfg = start.train;
  cfg.validate();
  if (examples.empty()) throw ConfigError("train: no training examples");
  EmbeddingNetwork net = start.make_network();
  for (const auto& ex : examples) {
    if (ex.features.rows() != static_cast<Eigen::Index>(start.network.input_dim))
      throw ConfigError("train: feature dimension does not match the network input");
    if (ex.target.matrix.rows() != ex.features.size())
      throw InvalidInput("train: target rows do not match bins for " + ex.id);
  }

  Adam adam(AdamConfig{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
  if (!start.adam_m.empty()) adam.restore(start.adam_step, start.adam_m, start.adam_v);

  Checkpoint last_good = start;
  const std::size_t n = examples.size();
  for (std::size_t epoch = start.epochs_completed(); epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, "shuffle", epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);

    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
      const std::size_t bn = std::min(cfg.batch_size, n - b0);
      std::vector<NetworkParams> grads(bn);
      std::vector<double> losses(bn);
      parallel_for(bn, threads, [&](std::size_t j) {
        const TrainingExample& ex = examples[order[b0 + j]];
        Rng dropout(derive_seed(cfg.seed, "dropout", epoch * n + b0 + j));
        ForwardCache cache;
        const Eigen::MatrixXd v = net.forward(ex.features, Mode::kTrain, &dropout, &cache);
        const double l2 = static_cast<double>(v.rows()) * static_cast<double>(v.rows());
        const double a = affinity_scale(start.network, cfg, ex.target.matrix.cols());
        Eigen::MatrixXd dv;
        losses[j] = dc_loss_with_grad(a * v, ex.target.matrix, dv) / l2;
        dv *= a / l2;
        grads[j] = net.backward(cache, dv);
      });
      NetworkParams total = std::move(grads[0]);
      for (std::size_t j = 1; j < bn; ++j) total += grads[j];
      if (bn > 1) total *= 1.0 / static_cast<double>(bn);
      for (const double l : losses) loss_sum += l;
      const double batch_loss = std::accumulate(losses.begin(), losses.end(), 0.0);
      if (!std::isfinite(batch_loss) || !total.all_finite())
        throw TrainingFailure("train: loss diverged in epoch " + std::to_string(epoch + 1), last_good);

      clip_global_norm(total.tensors, cfg.clip_norm);
      adam.step(net.mutable_params().tensors, total.tensors);
      if (!net.params().all_finite())
        throw TrainingFailure("train: parameters became non-finite in epoch " + std::to_string(epoch + 1), last_good);
    }

    Checkpoint ck = last_good;
    ck.params = net.params();
    ck.adam_step = adam.step_count();
    ck.adam_m = adam.first_moment();
    ck.adam_v = adam.second_moment();
    ck.loss_history.push_back(loss_sum / static_cast<double>(n));
    last_good = std::move(ck);
    if (on_epoch) on_epoch(last_good);
  }
  return last_good;
}

// Trains on the train split. With `resume`, continues from that checkpoint
// after checking that it belongs to the same dataset and configuration.
inline Checkpoint train(const DatasetManifest& manifest, const NetworkConfig& net_cfg, const StftConfig& stft_cfg,
                        const TrainConfig& cfg, const std::optional<Checkpoint>& resume = std::nullopt,
                        std::size_t threads = 0, const EpochCallback& on_epoch = {}) {
  const std::string fingerprint = manifest_fingerprint(manifest);
  Checkpoint start;
  if (resume) {
    if (resume->dataset_fingerprint != fingerprint) throw ConfigError("train: checkpoint was trained on another dataset");
    if (!(resume->network == net_cfg) || !(resume->stft == stft_cfg) || resume->train.target != cfg.target ||
        resume->train.seed != cfg.seed)
      throw ConfigError("train: checkpoint configuration does not match");
    start = *resume;
    start.train = cfg;
  } else {
    start = initial_checkpoint(net_cfg, stft_cfg, cfg, fingerprint);
  }
  const auto examples = prepare_examples(manifest, Split::kTrain, cfg, stft_cfg, threads);
  return train_on_examples(examples, std::move(start), threads, on_epoch);
}

}  // namespace mixclust
