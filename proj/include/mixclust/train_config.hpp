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

// Training configuration and JSON conversions for the model-side configs.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/masks.hpp"
#include "mixclust/network.hpp"

namespace mixclust {

struct TrainConfig {
  TargetKind target = TargetKind::kBpd;
  double learning_rate = 5e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 1;  // clips per optimiser step
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
  double silence_floor_db = -60.0;
  double delay_limit = 0.01 / 343.0;  // seconds; clamps NPD outliers in BPD/RPD targets
  RpdScaling rpd_scaling = RpdScaling::kStandardized;
  std::size_t kmeans_restarts = 10;
  // With unit rows, the loss sees (K/C)^(1/4) * V so that same-source pairs
  // can reach the target affinity 1/sqrt(C). Ignored without row normalisation.
  bool scale_affinity = true;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: learning_rate must be >= 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0))
      throw ConfigError("train: invalid Adam hyperparameters");
    if (!(delay_limit > 0)) throw ConfigError("train: delay_limit must be positive");
    if (kmeans_restarts < 1) throw ConfigError("train: kmeans_restarts must be >= 1");
  }
};

inline std::string to_string(RpdScaling s) { return s == RpdScaling::kRaw ? "raw" : "standardized"; }

inline RpdScaling parse_rpd_scaling(const std::string& s) {
  if (s == "raw") return RpdScaling::kRaw;
  if (s == "standardized") return RpdScaling::kStandardized;
  throw ConfigError("unknown rpd scaling '" + s + "'");
}

inline nlohmann::json to_json(const StftConfig& c) {
  return {{"fft_size", c.fft_size}, {"hop", c.hop}, {"window", "sqrt-hann"}, {"sample_rate", c.sample_rate}};
}

inline StftConfig stft_config_from_json(const nlohmann::json& j, StftConfig c = {}) {
  c.fft_size = j.value("fft_size", c.fft_size);
  c.hop = j.value("hop", c.hop);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  if (j.value("window", std::string("sqrt-hann")) != "sqrt-hann") throw ConfigError("stft: only sqrt-hann windows");
  return c;
}

inline nlohmann::json to_json(const NetworkConfig& c) {
  return {{"input_dim", c.input_dim}, {"layers", c.layers},   {"hidden", c.hidden},
          {"embed", c.embed},         {"dropout", c.dropout}, {"cell", to_string(c.cell)},
          {"normalize_rows", c.normalize_rows}};
}

inline NetworkConfig network_config_from_json(const nlohmann::json& j, NetworkConfig c = {}) {
  c.input_dim = j.value("input_dim", c.input_dim);
  c.layers = j.value("layers", c.layers);
  c.hidden = j.value("hidden", c.hidden);
  c.embed = j.value("embed", c.embed);
  c.dropout = j.value("dropout", c.dropout);
  c.cell = parse_cell_type(j.value("cell", to_string(c.cell)));
  c.normalize_rows = j.value("normalize_rows", c.normalize_rows);
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"target", to_string(c.target)},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"clip_norm", c.clip_norm},
          {"silence_floor_db", c.silence_floor_db},
          {"delay_limit", c.delay_limit},
          {"rpd_scaling", to_string(c.rpd_scaling)},
          {"kmeans_restarts", c.kmeans_restarts},
          {"scale_affinity", c.scale_affinity}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  c.target = parse_target_kind(j.value("target", to_string(c.target)));
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.silence_floor_db = j.value("silence_floor_db", c.silence_floor_db);
  c.delay_limit = j.value("delay_limit", c.delay_limit);
  c.rpd_scaling = parse_rpd_scaling(j.value("rpd_scaling", to_string(c.rpd_scaling)));
  c.kmeans_restarts = j.value("kmeans_restarts", c.kmeans_restarts);
  c.scale_affinity = j.value("scale_affinity", c.scale_affinity);
  return c;
}

}  // namespace mixclust
