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

// Pipeline configuration file (JSON). Unknown keys are rejected so typos
// surface as configuration errors instead of silently using defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>

#include <json.hpp>

#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/network.hpp"
#include "mixclust/spatial_sim.hpp"
#include "mixclust/train_config.hpp"

namespace mixclust {

struct PipelineConfig {
  Geometry geometry;
  StftConfig stft;
  DatasetSpec dataset;
  std::string corpus = "synthetic";  // or a directory of f*/m* speaker folders
  std::size_t synthetic_speakers = 40;
  NetworkConfig network;
  TrainConfig train;  // train.seed always follows `seed`
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  void validate() const {
    geometry.validate();
    stft.validate();
    network.validate();
    train.validate();
    if (geometry.sample_rate != stft.sample_rate) throw ConfigError("config: geometry and STFT sample rates differ");
    if (network.input_dim != stft.bins()) throw ConfigError("config: network input_dim must equal fft_size / 2 + 1");
    if (dataset.n_sources < 1) throw ConfigError("config: dataset n_sources must be >= 1");
    if (!(dataset.clip_seconds > 0)) throw ConfigError("config: clip_seconds must be positive");
  }
};

namespace config_detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("config: unknown key '" + where + "." + k + "'");
  }
}

}  // namespace config_detail

inline nlohmann::json to_json(const Geometry& g) {
  return {{"mic_distance", g.mic_distance},
          {"speed_of_sound", g.speed_of_sound},
          {"sample_rate", g.sample_rate},
          {"min_angle_separation", g.min_angle_separation},
          {"room_half_extent", g.room_half_extent},
          {"min_source_radius", g.min_source_radius}};
}

inline Geometry geometry_from_json(const nlohmann::json& j, Geometry g = {}) {
  config_detail::check_keys(j, {"mic_distance", "speed_of_sound", "sample_rate", "min_angle_separation",
                                "room_half_extent", "min_source_radius"},
                            "geometry");
  g.mic_distance = j.value("mic_distance", g.mic_distance);
  g.speed_of_sound = j.value("speed_of_sound", g.speed_of_sound);
  g.sample_rate = j.value("sample_rate", g.sample_rate);
  g.min_angle_separation = j.value("min_angle_separation", g.min_angle_separation);
  g.room_half_extent = j.value("room_half_extent", g.room_half_extent);
  g.min_source_radius = j.value("min_source_radius", g.min_source_radius);
  return g;
}

inline nlohmann::json to_json(const DatasetSpec& d) {
  return {{"train", d.train},
          {"eval", d.eval},
          {"test", d.test},
          {"n_sources", d.n_sources},
          {"gender_group", to_string(d.gender_group)},
          {"clip_seconds", d.clip_seconds}};
}

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j, DatasetSpec d = {}) {
  config_detail::check_keys(j, {"train", "eval", "test", "n_sources", "gender_group", "clip_seconds"}, "dataset");
  d.train = j.value("train", d.train);
  d.eval = j.value("eval", d.eval);
  d.test = j.value("test", d.test);
  d.n_sources = j.value("n_sources", d.n_sources);
  d.gender_group = parse_gender_group(j.value("gender_group", to_string(d.gender_group)));
  d.clip_seconds = j.value("clip_seconds", d.clip_seconds);
  return d;
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json train = to_json(c.train);
  train.erase("seed");
  return {{"geometry", to_json(c.geometry)},
          {"stft", to_json(c.stft)},
          {"dataset", to_json(c.dataset)},
          {"corpus", c.corpus},
          {"synthetic_speakers", c.synthetic_speakers},
          {"network", to_json(c.network)},
          {"train", train},
          {"output_dir", c.output_dir},
          {"seed", c.seed}};
}

// Missing keys keep the values already in `c`, so a file can be layered
// over defaults and flags layered over the result.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
  using config_detail::check_keys;
  try {
    check_keys(j, {"geometry", "stft", "dataset", "corpus", "synthetic_speakers", "network", "train", "output_dir", "seed"},
               "config");
    if (j.contains("geometry")) c.geometry = geometry_from_json(j["geometry"], c.geometry);
    if (j.contains("stft")) {
      check_keys(j["stft"], {"fft_size", "hop", "window", "sample_rate"}, "stft");
      c.stft = stft_config_from_json(j["stft"], c.stft);
    }
    if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j["dataset"], c.dataset);
    c.corpus = j.value("corpus", c.corpus);
    c.synthetic_speakers = j.value("synthetic_speakers", c.synthetic_speakers);
    if (j.contains("network")) {
      check_keys(j["network"], {"input_dim", "layers", "hidden", "embed", "dropout", "cell", "normalize_rows"}, "network");
      c.network = network_config_from_json(j["network"], c.network);
    }
    if (j.contains("train")) {
      check_keys(j["train"], {"target", "learning_rate", "epochs", "batch_size", "beta1", "beta2", "epsilon", "clip_norm",
                              "silence_floor_db", "delay_limit", "rpd_scaling", "kmeans_restarts",
                              "scale_affinity"},
                 "train");
      c.train = train_config_from_json(j["train"], c.train);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.train.seed = c.seed;
  return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j, std::move(base));
}

inline void save_pipeline_config(const std::filesystem::path& path, const PipelineConfig& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("config: cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

}  // namespace mixclust
