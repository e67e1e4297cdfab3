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

// Checkpoint file: 8-byte magic "MIXCLUST", u32 format version, u64 length
// and UTF-8 JSON config block, u64 tensor count, then per tensor a u32 name
// length, the name, u64 rows, u64 cols and rows*cols little-endian float64
// values in column-major order.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mixclust/adam.hpp"
#include "mixclust/error.hpp"
#include "mixclust/network.hpp"
#include "mixclust/train_config.hpp"

namespace mixclust {

inline constexpr char kCheckpointMagic[8] = {'M', 'I', 'X', 'C', 'L', 'U', 'S', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkConfig network;
  StftConfig stft;
  TrainConfig train;
  NetworkParams params;
  std::uint64_t adam_step = 0;
  std::vector<Eigen::MatrixXd> adam_m, adam_v;  // empty before the first update
  std::vector<double> loss_history;             // mean loss per completed epoch
  std::string dataset_fingerprint;

  std::size_t epochs_completed() const { return loss_history.size(); }
  EmbeddingNetwork make_network() const { return EmbeddingNetwork(network, params); }
};

// FNV-1a over a byte string, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace ckpt_detail {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void doubles(double* dst, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, b_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw InvalidInput("checkpoint: truncated file");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  using ckpt_detail::put;
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  const nlohmann::json cfg = {{"network", to_json(ck.network)},
                              {"stft", to_json(ck.stft)},
                              {"train", to_json(ck.train)},
                              {"adam_step", ck.adam_step},
                              {"dataset_fingerprint", ck.dataset_fingerprint}};
  const std::string text = cfg.dump();
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());

  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors;
  for (std::size_t i = 0; i < ck.params.tensors.size(); ++i) tensors.emplace_back(ck.params.names[i], &ck.params.tensors[i]);
  for (std::size_t i = 0; i < ck.adam_m.size(); ++i) {
    tensors.emplace_back("adam.m." + ck.params.names.at(i), &ck.adam_m[i]);
    tensors.emplace_back("adam.v." + ck.params.names.at(i), &ck.adam_v.at(i));
  }
  const Eigen::MatrixXd history =
      Eigen::Map<const Eigen::VectorXd>(ck.loss_history.data(), static_cast<Eigen::Index>(ck.loss_history.size()));
  tensors.emplace_back("train.loss_history", &history);

  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, m] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m->cols()));
    const auto* p = reinterpret_cast<const std::uint8_t*>(m->data());
    out.insert(out.end(), p, p + m->size() * sizeof(double));
  }
  return out;
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ckpt_detail::Reader r(bytes);
  if (r.str(8) != std::string(kCheckpointMagic, 8)) throw InvalidInput("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw InvalidInput("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  try {
    const auto cfg = nlohmann::json::parse(r.str(r.get<std::uint64_t>()));
    ck.network = network_config_from_json(cfg.at("network"));
    ck.stft = stft_config_from_json(cfg.at("stft"));
    ck.train = train_config_from_json(cfg.at("train"));
    ck.adam_step = cfg.at("adam_step").get<std::uint64_t>();
    ck.dataset_fingerprint = cfg.at("dataset_fingerprint").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("checkpoint: bad config block: ") + e.what());
  }
  std::map<std::string, Eigen::MatrixXd> tensors;
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>(), cols = r.get<std::uint64_t>();
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw InvalidInput("checkpoint: implausible tensor shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    r.doubles(m.data(), static_cast<std::size_t>(m.size()));
    tensors[name] = std::move(m);
  }
  if (!r.done()) throw InvalidInput("checkpoint: trailing bytes");

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw InvalidInput("checkpoint: missing tensor " + name);
    return it->second;
  };
  NetworkParams params(ck.network);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) params.tensors[i] = take(params.names[i]);
  ck.params = EmbeddingNetwork(ck.network, params).params();  // validates shapes
  if (tensors.count("adam.m." + params.names[0])) {
    for (const auto& name : params.names) {
      ck.adam_m.push_back(take("adam.m." + name));
      ck.adam_v.push_back(take("adam.v." + name));
    }
  }
  const Eigen::MatrixXd hist = take("train.loss_history");
  ck.loss_history.assign(hist.data(), hist.data() + hist.size());
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode_checkpoint(ck);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("checkpoint: cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("checkpoint: write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("checkpoint: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

// epoch,mean_loss rows next to the checkpoint.
inline void write_loss_history_csv(const std::filesystem::path& path, const std::vector<double>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("loss history: cannot write " + path.string());
  out.precision(17);
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) out << (i + 1) << ',' << history[i] << '\n';
}

}  // namespace mixclust
