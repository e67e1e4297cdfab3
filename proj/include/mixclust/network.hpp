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

// Bidirectional recurrent embedding network with a dense per-bin head and
// hand-written backpropagation through time.
//
// Input is an F x T feature matrix. Each layer runs a forward and a
// backward recurrent cell over the frames; the top layer's 2H-dimensional
// state at frame m is mapped by one shared dense layer to F*K outputs, read
// as one K-dimensional embedding per time-frequency bin (row m*F + f of V).

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/rng.hpp"

namespace mixclust {

enum class CellType { kGru, kLstm };

inline std::string to_string(CellType c) { return c == CellType::kGru ? "gru" : "lstm"; }

inline CellType parse_cell_type(const std::string& s) {
  if (s == "gru") return CellType::kGru;
  if (s == "lstm") return CellType::kLstm;
  throw ConfigError("unknown cell type '" + s + "' (expected gru or lstm)");
}

struct NetworkConfig {
  std::size_t input_dim = 257;  // F
  std::size_t layers = 1;
  std::size_t hidden = 32;      // per direction
  std::size_t embed = 16;       // K
  double dropout = 0.3;         // on the top recurrent layer's output
  CellType cell = CellType::kGru;
  bool normalize_rows = true;

  std::size_t gates() const { return cell == CellType::kGru ? 3 : 4; }

  void validate() const {
    if (input_dim < 1 || layers < 1 || hidden < 1 || embed < 1)
      throw ConfigError("network: dimensions must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("network: dropout must be in [0, 1)");
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// Every trainable tensor, in a fixed order:
//   rnn.l<i>.<fwd|bwd>.{w,u,b} for each layer, then head.w and head.b.
// w: G*H x D input weights, u: G*H x H recurrent weights, b: G*H x 1, with
// gate blocks ordered (r, z, n) for the GRU and (i, f, g, o) for the LSTM.
struct NetworkParams {
  std::vector<Eigen::MatrixXd> tensors;
  std::vector<std::string> names;
  std::size_t layers = 0;

  NetworkParams() = default;

  explicit NetworkParams(const NetworkConfig& cfg) : layers(cfg.layers) {
    const auto gh = static_cast<Eigen::Index>(cfg.gates() * cfg.hidden);
    const auto h = static_cast<Eigen::Index>(cfg.hidden);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const auto in = static_cast<Eigen::Index>(l == 0 ? cfg.input_dim : 2 * cfg.hidden);
      for (const char* dir : {"fwd", "bwd"}) {
        const std::string p = "rnn.l" + std::to_string(l) + "." + dir + ".";
        add(p + "w", Eigen::MatrixXd::Zero(gh, in));
        add(p + "u", Eigen::MatrixXd::Zero(gh, h));
        add(p + "b", Eigen::MatrixXd::Zero(gh, 1));
      }
    }
    const auto out = static_cast<Eigen::Index>(cfg.input_dim * cfg.embed);
    add("head.w", Eigen::MatrixXd::Zero(out, 2 * h));
    add("head.b", Eigen::MatrixXd::Zero(out, 1));
  }

  Eigen::MatrixXd& w(std::size_t l, std::size_t d) { return tensors[(l * 2 + d) * 3]; }
  Eigen::MatrixXd& u(std::size_t l, std::size_t d) { return tensors[(l * 2 + d) * 3 + 1]; }
  Eigen::MatrixXd& b(std::size_t l, std::size_t d) { return tensors[(l * 2 + d) * 3 + 2]; }
  Eigen::MatrixXd& head_w() { return tensors[layers * 6]; }
  Eigen::MatrixXd& head_b() { return tensors[layers * 6 + 1]; }
  const Eigen::MatrixXd& w(std::size_t l, std::size_t d) const { return tensors[(l * 2 + d) * 3]; }
  const Eigen::MatrixXd& u(std::size_t l, std::size_t d) const { return tensors[(l * 2 + d) * 3 + 1]; }
  const Eigen::MatrixXd& b(std::size_t l, std::size_t d) const { return tensors[(l * 2 + d) * 3 + 2]; }
  const Eigen::MatrixXd& head_w() const { return tensors[layers * 6]; }
  const Eigen::MatrixXd& head_b() const { return tensors[layers * 6 + 1]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& t : tensors) {
      if (!t.allFinite()) return false;
    }
    return true;
  }

  void set_zero() {
    for (auto& t : tensors) t.setZero();
  }

  NetworkParams zeros_like() const {
    NetworkParams z = *this;
    z.set_zero();
    return z;
  }

  NetworkParams& operator+=(const NetworkParams& o) {
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i] += o.tensors[i];
    return *this;
  }

  NetworkParams& operator*=(double s) {
    for (auto& t : tensors) t *= s;
    return *this;
  }

 private:
  void add(std::string name, Eigen::MatrixXd value) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(value));
  }
};

enum class Mode { kTrain, kInfer };

// Activations kept by a train-mode forward pass for backward().
struct ForwardCache {
  struct Direction {
    Eigen::MatrixXd gates;  // G*H x T post-activation gate values, processing order
    Eigen::MatrixXd h;      // H x (T+1), column 0 is the zero initial state
    Eigen::MatrixXd c;      // LSTM cell state, H x (T+1)
    Eigen::MatrixXd rh;     // GRU r * h_prev, H x T
  };
  std::vector<Eigen::MatrixXd> layer_inputs;
  std::vector<std::array<Direction, 2>> dirs;
  Eigen::MatrixXd top;           // 2H x T head input (after dropout)
  Eigen::MatrixXd dropout_mask;  // 2H x T, empty when no dropout was applied
  Eigen::MatrixXd z;             // F*K x T head output before normalisation
  Eigen::VectorXd inv_norm;      // per bin, 1 / sqrt(|z|^2 + eps)
  std::uint64_t version = 0;
  bool valid = false;
};

namespace net_detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kNormEps = 1e-12;

}  // namespace net_detail

// log(|M| + 1e-8), standardised to zero mean and unit variance over the clip.
inline Eigen::MatrixXd log_magnitude_features(const Spectrogram& spec) {
  Eigen::MatrixXd x = (spec.bins.cwiseAbs().array() + 1e-8).log().matrix();
  const double mean = x.mean();
  x.array() -= mean;
  const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, x.size())));
  if (sd > 0) x /= sd;
  return x;
}

class EmbeddingNetwork {
 public:
  EmbeddingNetwork() : EmbeddingNetwork(NetworkConfig{}) {}

  // All parameters zero.
  explicit EmbeddingNetwork(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    params_ = NetworkParams(cfg_);
  }

  EmbeddingNetwork(const NetworkConfig& cfg, NetworkParams params) : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    const NetworkParams shape(cfg_);
    if (params_.tensors.size() != shape.tensors.size()) throw InvalidInput("network: parameter count mismatch");
    for (std::size_t i = 0; i < shape.tensors.size(); ++i) {
      if (params_.tensors[i].rows() != shape.tensors[i].rows() || params_.tensors[i].cols() != shape.tensors[i].cols())
        throw InvalidInput("network: parameter " + shape.names[i] + " has the wrong shape");
    }
    params_.names = shape.names;
  }

  const NetworkConfig& config() const { return cfg_; }
  const NetworkParams& params() const { return params_; }

  // Mutable access invalidates outstanding forward caches.
  NetworkParams& mutable_params() {
    ++version_;
    return params_;
  }

  // Uniform Glorot initialisation; biases zero except LSTM forget gates (1).
  void initialize(Rng& rng) {
    NetworkParams& p = mutable_params();
    auto fill = [&](Eigen::MatrixXd& m, double fan_in, double fan_out) {
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-a, a);
    };
    const double h = static_cast<double>(cfg_.hidden);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      for (std::size_t d = 0; d < 2; ++d) {
        fill(p.w(l, d), static_cast<double>(p.w(l, d).cols()), h);
        fill(p.u(l, d), h, h);
        p.b(l, d).setZero();
        if (cfg_.cell == CellType::kLstm) p.b(l, d).middleRows(cfg_.hidden, cfg_.hidden).setOnes();
      }
    }
    fill(p.head_w(), 2.0 * h, static_cast<double>(cfg_.embed));
    p.head_b().setZero();
  }

  // Returns V (L x K, L = F*T, row m*F + f). Train mode applies dropout when
  // the configured rate is non-zero, drawing from `dropout_rng`. When `cache`
  // is given, activations needed by backward() are stored in it.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Mode mode, Rng* dropout_rng = nullptr,
                          ForwardCache* cache = nullptr) const {
    if (x.rows() != static_cast<Eigen::Index>(cfg_.input_dim))
      throw InvalidInput("network: input has " + std::to_string(x.rows()) + " rows, expected " +
                         std::to_string(cfg_.input_dim));
    if (x.cols() < 1) throw InvalidInput("network: input has no frames");
    if (!x.allFinite()) throw InvalidInput("network: non-finite input");
    const bool drop = mode == Mode::kTrain && cfg_.dropout > 0.0;
    if (drop && dropout_rng == nullptr) throw InvalidState("network: train-mode dropout needs a random source");

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    const Eigen::Index t = x.cols();
    const auto h = static_cast<Eigen::Index>(cfg_.hidden);

    Eigen::MatrixXd input = x;
    c.dirs.resize(cfg_.layers);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      Eigen::MatrixXd out(2 * h, t);
      for (std::size_t d = 0; d < 2; ++d) {
        run_direction(l, d, input, c.dirs[l][d]);
        for (Eigen::Index s = 0; s < t; ++s) {
          const Eigen::Index tt = d == 0 ? s : t - 1 - s;
          out.block(static_cast<Eigen::Index>(d) * h, tt, h, 1) = c.dirs[l][d].h.col(s + 1);
        }
      }
      c.layer_inputs.push_back(std::move(input));
      input = std::move(out);
    }

    if (drop) {
      const double keep = 1.0 - cfg_.dropout;
      c.dropout_mask.resize(input.rows(), input.cols());
      for (Eigen::Index j = 0; j < input.cols(); ++j)
        for (Eigen::Index i = 0; i < input.rows(); ++i)
          c.dropout_mask(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      input.array() *= c.dropout_mask.array();
    }
    c.top = std::move(input);

    c.z = params_.head_w() * c.top;
    c.z.colwise() += params_.head_b().col(0);

    const auto k = static_cast<Eigen::Index>(cfg_.embed);
    const Eigen::Index bins = static_cast<Eigen::Index>(cfg_.input_dim) * t;
    Eigen::Map<const Eigen::MatrixXd> zt(c.z.data(), k, bins);
    Eigen::MatrixXd vt = zt;  // K x L, one contiguous column per bin
    if (cfg_.normalize_rows) {
      c.inv_norm.resize(bins);
      for (Eigen::Index i = 0; i < bins; ++i) {
        c.inv_norm(i) = 1.0 / std::sqrt(vt.col(i).squaredNorm() + net_detail::kNormEps);
        vt.col(i) *= c.inv_norm(i);
      }
    }
    c.version = version_;
    c.valid = true;
    return vt.transpose();
  }

  // Gradients of a scalar loss with respect to every parameter, given
  // dL/dV for the forward pass recorded in `cache`.
  NetworkParams backward(const ForwardCache& cache, const Eigen::MatrixXd& dv) const {
    if (!cache.valid || cache.version != version_)
      throw InvalidState("network: forward cache is missing or stale");
    const auto k = static_cast<Eigen::Index>(cfg_.embed);
    const Eigen::Index t = cache.top.cols();
    const Eigen::Index bins = static_cast<Eigen::Index>(cfg_.input_dim) * t;
    if (dv.rows() != bins || dv.cols() != k) throw InvalidInput("network: dL/dV has the wrong shape");

    NetworkParams grads = params_.zeros_like();

    Eigen::MatrixXd dz(cache.z.rows(), t);
    Eigen::Map<Eigen::MatrixXd> dzt(dz.data(), k, bins);
    if (cfg_.normalize_rows) {
      Eigen::Map<const Eigen::MatrixXd> zt(cache.z.data(), k, bins);
      dzt = dv.transpose();
      for (Eigen::Index i = 0; i < bins; ++i) {
        const double s = cache.inv_norm(i);
        const double proj = zt.col(i).dot(dzt.col(i));
        dzt.col(i) = s * dzt.col(i) - (s * s * s * proj) * zt.col(i);
      }
    } else {
      dzt = dv.transpose();
    }

    grads.head_w().noalias() = dz * cache.top.transpose();
    grads.head_b() = dz.rowwise().sum();
    Eigen::MatrixXd dtop = params_.head_w().transpose() * dz;
    if (cache.dropout_mask.size() > 0) dtop.array() *= cache.dropout_mask.array();

    const auto h = static_cast<Eigen::Index>(cfg_.hidden);
    for (std::size_t l = cfg_.layers; l-- > 0;) {
      Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(cache.layer_inputs[l].rows(), t);
      for (std::size_t d = 0; d < 2; ++d) {
        const Eigen::MatrixXd dout = dtop.middleRows(static_cast<Eigen::Index>(d) * h, h);
        backprop_direction(l, d, cache.layer_inputs[l], cache.dirs[l][d], dout, grads, dinput);
      }
      dtop = std::move(dinput);
    }
    return grads;
  }

 private:
  void run_direction(std::size_t l, std::size_t d, const Eigen::MatrixXd& x, ForwardCache::Direction& c) const {
    using net_detail::sigmoid;
    const Eigen::Index t = x.cols();
    const auto h = static_cast<Eigen::Index>(cfg_.hidden);
    const Eigen::MatrixXd& u = params_.u(l, d);
    Eigen::MatrixXd gx = params_.w(l, d) * x;
    gx.colwise() += params_.b(l, d).col(0);

    c.gates.resize(gx.rows(), t);
    c.h = Eigen::MatrixXd::Zero(h, t + 1);
    if (cfg_.cell == CellType::kGru) {
      c.rh.resize(h, t);
      Eigen::VectorXd rz(2 * h), n(h);
      for (Eigen::Index s = 0; s < t; ++s) {
        const Eigen::Index tt = d == 0 ? s : t - 1 - s;
        const auto hp = c.h.col(s);
        rz.noalias() = u.topRows(2 * h) * hp;
        rz += gx.col(tt).head(2 * h);
        for (Eigen::Index i = 0; i < 2 * h; ++i) rz(i) = sigmoid(rz(i));
        c.rh.col(s) = rz.head(h).cwiseProduct(hp);
        n.noalias() = u.bottomRows(h) * c.rh.col(s);
        n += gx.col(tt).tail(h);
        n = n.array().tanh().matrix();
        c.gates.col(s).head(2 * h) = rz;
        c.gates.col(s).tail(h) = n;
        const auto z = rz.tail(h).array();
        c.h.col(s + 1) = ((1.0 - z) * n.array() + z * hp.array()).matrix();
      }
    } else {
      c.c = Eigen::MatrixXd::Zero(h, t + 1);
      Eigen::VectorXd a(4 * h);
      for (Eigen::Index s = 0; s < t; ++s) {
        const Eigen::Index tt = d == 0 ? s : t - 1 - s;
        a.noalias() = u * c.h.col(s);
        a += gx.col(tt);
        for (Eigen::Index i = 0; i < 4 * h; ++i) {
          a(i) = (i >= 2 * h && i < 3 * h) ? std::tanh(a(i)) : sigmoid(a(i));
        }
        c.gates.col(s) = a;
        const auto ig = a.segment(0, h).array(), fg = a.segment(h, h).array(), gg = a.segment(2 * h, h).array(),
                   og = a.segment(3 * h, h).array();
        c.c.col(s + 1) = (fg * c.c.col(s).array() + ig * gg).matrix();
        c.h.col(s + 1) = (og * c.c.col(s + 1).array().tanh()).matrix();
      }
    }
  }

  void backprop_direction(std::size_t l, std::size_t d, const Eigen::MatrixXd& x, const ForwardCache::Direction& c,
                          const Eigen::MatrixXd& dout, NetworkParams& grads, Eigen::MatrixXd& dinput) const {
    const Eigen::Index t = x.cols();
    const auto h = static_cast<Eigen::Index>(cfg_.hidden);
    const Eigen::MatrixXd& u = params_.u(l, d);
    Eigen::MatrixXd dgx(c.gates.rows(), t);
    Eigen::MatrixXd& du = grads.u(l, d);
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(h);

    if (cfg_.cell == CellType::kGru) {
      Eigen::MatrixXd da_rz(2 * h, t), da_n(h, t);
      for (Eigen::Index s = t - 1; s >= 0; --s) {
        const Eigen::Index tt = d == 0 ? s : t - 1 - s;
        dh += dout.col(tt);
        const auto r = c.gates.col(s).head(h).array();
        const auto z = c.gates.col(s).segment(h, h).array();
        const auto n = c.gates.col(s).tail(h).array();
        const auto hp = c.h.col(s).array();
        const Eigen::ArrayXd dn = dh.array() * (1.0 - z);
        const Eigen::ArrayXd dz = dh.array() * (hp - n);
        Eigen::VectorXd dhp = (dh.array() * z).matrix();
        da_n.col(s) = (dn * (1.0 - n * n)).matrix();
        const Eigen::VectorXd drh = u.bottomRows(h).transpose() * da_n.col(s);
        dhp.array() += drh.array() * r;
        da_rz.col(s).head(h) = (drh.array() * hp * r * (1.0 - r)).matrix();
        da_rz.col(s).tail(h) = (dz * z * (1.0 - z)).matrix();
        dhp.noalias() += u.topRows(2 * h).transpose() * da_rz.col(s);
        dgx.col(tt).head(2 * h) = da_rz.col(s);
        dgx.col(tt).tail(h) = da_n.col(s);
        dh = dhp;
      }
      du.topRows(2 * h).noalias() += da_rz * c.h.leftCols(t).transpose();
      du.bottomRows(h).noalias() += da_n * c.rh.transpose();
    } else {
      Eigen::VectorXd dc = Eigen::VectorXd::Zero(h);
      Eigen::MatrixXd da(4 * h, t);
      for (Eigen::Index s = t - 1; s >= 0; --s) {
        const Eigen::Index tt = d == 0 ? s : t - 1 - s;
        dh += dout.col(tt);
        const auto ig = c.gates.col(s).segment(0, h).array(), fg = c.gates.col(s).segment(h, h).array(),
                   gg = c.gates.col(s).segment(2 * h, h).array(), og = c.gates.col(s).segment(3 * h, h).array();
        const Eigen::ArrayXd tc = c.c.col(s + 1).array().tanh();
        dc.array() += dh.array() * og * (1.0 - tc * tc);
        da.col(s).segment(0, h) = (dc.array() * gg * ig * (1.0 - ig)).matrix();
        da.col(s).segment(h, h) = (dc.array() * c.c.col(s).array() * fg * (1.0 - fg)).matrix();
        da.col(s).segment(2 * h, h) = (dc.array() * ig * (1.0 - gg * gg)).matrix();
        da.col(s).segment(3 * h, h) = (dh.array() * tc * og * (1.0 - og)).matrix();
        dc.array() *= fg;
        dh.noalias() = u.transpose() * da.col(s);
        dgx.col(tt) = da.col(s);
      }
      du.noalias() += da * c.h.leftCols(t).transpose();
    }
    grads.w(l, d).noalias() += dgx * x.transpose();
    grads.b(l, d) += dgx.rowwise().sum();
    dinput.noalias() += params_.w(l, d).transpose() * dgx;
  }

  NetworkConfig cfg_;
  NetworkParams params_;
  std::uint64_t version_ = 1;
};

}  // namespace mixclust
