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

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mixclust/error.hpp"

namespace mixclust {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Rescales all gradients together so their joint L2 norm is at most
// max_norm. Returns the norm before clipping.
inline double clip_global_norm(std::vector<Eigen::MatrixXd>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<Eigen::MatrixXd>& first_moment() const { return m_; }
  const std::vector<Eigen::MatrixXd>& second_moment() const { return v_; }

  void restore(std::uint64_t step, std::vector<Eigen::MatrixXd> m, std::vector<Eigen::MatrixXd> v) {
    if (m.size() != v.size()) throw InvalidInput("adam: moment tensor counts differ");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

  void step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads) {
    if (params.size() != grads.size()) throw InvalidInput("adam: parameter and gradient counts differ");
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      }
    }
    if (m_.size() != params.size()) throw InvalidInput("adam: state does not match parameters");
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseAbs2();
      params[i].array() -= cfg_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.epsilon);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<Eigen::MatrixXd> m_, v_;
  std::uint64_t step_ = 0;
};

}  // namespace mixclust
