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

// Deep-clustering affinity loss
//
//   L(V, Y) = |V V^T / sqrt(K) - Y Y^T / sqrt(C)|_F^2
//           = |V^T V|^2 / K - 2 |V^T Y|^2 / sqrt(K C) + |Y^T Y|^2 / C
//
// evaluated through the K x K, K x C and C x C Gram matrices only, so the
// L x L affinities are never formed.

#include <cmath>

#include <Eigen/Dense>

#include "mixclust/error.hpp"

namespace mixclust {

template <typename DV, typename DY>
void check_loss_shapes(const Eigen::MatrixBase<DV>& v, const Eigen::MatrixBase<DY>& y) {
  if (v.rows() != y.rows()) throw InvalidInput("dc loss: V and Y must have the same number of rows");
  if (v.cols() < 1 || y.cols() < 1) throw InvalidInput("dc loss: V and Y need at least one column");
}

template <typename DV, typename DY>
double dc_loss(const Eigen::MatrixBase<DV>& v_in, const Eigen::MatrixBase<DY>& y_in) {
  check_loss_shapes(v_in, y_in);
  const Eigen::Ref<const Eigen::MatrixXd> v(v_in), y(y_in);
  const double k = static_cast<double>(v.cols()), c = static_cast<double>(y.cols());
  const Eigen::MatrixXd vv = v.transpose() * v;
  const Eigen::MatrixXd vy = v.transpose() * y;
  const Eigen::MatrixXd yy = y.transpose() * y;
  return vv.squaredNorm() / k - 2.0 * vy.squaredNorm() / std::sqrt(k * c) + yy.squaredNorm() / c;
}

// dL/dV = (4/K) V (V^T V) - (4/sqrt(K C)) Y (Y^T V), an L x K matrix.
template <typename DV, typename DY>
Eigen::MatrixXd dc_loss_grad(const Eigen::MatrixBase<DV>& v_in, const Eigen::MatrixBase<DY>& y_in) {
  check_loss_shapes(v_in, y_in);
  const Eigen::Ref<const Eigen::MatrixXd> v(v_in), y(y_in);
  const double k = static_cast<double>(v.cols()), c = static_cast<double>(y.cols());
  const Eigen::MatrixXd vv = v.transpose() * v;
  const Eigen::MatrixXd yv = y.transpose() * v;
  return (4.0 / k) * (v * vv) - (4.0 / std::sqrt(k * c)) * (y * yv);
}

// Loss and gradient in one pass, sharing V^T V.
template <typename DV, typename DY>
double dc_loss_with_grad(const Eigen::MatrixBase<DV>& v_in, const Eigen::MatrixBase<DY>& y_in, Eigen::MatrixXd& grad) {
  check_loss_shapes(v_in, y_in);
  const Eigen::Ref<const Eigen::MatrixXd> v(v_in), y(y_in);
  const double k = static_cast<double>(v.cols()), c = static_cast<double>(y.cols());
  const Eigen::MatrixXd vv = v.transpose() * v;
  const Eigen::MatrixXd yv = y.transpose() * v;
  const Eigen::MatrixXd yy = y.transpose() * y;
  grad.noalias() = (4.0 / k) * (v * vv);
  grad.noalias() -= (4.0 / std::sqrt(k * c)) * (y * yv);
  return vv.squaredNorm() / k - 2.0 * yv.squaredNorm() / std::sqrt(k * c) + yy.squaredNorm() / c;
}

}  // namespace mixclust
