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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mixclust {
namespace {

using testing::random_matrix;
using testing::random_one_hot;
using testing::random_orthogonal;

// Direct L x L evaluation of |V V^T / sqrt(K) - Y Y^T / sqrt(C)|^2.
double brute_force_loss(const Eigen::MatrixXd& v, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd a = v * v.transpose() / std::sqrt(static_cast<double>(v.cols())) -
                            y * y.transpose() / std::sqrt(static_cast<double>(y.cols()));
  return a.squaredNorm();
}

TEST(DcLoss, IdenticalOneHotIsZero) {
  Rng rng(1);
  const Eigen::MatrixXd y = random_one_hot(rng, 30, 3);
  EXPECT_NEAR(dc_loss(y, y), 0.0, 1e-12);
}

TEST(DcLoss, HandEvaluatedExample) {
  Eigen::MatrixXd v(2, 1), y(2, 1);
  v << 1, 0;
  y << 0, 1;
  EXPECT_DOUBLE_EQ(dc_loss(v, y), 2.0);
}

TEST(DcLoss, MatchesBruteForceAffinity) {
  Rng rng(2);
  const Eigen::MatrixXd v = random_matrix(rng, 50, 4), y = random_one_hot(rng, 50, 2);
  EXPECT_NEAR(dc_loss(v, y), brute_force_loss(v, y), 1e-9 * brute_force_loss(v, y));
}

TEST(DcLoss, NonNegativeAndRotationInvariant) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::MatrixXd v = random_matrix(rng, 40, k), y = random_one_hot(rng, 40, 3);
    const double base = dc_loss(v, y);
    EXPECT_GE(base, 0.0);
    EXPECT_NEAR(dc_loss(Eigen::MatrixXd(v * random_orthogonal(rng, k)), y), base, 1e-9 * base);
  }
}

TEST(DcLoss, TargetColumnPermutationIsExact) {
  Rng rng(4);
  const Eigen::MatrixXd v = random_matrix(rng, 40, 3), y = random_one_hot(rng, 40, 3);
  Eigen::MatrixXd yp(40, 3);
  yp << y.col(2), y.col(0), y.col(1);
  EXPECT_NEAR(dc_loss(v, yp), dc_loss(v, y), 1e-12 * dc_loss(v, y));
}

TEST(DcLoss, RowMismatchThrows) {
  EXPECT_THROW(dc_loss(Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(4, 2)), InvalidInput);
  EXPECT_THROW(dc_loss_grad(Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(4, 2)), InvalidInput);
}

TEST(DcLossGrad, ZeroAtOrigin) {
  Rng rng(5);
  const Eigen::MatrixXd g = dc_loss_grad(Eigen::MatrixXd::Zero(10, 3), random_one_hot(rng, 10, 2));
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DcLossGrad, ZeroAtGlobalMinimum) {
  Rng rng(6);
  const Eigen::MatrixXd y = random_one_hot(rng, 25, 4);
  EXPECT_LT(dc_loss_grad(y, y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DcLossGrad, MatchesCentralDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd v = random_matrix(rng, 20, 4);
    const Eigen::MatrixXd y = trial % 2 ? random_one_hot(rng, 20, 2) : random_matrix(rng, 20, 1);
    const Eigen::MatrixXd g = dc_loss_grad(v, y);
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double keep = v(i);
      v(i) = keep + h;
      const double up = dc_loss(v, y);
      v(i) = keep - h;
      const double down = dc_loss(v, y);
      v(i) = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-6}));
    }
    EXPECT_LT(worst, 1e-4);
  }
}

TEST(DcLossGrad, FusedMatchesSeparate) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd v = random_matrix(rng, 30, 3), y = random_one_hot(rng, 30, 1 + trial % 3);
    Eigen::MatrixXd g;
    const double loss = dc_loss_with_grad(v, y, g);
    EXPECT_NEAR(loss, dc_loss(v, y), 1e-10 * std::max(1.0, loss));
    EXPECT_LT((g - dc_loss_grad(v, y)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

}  // namespace
}  // namespace mixclust
