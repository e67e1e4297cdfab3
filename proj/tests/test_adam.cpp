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


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mixclust {
namespace {

// f(x) = 0.5 * sum_i a_i x_i^2 over two tensors.
double quadratic(const std::vector<Eigen::MatrixXd>& p, const std::vector<Eigen::MatrixXd>& a) {
  double f = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) f += 0.5 * (a[i].array() * p[i].array().square()).sum();
  return f;
}

TEST(Adam, FirstStepMovesEachEntryByTheLearningRate) {
  std::vector<Eigen::MatrixXd> p = {Eigen::MatrixXd::Zero(2, 2)};
  Eigen::MatrixXd g(2, 2);
  g << 3.0, -0.5, 1e-3, -40.0;
  Adam adam(AdamConfig{0.01, 0.9, 0.999, 1e-8});
  adam.step(p, {g});
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double expect = -0.01 * g.data()[i] / (std::abs(g.data()[i]) + 1e-8);
    EXPECT_NEAR(p[0].data()[i], expect, 1e-15);
  }
  EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, QuadraticDecreasesMonotonicallyAfterWarmup) {
  Rng rng(1);
  std::vector<Eigen::MatrixXd> p = {testing::random_matrix(rng, 4, 3), testing::random_matrix(rng, 5, 1)};
  std::vector<Eigen::MatrixXd> a = {(Eigen::MatrixXd::Random(4, 3).array().abs() + 0.1).matrix(),
                                    (Eigen::MatrixXd::Random(5, 1).array().abs() + 0.1).matrix()};
  // Start well away from the minimum so the default step size cannot overshoot.
  for (auto& t : p) t = (t.array().abs() + 1.0).matrix();
  Adam adam{AdamConfig{}};
  const double f0 = quadratic(p, a);
  double prev = f0;
  for (int step = 1; step <= 500; ++step) {
    std::vector<Eigen::MatrixXd> g = {a[0].cwiseProduct(p[0]), a[1].cwiseProduct(p[1])};
    adam.step(p, g);
    const double f = quadratic(p, a);
    if (step > 10) EXPECT_LT(f, prev) << step;
    prev = f;
  }
  EXPECT_LT(prev, f0);
}

TEST(Adam, RestoredStateContinuesIdentically) {
  Rng rng(2);
  std::vector<Eigen::MatrixXd> p = {testing::random_matrix(rng, 3, 3)};
  Adam a{AdamConfig{}};
  for (int i = 0; i < 5; ++i) a.step(p, {p[0]});
  std::vector<Eigen::MatrixXd> q = p;
  Adam b{AdamConfig{}};
  b.restore(a.step_count(), a.first_moment(), a.second_moment());
  for (int i = 0; i < 5; ++i) {
    a.step(p, {p[0]});
    b.step(q, {q[0]});
  }
  EXPECT_EQ(p[0], q[0]);
}

TEST(Adam, RejectsMismatchedTensors) {
  std::vector<Eigen::MatrixXd> p = {Eigen::MatrixXd::Zero(2, 2)};
  Adam adam{AdamConfig{}};
  EXPECT_THROW(adam.step(p, {}), InvalidInput);
}

TEST(ClipGlobalNorm, ScalesAllTensorsTogether) {
  std::vector<Eigen::MatrixXd> g = {Eigen::MatrixXd::Constant(1, 1, 3.0), Eigen::MatrixXd::Constant(1, 1, 4.0)};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g[1](0, 0), 0.8, 1e-15);
  std::vector<Eigen::MatrixXd> small = {Eigen::MatrixXd::Constant(2, 1, 0.1)};
  clip_global_norm(small, 5.0);
  EXPECT_EQ(small[0](1, 0), 0.1);
}

}  // namespace
}  // namespace mixclust
