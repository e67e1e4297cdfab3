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

// Lloyd's K-means with k-means++ seeding and best-of-N restarts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mixclust/error.hpp"
#include "mixclust/rng.hpp"

namespace mixclust {

struct KmeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-8;  // on the largest centroid shift
};

struct KmeansResult {
  std::vector<std::size_t> assignments;
  Eigen::MatrixXd centroids;  // k x d
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::vector<double> inertia_history;  // after every assignment step of the winning run
};

namespace kmeans_detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double sq_dist(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

// Nearest centroid for every point; ties go to the lowest index.
inline double assign(const RowMatrix& p, const RowMatrix& c, std::vector<std::size_t>& labels,
                     std::vector<double>& dist) {
  const Eigen::Index n = p.rows(), k = c.rows(), d = p.cols();
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* x = p.data() + i * d;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double dd = sq_dist(x, c.data() + j * d, d);
      if (dd < best) {
        best = dd;
        arg = static_cast<std::size_t>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    dist[static_cast<std::size_t>(i)] = best;
    inertia += best;
  }
  return inertia;
}

inline RowMatrix seed_plus_plus(const RowMatrix& p, std::size_t k, Rng& rng) {
  const Eigen::Index n = p.rows(), d = p.cols();
  RowMatrix c(static_cast<Eigen::Index>(k), d);
  c.row(0) = p.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = sq_dist(p.data() + i * d, c.data(), d);
  for (std::size_t j = 1; j < k; ++j) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist[static_cast<std::size_t>(i)];
        if (acc > target && dist[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    }
    c.row(static_cast<Eigen::Index>(j)) = p.row(pick);
    const double* cj = c.data() + static_cast<Eigen::Index>(j) * d;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& di = dist[static_cast<std::size_t>(i)];
      di = std::min(di, sq_dist(p.data() + i * d, cj, d));
    }
  }
  return c;
}

struct Run {
  std::vector<std::size_t> labels;
  RowMatrix centroids;
  double inertia;
  std::size_t iterations;
  std::vector<double> history;
};

inline Run lloyd(const RowMatrix& p, std::size_t k, Rng& rng, const KmeansOptions& opt) {
  const Eigen::Index n = p.rows(), d = p.cols();
  Run run;
  run.centroids = seed_plus_plus(p, k, rng);
  run.labels.assign(static_cast<std::size_t>(n), 0);
  run.iterations = 0;
  std::vector<double> dist(static_cast<std::size_t>(n));
  RowMatrix sums(static_cast<Eigen::Index>(k), d);
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 1; iter <= opt.max_iter; ++iter) {
    run.history.push_back(assign(p, run.centroids, run.labels, dist));
    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t l = run.labels[static_cast<std::size_t>(i)];
      sums.row(static_cast<Eigen::Index>(l)) += p.row(i);
      counts[l] += 1;
    }
    RowMatrix next = run.centroids;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        next.row(static_cast<Eigen::Index>(j)) = sums.row(static_cast<Eigen::Index>(j)) / static_cast<double>(counts[j]);
      } else {
        // empty: move to the point worst served by its current centroid
        const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
        next.row(static_cast<Eigen::Index>(j)) = p.row(far);
        dist[static_cast<std::size_t>(far)] = 0.0;
      }
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      shift = std::max(shift, (next.row(jj) - run.centroids.row(jj)).norm());
    }
    run.centroids = std::move(next);
    run.iterations = iter;
    if (shift < opt.tol) break;
  }
  run.inertia = assign(p, run.centroids, run.labels, dist);
  run.history.push_back(run.inertia);
  return run;
}

}  // namespace kmeans_detail

// Clusters the rows of `points` (n x d). Rows are processed in lexicographic
// order internally, so the result depends only on the set of rows: permuting
// the input permutes the assignments the same way.
inline KmeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, std::size_t k, Rng& rng,
                           const KmeansOptions& opt = {}) {
  using kmeans_detail::RowMatrix;
  const Eigen::Index n = points.rows(), d = points.cols();
  if (k < 1) throw InvalidInput("kmeans: k must be at least 1");
  if (d < 1) throw InvalidInput("kmeans: points need at least one dimension");
  if (static_cast<std::size_t>(n) < k) throw InvalidInput("kmeans: fewer points than clusters");
  if (!points.allFinite()) throw InvalidInput("kmeans: non-finite point coordinates");
  if (opt.restarts < 1 || opt.max_iter < 1) throw InvalidInput("kmeans: restarts and max_iter must be >= 1");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
    }
    return false;
  });
  RowMatrix sorted(n, d);
  for (Eigen::Index i = 0; i < n; ++i) sorted.row(i) = points.row(order[static_cast<std::size_t>(i)]);

  std::vector<std::uint64_t> seeds(opt.restarts);
  for (auto& s : seeds) s = rng.next_u64();

  kmeans_detail::Run best;
  bool have = false;
  for (std::uint64_t s : seeds) {
    Rng sub(s);
    auto run = kmeans_detail::lloyd(sorted, k, sub, opt);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }

  KmeansResult out;
  out.assignments.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out.assignments[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = best.labels[static_cast<std::size_t>(i)];
  out.centroids = best.centroids;
  out.inertia = best.inertia;
  out.iterations_run = best.iterations;
  out.inertia_history = std::move(best.history);
  return out;
}

}  // namespace mixclust
