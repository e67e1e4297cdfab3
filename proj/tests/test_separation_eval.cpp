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
#include <numeric>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mixclust {
namespace {

namespace fs = std::filesystem;

Checkpoint random_checkpoint(std::uint64_t seed) {
  TrainConfig tc;
  tc.seed = seed;
  tc.kmeans_restarts = 2;
  NetworkConfig nc;
  nc.hidden = 8;
  nc.embed = 6;
  return initial_checkpoint(nc, StftConfig{}, tc, "none");
}

Waveform speech_mixture(std::uint64_t seed) {
  SyntheticCorpus corpus(4, seed);
  Rng rng(seed);
  const auto a = corpus.utterance(0, 16000, rng), b = corpus.utterance(1, 16000, rng);
  Waveform w{std::vector<double>(16000), 16000.0};
  for (std::size_t i = 0; i < 16000; ++i) w.samples[i] = 0.5 * (a[i] + b[i]);
  return w;
}

TEST(Separate, OneSourceReturnsTheResynthesizedInput) {
  const Checkpoint ck = random_checkpoint(1);
  const Waveform x = speech_mixture(2);
  Rng rng(3);
  const SeparationResult r = separate(ck, x, 1, rng);
  ASSERT_EQ(r.sources.size(), 1u);
  const Waveform y = istft(stft(x, StftConfig{}), x.size());
  ASSERT_EQ(r.sources[0].size(), x.size());
  for (std::size_t i = 1; i < x.size(); ++i) EXPECT_NEAR(r.sources[0].samples[i], y.samples[i], 1e-12);
  for (std::size_t i = 1; i < x.size(); ++i) EXPECT_NEAR(r.sources[0].samples[i], x.samples[i], 1e-9);
}

TEST(Separate, OutputsPartitionTheInput) {
  const Checkpoint ck = random_checkpoint(4);
  const Waveform x = speech_mixture(5);
  for (std::size_t n : {2u, 3u}) {
    Rng rng(6);
    const SeparationResult r = separate(ck, x, n, rng);
    ASSERT_EQ(r.sources.size(), n);
    EXPECT_EQ(r.mask.n_sources, n);
    for (std::size_t i = 1; i < x.size(); ++i) {
      double sum = 0.0;
      for (const auto& s : r.sources) sum += s.samples[i];
      EXPECT_NEAR(sum, x.samples[i], 1e-9);
    }
    EXPECT_GE(r.embedding_inertia, 0.0);
  }
}

TEST(Separate, DeterministicForASeed) {
  const Checkpoint ck = random_checkpoint(7);
  const Waveform x = speech_mixture(8);
  Rng a(9), b(9);
  const SeparationResult ra = separate(ck, x, 2, a), rb = separate(ck, x, 2, b);
  EXPECT_EQ(ra.mask.assignments, rb.mask.assignments);
  EXPECT_EQ(ra.sources[0].samples, rb.sources[0].samples);
}

TEST(Separate, RejectsStereoAndRateMismatch) {
  const Checkpoint ck = random_checkpoint(10);
  const Waveform x = speech_mixture(11);
  Rng rng(12);
  EXPECT_THROW(separate(ck, AudioBuffer{{x.samples, x.samples}, 16000.0}, 2, rng), InvalidInput);
  EXPECT_NO_THROW(separate(ck, AudioBuffer{{x.samples}, 16000.0}, 2, rng));
  EXPECT_THROW(separate(ck, Waveform{x.samples, 8000.0}, 2, rng), InvalidInput);
  EXPECT_THROW(separate(ck, x, 0, rng), InvalidInput);
}

TEST(Sdr, CapAndGainInvariance) {
  Rng rng(1);
  const Waveform r = testing::random_waveform(rng, 1000);
  EXPECT_EQ(sdr(r, r), kSdrCap);
  Waveform half = r;
  for (auto& v : half.samples) v *= 0.5;
  EXPECT_EQ(sdr(half, r), kSdrCap);
}

TEST(Sdr, EqualPowerOrthogonalNoiseIsZeroDb) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Waveform r = testing::random_waveform(rng, 4000);
    Waveform n = testing::random_waveform(rng, 4000);
    double rr = 0, nr = 0;
    for (std::size_t i = 0; i < 4000; ++i) {
      rr += r.samples[i] * r.samples[i];
      nr += n.samples[i] * r.samples[i];
    }
    for (std::size_t i = 0; i < 4000; ++i) n.samples[i] -= nr / rr * r.samples[i];
    double nn = 0;
    for (double v : n.samples) nn += v * v;
    Waveform e = r;
    for (std::size_t i = 0; i < 4000; ++i) e.samples[i] += std::sqrt(rr / nn) * n.samples[i];
    EXPECT_NEAR(sdr(e, r), 0.0, 0.1);
  }
}

TEST(Sdr, Errors) {
  Rng rng(3);
  const Waveform r = testing::random_waveform(rng, 100);
  EXPECT_THROW(sdr(r, Waveform{std::vector<double>(100, 0.0), 16000.0}), InvalidInput);
  EXPECT_THROW(sdr(r, Waveform{std::vector<double>(99, 1.0), 16000.0}), InvalidInput);
}

TEST(Permutation, ReversedAndSingle) {
  Rng rng(4);
  const std::vector<Waveform> refs = {testing::random_waveform(rng, 500), testing::random_waveform(rng, 500)};
  const std::vector<Waveform> est = {refs[1], refs[0]};
  const PermutationResult p = resolve_permutation(est, refs);
  EXPECT_EQ(p.estimate_for, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(p.sdrs, (std::vector<double>{kSdrCap, kSdrCap}));
  const PermutationResult one = resolve_permutation({refs[0]}, {refs[0]});
  EXPECT_EQ(one.estimate_for, (std::vector<std::size_t>{0}));
}

TEST(Permutation, RecoversPlantedThreeSourceAssignment) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Waveform> refs;
    for (int i = 0; i < 3; ++i) refs.push_back(testing::random_waveform(rng, 800));
    std::vector<std::size_t> planted = {0, 1, 2};
    for (std::size_t i = 3; i > 1; --i) std::swap(planted[i - 1], planted[rng.index(i)]);
    std::vector<Waveform> est(3);
    for (std::size_t r = 0; r < 3; ++r) {
      est[planted[r]] = refs[r];
      for (auto& v : est[planted[r]].samples) v += 0.1 * rng.normal();
    }
    EXPECT_EQ(resolve_permutation(est, refs).estimate_for, planted);
  }
}

TEST(Permutation, Errors) {
  Rng rng(6);
  const Waveform w = testing::random_waveform(rng, 50);
  EXPECT_THROW(resolve_permutation({w}, {w, w}), InvalidInput);
  EXPECT_THROW(resolve_permutation(std::vector<Waveform>(5, w), std::vector<Waveform>(5, w)), InvalidInput);
}

TEST(Summary, QuantilesInterpolateLinearly) {
  const std::vector<double> xs = {4, 1, 3, 2, 5};
  EXPECT_EQ(quantile(xs, 0.5), 3.0);
  EXPECT_EQ(quantile(xs, 0.25), 2.0);
  EXPECT_EQ(quantile({1, 2}, 0.5), 1.5);
  const Summary s = summarize({1, 2, 3, 4});
  EXPECT_EQ(s.median, 2.5);
  EXPECT_EQ(s.q1, 1.75);
  EXPECT_EQ(s.q3, 3.25);
  EXPECT_EQ(s.iqr(), 1.5);
  EXPECT_EQ(s.mean, 2.5);
  EXPECT_THROW(quantile({}, 0.5), InvalidInput);
}

TEST(Summary, BoxplotWhiskersStopAtOnePointFiveIqr) {
  const auto j = boxplot_stats({1, 2, 3, 4, 5, 100});
  EXPECT_EQ(j["count"], 6);
  EXPECT_EQ(j["whisker_low"], 1.0);
  EXPECT_EQ(j["whisker_high"], 5.0);
  EXPECT_EQ(j["points"].size(), 6u);
}

class EvalTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::temp_dir("eval"));
    manifest_ = new DatasetManifest(cmd_gen(testing::small_config(*dir_ / "data", 1, 1, 4, 8), 1));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static fs::path* dir_;
  static DatasetManifest* manifest_;
};

fs::path* EvalTest::dir_ = nullptr;
DatasetManifest* EvalTest::manifest_ = nullptr;

TEST_F(EvalTest, ImprovementIsSdrMinusInitialExactly) {
  for (EvalMethod m : {EvalMethod::kInitial, EvalMethod::kOracleDs, EvalMethod::kOracleBpd}) {
    const SdrReport rep = evaluate(m, *manifest_, EvalOptions{});
    ASSERT_EQ(rep.rows.size(), 8u);
    for (const auto& r : rep.rows) EXPECT_EQ(r.improvement_db, r.sdr_db - r.initial_sdr_db);
    if (m == EvalMethod::kInitial)
      for (const auto& r : rep.rows) EXPECT_EQ(r.improvement_db, 0.0);
  }
}

TEST_F(EvalTest, OraclesBeatTheMixture) {
  const SdrReport ds = evaluate(EvalMethod::kOracleDs, *manifest_, EvalOptions{});
  const SdrReport bpd = evaluate(EvalMethod::kOracleBpd, *manifest_, EvalOptions{});
  EXPECT_EQ(ds.method, "DS oracle");
  EXPECT_EQ(bpd.method, "BPD oracle");
  EXPECT_GT(summarize(ds.improvements()).median, 3.0);
  EXPECT_GT(summarize(bpd.improvements()).median, 3.0);
}

TEST_F(EvalTest, CheckpointMethodUsesTheTrainedTarget) {
  const Checkpoint ck = random_checkpoint(13);
  const SdrReport rep = evaluate(EvalMethod::kCheckpoint, *manifest_, EvalOptions{}, &ck);
  EXPECT_EQ(rep.method, "DC BPD");
  EXPECT_EQ(rep.rows.size(), 8u);
  EXPECT_THROW(evaluate(EvalMethod::kCheckpoint, *manifest_, EvalOptions{}), ConfigError);
}

TEST_F(EvalTest, MissingOrMismatchedReferences) {
  DatasetManifest m = *manifest_;
  for (auto& e : m.entries) e.source_paths.clear();
  EXPECT_THROW(evaluate(EvalMethod::kInitial, m, EvalOptions{}), ConfigError);
  EvalOptions three;
  three.n_sources = 3;
  EXPECT_THROW(evaluate(EvalMethod::kInitial, *manifest_, three), ConfigError);
}

TEST_F(EvalTest, ReportCsvRoundTrips) {
  const SdrReport rep = evaluate(EvalMethod::kOracleDs, *manifest_, EvalOptions{});
  const fs::path path = *dir_ / "r.csv";
  write_report_csv(path, {rep});
  const auto rows = read_report_csv(path);
  ASSERT_EQ(rows.size(), rep.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].mixture_id, rep.rows[i].mixture_id);
    EXPECT_NEAR(rows[i].sdr_db, rep.rows[i].sdr_db, 1e-8);
    EXPECT_EQ(rows[i].gender_group, rep.rows[i].gender_group);
  }
  const auto box = boxplot_json(rows);
  EXPECT_TRUE(box.contains("DS oracle"));
  EXPECT_TRUE(box["DS oracle"].contains("all"));
  EXPECT_EQ(box["DS oracle"]["all"]["sdr_db"]["count"], 8);
}

}  // namespace
}  // namespace mixclust
