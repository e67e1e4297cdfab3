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
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mixclust {
namespace {

using testing::planted_scene;

TEST(Scene, SingleSourceHasUnitWeight) {
  Rng rng(1);
  const Scene s = sample_scene(rng, 1, Geometry{});
  ASSERT_EQ(s.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(s.weights[0], 1.0);
}

TEST(Scene, EndfireDelay) {
  const Geometry g;
  EXPECT_NEAR(g.max_delay() * 1e6, 29.15, 0.01);
  EXPECT_NEAR(g.max_delay() * g.sample_rate, 0.466, 0.001);
}

TEST(Scene, CloseAnglesAreRejected) {
  Scene s = planted_scene({1e-5, 2e-5}, {0.5, 0.5});
  s.angles = {30.0, 35.0};
  EXPECT_FALSE(scene_violation(s, Geometry{}).empty());
  s.angles = {30.0, 41.0};
  EXPECT_TRUE(scene_violation(s, Geometry{}).empty());
}

TEST(Scene, TenThousandScenesSatisfyInvariants) {
  Rng rng(2);
  const Geometry g;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng.index(4);
    const Scene s = sample_scene(rng, n, g);
    ASSERT_EQ(scene_violation(s, g), "") << i;
    for (std::size_t k = 0; k < n; ++k) {
      ASSERT_LE(std::abs(s.delays[k]) * g.sample_rate, 1.0);
      EXPECT_NEAR(s.delays[k], g.max_delay() * std::cos(s.angles[k] * std::numbers::pi / 180.0), 1e-18);
      const double r = std::hypot(s.positions[k][0], s.positions[k][1]);
      EXPECT_GE(r, g.min_source_radius - 1e-12);
      EXPECT_LE(r, g.room_half_extent + 1e-12);
    }
  }
}

TEST(Scene, WeightsFollowInverseDistance) {
  Rng rng(3);
  const Scene s = sample_scene(rng, 3, Geometry{});
  for (std::size_t i = 1; i < 3; ++i) {
    const double ri = std::hypot(s.positions[i][0], s.positions[i][1]);
    const double r0 = std::hypot(s.positions[0][0], s.positions[0][1]);
    EXPECT_NEAR(s.weights[i] / s.weights[0], r0 / ri, 1e-12);
  }
}

TEST(Scene, CrowdedGeometryIsInfeasible) {
  Geometry g;
  g.min_angle_separation = 100.0;
  Rng rng(4);
  EXPECT_THROW(sample_scene(rng, 3, g, 200), InfeasibleScene);
}

TEST(Scene, DeterministicGivenSeed) {
  Rng a(5), b(5);
  const Scene s1 = sample_scene(a, 3, Geometry{}), s2 = sample_scene(b, 3, Geometry{});
  EXPECT_EQ(s1.angles, s2.angles);
  EXPECT_EQ(s1.weights, s2.weights);
}

std::vector<double> speech(std::size_t n, std::uint64_t seed) {
  SyntheticCorpus corpus(4, seed);
  Rng rng(seed);
  return corpus.utterance(0, n, rng);
}

TEST(Render, ZeroDelayGivesIdenticalChannels) {
  const std::vector<Waveform> src = {{speech(8000, 1), 16000.0}};
  const StereoMixture m = render_stereo_mixture(src, planted_scene({0.0}, {1.0}), StftConfig{});
  EXPECT_EQ(m.mic1.samples, m.mic2.samples);
}

TEST(Render, FractionalAdvanceMatchesAnalyticTones) {
  const Geometry g;
  for (const double d : {g.max_delay(), -g.max_delay() / 3.0}) {
    auto tones = [](double t) {
      return std::sin(2.0 * std::numbers::pi * 440.0 * t) + 0.5 * std::cos(2.0 * std::numbers::pi * 3100.0 * t + 1.0);
    };
    std::vector<double> x(16000);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = tones(t / 16000.0);
    const StereoMixture m = render_stereo_mixture(std::vector<Waveform>{{x, 16000.0}}, planted_scene({d}, {1.0}), StftConfig{});
    double worst = 0.0;
    for (std::size_t t = 3000; t + 3000 < x.size(); ++t)
      worst = std::max(worst, std::abs(m.mic2.samples[t] - tones(t / 16000.0 + d)));
    EXPECT_LT(worst, 1e-3) << d;
  }
}

TEST(Render, EqualWeightsGiveAverageSignal) {
  const auto a = speech(4000, 3), b = speech(4000, 4);
  const std::vector<Waveform> src = {{a, 16000.0}, {b, 16000.0}};
  const StereoMixture m = render_stereo_mixture(src, planted_scene({1e-5, -1e-5}, {0.5, 0.5}), StftConfig{});
  double e_mix = 0.0, e_avg = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e_mix += m.mic1.samples[i] * m.mic1.samples[i];
    e_avg += std::pow(0.5 * (a[i] + b[i]), 2);
  }
  EXPECT_NEAR(e_mix / e_avg, 1.0, 1e-12);
}

TEST(Render, MixtureIsSumOfImages) {
  Rng rng(5);
  const Scene sc = sample_scene(rng, 3, Geometry{});
  const std::vector<Waveform> src = {{speech(4000, 5), 16000.0}, {speech(4000, 6), 16000.0}, {speech(4000, 7), 16000.0}};
  const StereoMixture m = render_stereo_mixture(src, sc, StftConfig{});
  for (std::size_t t = 0; t < 4000; ++t) {
    double s = 0.0;
    for (const auto& im : m.images) s += im.samples[t];
    EXPECT_NEAR(s, m.mic1.samples[t], 1e-12);
  }
}

TEST(Render, RejectsMismatches) {
  const std::vector<Waveform> src = {{speech(4000, 1), 16000.0}, {speech(3000, 2), 16000.0}};
  EXPECT_THROW(render_stereo_mixture(src, planted_scene({0, 0}, {0.5, 0.5}), StftConfig{}), InvalidInput);
  const std::vector<Waveform> src2 = {{speech(4000, 1), 8000.0}};
  EXPECT_THROW(render_stereo_mixture(src2, planted_scene({0}, {1}), StftConfig{}), InvalidInput);
  const std::vector<Waveform> src3 = {{speech(4000, 1), 16000.0}};
  EXPECT_THROW(render_stereo_mixture(src3, planted_scene({0, 0}, {0.5, 0.5}), StftConfig{}), InvalidInput);
}

TEST(Corpus, SyntheticSpeakersAlternateGender) {
  SyntheticCorpus c(6, 1);
  ASSERT_EQ(c.speakers().size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(c.speakers()[i].gender, i % 2 == 0 ? Gender::kFemale : Gender::kMale);
}

TEST(Corpus, UtteranceIsUnitRmsAndDeterministic) {
  SyntheticCorpus c(4, 9);
  Rng a(1), b(1);
  const auto x = c.utterance(1, 16000, a), y = c.utterance(1, 16000, b);
  EXPECT_EQ(x, y);
  double e = 0.0;
  for (double v : x) e += v * v;
  EXPECT_NEAR(std::sqrt(e / 16000.0), 1.0, 1e-9);
}

TEST(Dataset, PlanCountsAndDisjointSpeakers) {
  SyntheticCorpus corpus(20, 1);
  DatasetSpec spec;
  spec.train = 10;
  spec.eval = 2;
  spec.test = 4;
  const auto plans = plan_dataset(corpus, spec, Geometry{}, 3);
  ASSERT_EQ(plans.size(), 16u);
  std::array<std::set<std::size_t>, 3> used;
  for (const auto& p : plans) {
    ASSERT_EQ(p.speakers.size(), 2u);
    EXPECT_NE(p.speakers[0], p.speakers[1]);
    std::size_t females = 0;
    for (auto s : p.speakers) {
      used[static_cast<std::size_t>(p.split)].insert(s);
      females += corpus.speakers()[s].gender == Gender::kFemale;
    }
    EXPECT_EQ(females, 1u);
  }
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b)
      for (auto s : used[a]) EXPECT_FALSE(used[b].count(s)) << "speaker " << s << " shared";
}

TEST(Dataset, TimitProtocolCounts) {
  const DatasetSpec spec = DatasetSpec::timit_protocol(2, GenderGroup::kMixed);
  EXPECT_EQ(spec.train, 5400u);
  EXPECT_EQ(spec.eval, 900u);
  EXPECT_EQ(spec.test, 1800u);
  SyntheticCorpus corpus(60, 1);
  const auto plans = plan_dataset(corpus, spec, Geometry{}, 1);
  std::array<std::size_t, 3> n{};
  for (const auto& p : plans) n[static_cast<std::size_t>(p.split)]++;
  EXPECT_EQ(n[0], 5400u);
  EXPECT_EQ(n[1], 900u);
  EXPECT_EQ(n[2], 1800u);
}

TEST(Dataset, InsufficientSpeakers) {
  SyntheticCorpus corpus(2, 1);
  DatasetSpec spec;
  spec.n_sources = 3;
  spec.gender_group = GenderGroup::kFemale;
  EXPECT_THROW(plan_dataset(corpus, spec, Geometry{}, 1), ConfigError);
  SyntheticCorpus six(6, 1);
  spec.n_sources = 2;
  EXPECT_THROW(plan_dataset(six, spec, Geometry{}, 1), ConfigError);  // 3 females, need 2 per split
}

TEST(Dataset, GenerateWritesConsistentFiles) {
  const auto dir = testing::temp_dir("dataset");
  SyntheticCorpus corpus(12, 2);
  DatasetSpec spec;
  spec.train = 3;
  spec.eval = 1;
  spec.test = 2;
  const DatasetManifest m = generate_dataset(corpus, spec, Geometry{}, StftConfig{}, 5, dir, 2);
  ASSERT_EQ(m.entries.size(), 6u);
  const DatasetManifest back = read_manifest(dir / "manifest.jsonl");
  ASSERT_EQ(back.entries.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(to_json(back.entries[i]), to_json(m.entries[i]));
    const LoadedClip clip = load_clip(back, back.entries[i]);
    ASSERT_EQ(clip.mixture.num_channels(), 2u);
    ASSERT_EQ(clip.mixture.num_frames(), 32000u);
    ASSERT_EQ(clip.references.size(), 2u);
    // mixture identity against the stored references
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < 32000; ++t) {
      const double s = clip.references[0].samples[t] + clip.references[1].samples[t];
      num += std::pow(s - clip.mixture.channels[0][t], 2);
      den += std::pow(clip.mixture.channels[0][t], 2);
    }
    EXPECT_LT(std::sqrt(num / den), 1e-6);
    // every source active in every half second
    for (const auto& r : clip.references) {
      double total = 0.0;
      for (double v : r.samples) total += v * v;
      for (std::size_t w = 0; w < 4; ++w) {
        double e = 0.0;
        for (std::size_t t = w * 8000; t < (w + 1) * 8000; ++t) e += r.samples[t] * r.samples[t];
        EXPECT_GT(e / 8000.0, 0.01 * total / 32000.0) << back.entries[i].id << " window " << w;
      }
    }
  }
}

TEST(Dataset, DirectoryCorpusReadsSpeakerFolders) {
  const auto dir = testing::temp_dir("dircorpus");
  SyntheticCorpus synth(4, 3);
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string name = (s % 2 == 0 ? "f" : "m") + std::to_string(s);
    std::filesystem::create_directories(dir / name);
    Rng rng(s);
    write_wav(dir / name / "a.wav", AudioBuffer{{synth.utterance(s, 20000, rng)}, 16000.0});
  }
  DirectoryCorpus corpus(dir, 16000.0);
  ASSERT_EQ(corpus.speakers().size(), 4u);
  Rng rng(1);
  const auto u = corpus.utterance(0, 30000, rng);
  EXPECT_EQ(u.size(), 30000u);
  EXPECT_THROW(DirectoryCorpus(dir / "missing", 16000.0), ConfigError);
}

}  // namespace
}  // namespace mixclust
