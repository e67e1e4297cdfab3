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

// Two-microphone anechoic mixture simulation and dataset materialisation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/parallel.hpp"
#include "mixclust/rng.hpp"
#include "mixclust/wav.hpp"

namespace mixclust {

struct Geometry {
  double mic_distance = 0.01;          // meters
  double speed_of_sound = 343.0;       // meters / second
  double sample_rate = 16000.0;        // Hz
  double min_angle_separation = 10.0;  // degrees
  double room_half_extent = 2.5;       // maximum source radius, meters
  double min_source_radius = 1.0;      // meters

  // Largest possible inter-microphone delay in seconds.
  double max_delay() const { return mic_distance / speed_of_sound; }

  void validate() const {
    if (!(mic_distance > 0) || !(speed_of_sound > 0) || !(sample_rate > 0))
      throw ConfigError("geometry: distances, speed of sound and sample rate must be positive");
    if (mic_distance * sample_rate / speed_of_sound > 1.0)
      throw ConfigError("geometry: inter-microphone delay may exceed one sample");
    if (!(min_angle_separation > 0)) throw ConfigError("geometry: min_angle_separation must be > 0");
    if (!(min_source_radius > 0) || room_half_extent < min_source_radius)
      throw ConfigError("geometry: need 0 < min_source_radius <= room_half_extent");
  }
};

struct Scene {
  std::vector<std::array<double, 2>> positions;  // meters, microphone pair at the origin
  std::vector<double> angles;                    // degrees
  std::vector<double> delays;                    // seconds, mic 1 -> mic 2
  std::vector<double> weights;                   // sum to one

  std::size_t size() const { return angles.size(); }
};

// Empty string when the scene satisfies every invariant, else the reason.
inline std::string scene_violation(const Scene& s, const Geometry& g) {
  const std::size_t n = s.size();
  if (s.positions.size() != n || s.delays.size() != n || s.weights.size() != n)
    return "inconsistent source counts";
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(s.weights[i] > 0)) return "non-positive weight";
    total += s.weights[i];
    if (std::abs(s.delays[i]) > g.max_delay() * (1.0 + 1e-12)) return "delay exceeds mic_distance / c";
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(s.angles[i] - s.angles[j]) <= g.min_angle_separation) return "sources too close in angle";
    }
  }
  if (n > 0 && std::abs(total - 1.0) > 1e-12) return "weights do not sum to one";
  return {};
}

// Angles are drawn in [0, 180) degrees, the half plane on one side of the
// microphone axis, so distinct angles map to distinct far-field delays.
inline Scene sample_scene(Rng& rng, std::size_t n_sources, const Geometry& geom,
                          std::size_t max_attempts = 10000) {
  geom.validate();
  if (n_sources < 1) throw InvalidInput("sample_scene: need at least one source");
  Scene s;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt == max_attempts)
      throw InfeasibleScene("sample_scene: could not place " + std::to_string(n_sources) +
                            " sources with the required angular separation");
    s.angles.resize(n_sources);
    for (auto& a : s.angles) a = rng.uniform(0.0, 180.0);
    bool ok = true;
    for (std::size_t i = 0; i < n_sources && ok; ++i) {
      for (std::size_t j = i + 1; j < n_sources && ok; ++j) {
        ok = std::abs(s.angles[i] - s.angles[j]) > geom.min_angle_separation;
      }
    }
    if (ok) break;
  }
  s.positions.resize(n_sources);
  s.delays.resize(n_sources);
  s.weights.resize(n_sources);
  double total = 0.0;
  for (std::size_t i = 0; i < n_sources; ++i) {
    const double r = rng.uniform(geom.min_source_radius, geom.room_half_extent);
    const double rad = s.angles[i] * std::numbers::pi / 180.0;
    s.positions[i] = {r * std::cos(rad), r * std::sin(rad)};
    s.delays[i] = geom.max_delay() * std::cos(rad);
    s.weights[i] = 1.0 / r;
    total += s.weights[i];
  }
  for (auto& w : s.weights) w /= total;
  return s;
}

namespace sim_detail {

inline bool is_fast_length(std::size_t n) {
  for (std::size_t p : {2, 3, 5}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

inline std::size_t fast_length_at_least(std::size_t n) {
  while (!is_fast_length(n)) ++n;
  return n;
}

}  // namespace sim_detail

// y(t) = x(t + advance) applied as a phase ramp e^{j w advance} on a
// zero-padded full-length DFT. Padding keeps circular wrap-around away from
// the signal.
inline std::vector<double> fractional_advance(std::span<const double> x, double advance_seconds,
                                              double sample_rate) {
  const std::size_t n = x.size();
  if (n == 0 || advance_seconds == 0.0) return {x.begin(), x.end()};
  const std::size_t nfft = sim_detail::fast_length_at_least(n + 2048);
  std::vector<double> padded(nfft, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) * sample_rate / nfft;
    const double phase = w * advance_seconds;
    if (nfft % 2 == 0 && k == nfft / 2) {
      spec[k] *= std::cos(phase);  // Nyquist stays real
    } else {
      spec[k] *= std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  std::vector<double> out;
  fft.inv(out, spec, static_cast<int>(nfft));
  out.resize(n);
  return out;
}

struct StereoMixture {
  Waveform mic1;
  Waveform mic2;
  Scene scene;
  std::vector<std::string> source_ids;
  std::vector<Waveform> images;  // a_i * s_i as seen by mic 1
};

inline StereoMixture render_stereo_mixture(std::span<const Waveform> sources, const Scene& scene,
                                           const StftConfig& cfg) {
  if (sources.size() != scene.size()) throw InvalidInput("render: source count does not match scene");
  if (sources.empty()) throw InvalidInput("render: no sources");
  const std::size_t n = sources.front().size();
  for (const auto& s : sources) {
    if (s.size() != n) throw InvalidInput("render: sources differ in length");
    if (s.sample_rate != cfg.sample_rate) throw InvalidInput("render: sample rate mismatch");
  }
  StereoMixture mix;
  mix.scene = scene;
  mix.mic1 = {std::vector<double>(n, 0.0), cfg.sample_rate};
  mix.mic2 = {std::vector<double>(n, 0.0), cfg.sample_rate};
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const double a = scene.weights[i];
    Waveform image{std::vector<double>(n), cfg.sample_rate};
    for (std::size_t t = 0; t < n; ++t) image.samples[t] = a * sources[i].samples[t];
    const auto shifted = fractional_advance(sources[i].samples, scene.delays[i], cfg.sample_rate);
    for (std::size_t t = 0; t < n; ++t) {
      mix.mic1.samples[t] += image.samples[t];
      mix.mic2.samples[t] += a * shifted[t];
    }
    mix.images.push_back(std::move(image));
  }
  return mix;
}

// ---------------------------------------------------------------------------
// Source corpora

enum class Gender { kFemale, kMale };
enum class GenderGroup { kFemale, kMale, kMixed };

inline std::string to_string(GenderGroup g) {
  switch (g) {
    case GenderGroup::kFemale: return "f";
    case GenderGroup::kMale: return "m";
    case GenderGroup::kMixed: return "fm";
  }
  return "fm";
}

inline GenderGroup parse_gender_group(const std::string& s) {
  if (s == "f") return GenderGroup::kFemale;
  if (s == "m") return GenderGroup::kMale;
  if (s == "fm" || s == "mf") return GenderGroup::kMixed;
  throw ConfigError("unknown gender group '" + s + "' (expected f, m or fm)");
}

struct SpeakerInfo {
  std::string id;
  Gender gender;
};

// Provides clean single-speaker signals by speaker identity.
class SourceCorpus {
 public:
  virtual ~SourceCorpus() = default;
  virtual const std::vector<SpeakerInfo>& speakers() const = 0;
  virtual double sample_rate() const = 0;
  // `length` samples of speech-like material from one speaker, unit RMS.
  virtual std::vector<double> utterance(std::size_t speaker, std::size_t length, Rng& rng) const = 0;
};

namespace sim_detail {

inline void normalize_rms(std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  if (e <= 0.0) return;
  const double scale = 1.0 / std::sqrt(e / static_cast<double>(x.size()));
  for (double& v : x) v *= scale;
}

}  // namespace sim_detail

// Self-contained stand-in for a speech corpus: voiced syllables built from
// harmonics of a vibrato-modulated f0 shaped by per-speaker formants, with
// amplitude-modulated noise bursts for unvoiced onsets. Speakers alternate
// female (f0 in [165, 255] Hz) and male (f0 in [90, 155] Hz).
class SyntheticCorpus final : public SourceCorpus {
 public:
  explicit SyntheticCorpus(std::size_t num_speakers, std::uint64_t seed = 0, double sample_rate = 16000.0)
      : sample_rate_(sample_rate) {
    Rng rng(derive_seed(seed, "synthetic-corpus"));
    for (std::size_t i = 0; i < num_speakers; ++i) {
      Voice v;
      const bool female = i % 2 == 0;
      v.f0 = female ? rng.uniform(165.0, 255.0) : rng.uniform(90.0, 155.0);
      const double scale = female ? 1.17 : 1.0;
      v.formants = {rng.uniform(450.0, 750.0) * scale, rng.uniform(1100.0, 1900.0) * scale,
                    rng.uniform(2300.0, 3000.0) * scale};
      v.vibrato_rate = rng.uniform(4.0, 7.0);
      v.vibrato_depth = rng.uniform(0.005, 0.02);
      v.syllable_rate = rng.uniform(3.0, 5.5);
      v.tilt = rng.uniform(0.6, 1.0);
      v.breath = rng.uniform(0.01, 0.04);
      voices_.push_back(v);
      std::ostringstream id;
      id << (female ? "f" : "m") << "syn" << i;
      speakers_.push_back({id.str(), female ? Gender::kFemale : Gender::kMale});
    }
  }

  const std::vector<SpeakerInfo>& speakers() const override { return speakers_; }
  double sample_rate() const override { return sample_rate_; }

  std::vector<double> utterance(std::size_t speaker, std::size_t length, Rng& rng) const override {
    const Voice& v = voices_.at(speaker);
    const double fs = sample_rate_;
    const double pi = std::numbers::pi;
    std::vector<double> out(length, 0.0);

    // syllable layout: voiced segments separated by short gaps
    struct Syllable {
      std::size_t begin, end;
      std::array<double, 3> formants;
      double level;
      std::size_t burst;  // samples of unvoiced onset, 0 for none
    };
    std::vector<Syllable> syllables;
    const double mean_len = 1.0 / v.syllable_rate;
    double t = rng.uniform(0.0, 0.04);
    while (t * fs < static_cast<double>(length)) {
      const double dur = mean_len * rng.uniform(0.6, 1.1);
      Syllable s;
      s.begin = static_cast<std::size_t>(t * fs);
      s.end = std::min(length, static_cast<std::size_t>((t + dur) * fs));
      for (std::size_t k = 0; k < 3; ++k) s.formants[k] = v.formants[k] * rng.uniform(0.8, 1.25);
      s.level = rng.uniform(0.6, 1.0);
      s.burst = rng.uniform() < 0.3 ? static_cast<std::size_t>(rng.uniform(0.03, 0.08) * fs) : 0;
      syllables.push_back(s);
      t += dur + rng.uniform(0.02, 0.07);
    }

    // f0 contour: slow intonation drift plus vibrato
    const double drift_rate = rng.uniform(0.3, 0.8);
    const double drift_phase = rng.uniform(0.0, 2 * pi);
    const double drift_depth = rng.uniform(0.03, 0.08);
    const double vib_phase = rng.uniform(0.0, 2 * pi);
    const std::size_t max_harm = static_cast<std::size_t>(7600.0 / (v.f0 * (1.0 - drift_depth - v.vibrato_depth)));
    std::vector<double> harm_phase(max_harm);
    for (auto& p : harm_phase) p = rng.uniform(0.0, 2 * pi);
    std::vector<double> harm_weight(max_harm);
    for (std::size_t h = 0; h < max_harm; ++h) harm_weight[h] = std::pow(static_cast<double>(h + 1), -v.tilt);

    const std::array<double, 3> bandwidth = {90.0, 130.0, 220.0};
    for (const Syllable& s : syllables) {
      const std::size_t n = s.end - s.begin;
      if (n < 8) continue;
      for (std::size_t i = s.begin; i < s.end; ++i) {
        const double tt = static_cast<double>(i) / fs;
        const double f0 = v.f0 * (1.0 + drift_depth * std::sin(2 * pi * drift_rate * tt + drift_phase)) *
                          (1.0 + v.vibrato_depth * std::sin(2 * pi * v.vibrato_rate * tt + vib_phase));
        const double pos = static_cast<double>(i - s.begin) / static_cast<double>(n);
        const double env = s.level * std::pow(std::sin(pi * pos), 0.6);
        double sample = 0.0;
        for (std::size_t h = 0; h < max_harm; ++h) {
          const double fh = f0 * static_cast<double>(h + 1);
          harm_phase[h] += 2 * pi * fh / fs;
          if (fh > 7800.0) continue;
          double gain = 0.04;
          for (std::size_t k = 0; k < 3; ++k) {
            const double d = (fh - s.formants[k]) / bandwidth[k];
            gain += 1.0 / (1.0 + d * d) / static_cast<double>(k + 1);
          }
          sample += gain * harm_weight[h] * std::sin(harm_phase[h]);
        }
        out[i] += env * sample;
      }
      if (s.burst > 0) {
        // high-passed noise with a raised-cosine amplitude envelope
        double prev = 0.0;
        const std::size_t b0 = s.begin >= s.burst / 2 ? s.begin - s.burst / 2 : 0;
        const std::size_t b1 = std::min(length, b0 + s.burst);
        for (std::size_t i = b0; i < b1; ++i) {
          const double w = rng.normal();
          const double hp = w - 0.85 * prev;
          prev = w;
          const double pos = static_cast<double>(i - b0) / static_cast<double>(b1 - b0);
          out[i] += 0.12 * s.level * std::sin(pi * pos) * hp;
        }
      }
    }
    for (double& x : out) x += v.breath * 0.05 * rng.normal();
    sim_detail::normalize_rms(out);
    return out;
  }

 private:
  struct Voice {
    double f0;
    std::array<double, 3> formants;
    double vibrato_rate, vibrato_depth, syllable_rate, tilt, breath;
  };
  double sample_rate_;
  std::vector<Voice> voices_;
  std::vector<SpeakerInfo> speakers_;
};

// Directory-of-WAVs corpus. Every directory holding .wav files is one
// speaker; the first letter of its name gives the gender (f/m), as in the
// TIMIT layout (e.g. DR1/FCJF0/SA1.wav).
class DirectoryCorpus final : public SourceCorpus {
 public:
  DirectoryCorpus(const std::filesystem::path& root, double sample_rate) : sample_rate_(sample_rate) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw ConfigError("corpus: not a directory: " + root.string());
    std::map<std::string, std::vector<fs::path>> by_dir;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file()) continue;
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (ext != ".wav") continue;
      by_dir[e.path().parent_path().string()].push_back(e.path());
    }
    for (auto& [dir, files] : by_dir) {
      const std::string name = fs::path(dir).filename().string();
      if (name.empty()) continue;
      const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
      if (c != 'f' && c != 'm') continue;
      std::sort(files.begin(), files.end());
      speakers_.push_back({name, c == 'f' ? Gender::kFemale : Gender::kMale});
      files_.push_back(files);
    }
    if (speakers_.empty()) throw ConfigError("corpus: no speaker directories under " + root.string());
  }

  const std::vector<SpeakerInfo>& speakers() const override { return speakers_; }
  double sample_rate() const override { return sample_rate_; }

  std::vector<double> utterance(std::size_t speaker, std::size_t length, Rng& rng) const override {
    const auto& files = files_.at(speaker);
    std::vector<std::size_t> order(files.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<double> pool;
    for (std::size_t pass = 0; pool.size() < 2 * length && pass < 64; ++pass) {
      for (std::size_t idx : order) {
        const AudioBuffer a = read_wav(files[idx]);
        if (a.sample_rate != sample_rate_)
          throw ConfigError("corpus: " + files[idx].string() + " has sample rate " +
                            std::to_string(a.sample_rate) + ", resampling is not supported");
        pool.insert(pool.end(), a.channels[0].begin(), a.channels[0].end());
        if (pool.size() >= 2 * length) break;
      }
      if (pool.empty()) break;
    }
    if (pool.size() < length) throw ConfigError("corpus: speaker " + speakers_[speaker].id + " has no audio");
    const std::size_t offset = rng.index(pool.size() - length + 1);
    std::vector<double> out(pool.begin() + static_cast<std::ptrdiff_t>(offset),
                            pool.begin() + static_cast<std::ptrdiff_t>(offset + length));
    sim_detail::normalize_rms(out);
    return out;
  }

 private:
  double sample_rate_;
  std::vector<SpeakerInfo> speakers_;
  std::vector<std::vector<std::filesystem::path>> files_;
};

// ---------------------------------------------------------------------------
// Datasets

enum class Split { kTrain, kEval, kTest };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kEval: return "eval";
    case Split::kTest: return "test";
  }
  return "train";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "eval") return Split::kEval;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "'");
}

struct DatasetSpec {
  std::size_t train = 20;
  std::size_t eval = 4;
  std::size_t test = 8;
  std::size_t n_sources = 2;
  GenderGroup gender_group = GenderGroup::kMixed;
  double clip_seconds = 2.0;

  std::size_t count(Split s) const {
    return s == Split::kTrain ? train : (s == Split::kEval ? eval : test);
  }

  // 3 h / 0.5 h / 1 h of 2 s clips.
  static DatasetSpec timit_protocol(std::size_t n_sources, GenderGroup group) {
    return {5400, 900, 1800, n_sources, group, 2.0};
  }
};

struct ManifestEntry {
  std::string id;
  std::string mixture_path;
  std::vector<std::string> source_paths;
  std::vector<double> angles;
  std::vector<double> delays_us;
  std::vector<double> weights;
  Split split = Split::kTrain;
  GenderGroup gender_group = GenderGroup::kMixed;
  std::size_t n_sources = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> speakers;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // paths in entries are relative to this

  std::vector<ManifestEntry> split(Split s) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
      if (e.split == s) out.push_back(e);
    }
    return out;
  }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : root / path;
  }
};

inline nlohmann::json to_json(const ManifestEntry& e) {
  return nlohmann::json{{"id", e.id},
                        {"mixture_path", e.mixture_path},
                        {"source_paths", e.source_paths},
                        {"angles", e.angles},
                        {"delays_us", e.delays_us},
                        {"weights", e.weights},
                        {"split", to_string(e.split)},
                        {"gender_group", to_string(e.gender_group)},
                        {"n_sources", e.n_sources},
                        {"seed", e.seed},
                        {"speakers", e.speakers}};
}

inline ManifestEntry manifest_entry_from_json(const nlohmann::json& j) {
  try {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.mixture_path = j.at("mixture_path").get<std::string>();
    e.source_paths = j.at("source_paths").get<std::vector<std::string>>();
    e.angles = j.at("angles").get<std::vector<double>>();
    e.delays_us = j.at("delays_us").get<std::vector<double>>();
    e.weights = j.at("weights").get<std::vector<double>>();
    e.split = parse_split(j.at("split").get<std::string>());
    e.gender_group = parse_gender_group(j.at("gender_group").get<std::string>());
    e.n_sources = j.at("n_sources").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("speakers")) e.speakers = j.at("speakers").get<std::vector<std::string>>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("manifest: malformed entry: ") + ex.what());
  }
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("manifest: cannot write " + path.string());
  for (const auto& e : m.entries) out << to_json(e).dump() << '\n';
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("manifest: cannot open " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.entries.push_back(manifest_entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidInput("manifest: line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

// One planned clip: which speakers, where they stand, and its private seed.
struct ClipPlan {
  std::string id;
  Split split;
  std::vector<std::size_t> speakers;  // corpus speaker indices
  Scene scene;
  std::uint64_t seed;
};

namespace sim_detail {

// Minimum speakers of each gender a split must own to build one mixture.
inline std::array<std::size_t, 2> required_speakers(GenderGroup g, std::size_t n) {
  switch (g) {
    case GenderGroup::kFemale: return {n, 0};
    case GenderGroup::kMale: return {0, n};
    case GenderGroup::kMixed: return {n - 1, n - 1};
  }
  return {n, n};
}

}  // namespace sim_detail

// Assigns disjoint speaker pools to the splits and draws every clip's
// speakers and scene. Pure bookkeeping; no audio is produced.
inline std::vector<ClipPlan> plan_dataset(const SourceCorpus& corpus, const DatasetSpec& spec,
                                          const Geometry& geom, std::uint64_t seed) {
  geom.validate();
  if (spec.n_sources < 1) throw ConfigError("dataset: n_sources must be >= 1");
  if (spec.gender_group == GenderGroup::kMixed && spec.n_sources < 2)
    throw ConfigError("dataset: mixed-gender group needs at least two sources");
  if (!(spec.clip_seconds > 0)) throw ConfigError("dataset: clip_seconds must be positive");

  const std::array<Split, 3> splits = {Split::kTrain, Split::kEval, Split::kTest};
  const auto need = sim_detail::required_speakers(spec.gender_group, spec.n_sources);

  // pools[split][gender] -> speaker indices
  std::array<std::array<std::vector<std::size_t>, 2>, 3> pools;
  Rng speaker_rng(derive_seed(seed, "speakers"));
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < corpus.speakers().size(); ++i) {
      if (static_cast<std::size_t>(corpus.speakers()[i].gender) == g) all.push_back(i);
    }
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[speaker_rng.index(i)]);
    if (need[g] == 0) continue;

    std::size_t required = 0, clips = 0;
    for (Split s : splits) {
      if (spec.count(s) > 0) {
        required += need[g];
        clips += spec.count(s);
      }
    }
    if (all.size() < required) {
      throw ConfigError("dataset: insufficient " + std::string(g == 0 ? "female" : "male") +
                        " speakers: need " + std::to_string(required) + " for disjoint splits, corpus has " +
                        std::to_string(all.size()));
    }
    // minimum per split, remainder proportional to clip counts
    std::array<std::size_t, 3> quota{};
    std::size_t spare = all.size() - required, given = 0;
    std::array<double, 3> frac{};
    for (std::size_t s = 0; s < 3; ++s) {
      if (spec.count(splits[s]) == 0) continue;
      const double share = static_cast<double>(spare) * spec.count(splits[s]) / static_cast<double>(clips);
      quota[s] = need[g] + static_cast<std::size_t>(share);
      frac[s] = share - std::floor(share);
      given += static_cast<std::size_t>(share);
    }
    while (given < spare) {
      std::size_t best = 3;
      for (std::size_t s = 0; s < 3; ++s) {
        if (spec.count(splits[s]) > 0 && (best == 3 || frac[s] > frac[best])) best = s;
      }
      quota[best] += 1;
      frac[best] = -1.0;
      ++given;
    }
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      pools[s][g].assign(all.begin() + static_cast<std::ptrdiff_t>(cursor),
                         all.begin() + static_cast<std::ptrdiff_t>(cursor + quota[s]));
      cursor += quota[s];
    }
  }

  std::vector<ClipPlan> plans;
  std::uint64_t clip_index = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const Split split = splits[s];
    for (std::size_t c = 0; c < spec.count(split); ++c, ++clip_index) {
      ClipPlan plan;
      plan.split = split;
      plan.seed = derive_seed(seed, "clip", clip_index);
      Rng rng(plan.seed);
      std::size_t n_female = 0;
      switch (spec.gender_group) {
        case GenderGroup::kFemale: n_female = spec.n_sources; break;
        case GenderGroup::kMale: n_female = 0; break;
        case GenderGroup::kMixed: n_female = 1 + rng.index(spec.n_sources - 1); break;
      }
      for (std::size_t g = 0; g < 2; ++g) {
        auto pool = pools[s][g];
        const std::size_t take = g == 0 ? n_female : spec.n_sources - n_female;
        for (std::size_t k = 0; k < take; ++k) {
          const std::size_t j = k + rng.index(pool.size() - k);
          std::swap(pool[k], pool[j]);
          plan.speakers.push_back(pool[k]);
        }
      }
      // shuffle so that source order does not encode gender
      for (std::size_t i = plan.speakers.size(); i > 1; --i) std::swap(plan.speakers[i - 1], plan.speakers[rng.index(i)]);
      Rng scene_rng = rng.substream("scene");
      plan.scene = sample_scene(scene_rng, spec.n_sources, geom);
      std::ostringstream id;
      id << to_string(split) << '-' << to_string(spec.gender_group) << spec.n_sources << '-';
      id.width(5);
      id.fill('0');
      id << c;
      plan.id = id.str();
      plans.push_back(std::move(plan));
    }
  }
  return plans;
}

// Renders one planned clip: returns the mixture and per-source images.
inline StereoMixture render_clip(const SourceCorpus& corpus, const ClipPlan& plan, const DatasetSpec& spec,
                                 const StftConfig& cfg) {
  const auto length = static_cast<std::size_t>(std::llround(spec.clip_seconds * cfg.sample_rate));
  std::vector<Waveform> sources;
  Rng rng(plan.seed);
  for (std::size_t i = 0; i < plan.speakers.size(); ++i) {
    Rng src_rng = rng.substream("source", i);
    sources.push_back({corpus.utterance(plan.speakers[i], length, src_rng), cfg.sample_rate});
  }
  StereoMixture mix = render_stereo_mixture(sources, plan.scene, cfg);
  for (std::size_t i : plan.speakers) mix.source_ids.push_back(corpus.speakers()[i].id);
  return mix;
}

// Writes <split>/<id>.mix.wav (stereo), <split>/<id>.src<i>.wav (weighted
// mic-1 images) and manifest.jsonl under out_dir.
inline DatasetManifest generate_dataset(const SourceCorpus& corpus, const DatasetSpec& spec, const Geometry& geom,
                                        const StftConfig& cfg, std::uint64_t seed,
                                        const std::filesystem::path& out_dir, std::size_t threads = 1) {
  namespace fs = std::filesystem;
  if (corpus.sample_rate() != cfg.sample_rate || geom.sample_rate != cfg.sample_rate)
    throw ConfigError("dataset: corpus, geometry and STFT sample rates differ");
  const auto plans = plan_dataset(corpus, spec, geom, seed);
  std::error_code ec;
  for (Split s : {Split::kTrain, Split::kEval, Split::kTest}) {
    if (spec.count(s) == 0) continue;
    fs::create_directories(out_dir / to_string(s), ec);
    if (ec) throw InvalidInput("dataset: cannot create " + (out_dir / to_string(s)).string() + ": " + ec.message());
  }

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.entries.resize(plans.size());
  parallel_for(plans.size(), threads, [&](std::size_t i) {
    const ClipPlan& plan = plans[i];
    const StereoMixture mix = render_clip(corpus, plan, spec, cfg);
    const std::string dir = to_string(plan.split);
    ManifestEntry e;
    e.id = plan.id;
    e.mixture_path = dir + "/" + plan.id + ".mix.wav";
    write_wav(out_dir / e.mixture_path, AudioBuffer{{mix.mic1.samples, mix.mic2.samples}, cfg.sample_rate});
    for (std::size_t k = 0; k < mix.images.size(); ++k) {
      e.source_paths.push_back(dir + "/" + plan.id + ".src" + std::to_string(k) + ".wav");
      write_wav(out_dir / e.source_paths.back(), AudioBuffer{{mix.images[k].samples}, cfg.sample_rate});
    }
    e.angles = plan.scene.angles;
    for (double d : plan.scene.delays) e.delays_us.push_back(d * 1e6);
    e.weights = plan.scene.weights;
    e.split = plan.split;
    e.gender_group = spec.gender_group;
    e.n_sources = spec.n_sources;
    e.seed = plan.seed;
    e.speakers = mix.source_ids;
    manifest.entries[i] = std::move(e);
  });
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

// A clip loaded back from disk.
struct LoadedClip {
  ManifestEntry entry;
  AudioBuffer mixture;              // one or two channels
  std::vector<Waveform> references;  // weighted mic-1 images
};

inline LoadedClip load_clip(const DatasetManifest& manifest, const ManifestEntry& entry, bool with_references = true) {
  LoadedClip clip;
  clip.entry = entry;
  clip.mixture = read_wav(manifest.resolve(entry.mixture_path));
  if (with_references) {
    if (entry.source_paths.empty()) throw ConfigError("dataset: entry " + entry.id + " has no clean references");
    for (const auto& p : entry.source_paths) {
      const AudioBuffer a = read_wav(manifest.resolve(p));
      if (a.sample_rate != clip.mixture.sample_rate)
        throw InvalidInput("dataset: reference sample rate differs from mixture in " + entry.id);
      clip.references.push_back({a.channels[0], a.sample_rate});
    }
  }
  return clip;
}

}  // namespace mixclust
