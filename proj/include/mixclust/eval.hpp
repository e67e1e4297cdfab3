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

// SDR with permutation resolution and batch evaluation over a test split.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixclust/checkpoint.hpp"
#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/features.hpp"
#include "mixclust/masks.hpp"
#include "mixclust/parallel.hpp"
#include "mixclust/rng.hpp"
#include "mixclust/separation.hpp"
#include "mixclust/spatial_sim.hpp"

namespace mixclust {

inline constexpr double kSdrCap = 100.0;

// Gain-only projection SDR in dB, clamped to [-100, 100]. No time-shift
// compensation.
inline double sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size())
    throw InvalidInput("sdr: estimate has " + std::to_string(estimate.size()) + " samples, reference " +
                       std::to_string(reference.size()));
  double rr = 0.0, er = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    rr += reference[i] * reference[i];
    er += estimate[i] * reference[i];
  }
  if (!(rr > 0.0)) throw InvalidInput("sdr: reference is all zero");
  const double g = er / rr;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = g * reference[i];
    target += t * t;
    noise += (estimate[i] - t) * (estimate[i] - t);
  }
  if (!std::isfinite(target) || !std::isfinite(noise)) throw InvalidInput("sdr: non-finite samples");
  if (noise <= 0.0) return target > 0.0 ? kSdrCap : -kSdrCap;
  if (target <= 0.0) return -kSdrCap;
  return std::clamp(10.0 * std::log10(target / noise), -kSdrCap, kSdrCap);
}

inline double sdr(const Waveform& estimate, const Waveform& reference) {
  return sdr(std::span<const double>(estimate.samples), std::span<const double>(reference.samples));
}

struct PermutationResult {
  std::vector<std::size_t> estimate_for;  // estimate index matched to reference i
  std::vector<double> sdrs;               // SDR of that pair, per reference
  double mean_sdr = 0.0;
};

// Exhaustive search over all assignments; ties keep the lexicographically
// first permutation.
inline PermutationResult resolve_permutation(const std::vector<Waveform>& estimates,
                                             const std::vector<Waveform>& references) {
  const std::size_t n = references.size();
  if (estimates.size() != n) throw InvalidInput("permutation: estimate and reference counts differ");
  if (n < 1 || n > 4) throw InvalidInput("permutation: supports 1 to 4 sources");
  std::vector<std::vector<double>> table(n, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t e = 0; e < n; ++e) table[r][e] = sdr(estimates[e], references[r]);
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  PermutationResult best;
  best.mean_sdr = -std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += table[r][perm[r]];
    s /= static_cast<double>(n);
    if (s > best.mean_sdr) {
      best.mean_sdr = s;
      best.estimate_for = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t r = 0; r < n; ++r) best.sdrs.push_back(table[r][best.estimate_for[r]]);
  return best;
}

enum class EvalMethod { kCheckpoint, kOracleDs, kOracleBpd, kInitial };

inline EvalMethod parse_eval_method(const std::string& s) {
  if (s == "checkpoint") return EvalMethod::kCheckpoint;
  if (s == "oracle-ds") return EvalMethod::kOracleDs;
  if (s == "oracle-bpd") return EvalMethod::kOracleBpd;
  if (s == "initial") return EvalMethod::kInitial;
  throw ConfigError("unknown eval method '" + s + "' (expected checkpoint, oracle-ds, oracle-bpd or initial)");
}

struct SdrRow {
  std::string mixture_id;
  std::string method;
  std::size_t source_index = 0;
  double sdr_db = 0.0;
  double initial_sdr_db = 0.0;
  double improvement_db = 0.0;
  std::size_t n_sources = 0;
  GenderGroup gender_group = GenderGroup::kMixed;
};

struct Summary {
  std::size_t count = 0;
  double mean = 0.0, median = 0.0, q1 = 0.0, q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InvalidInput("quantile: no values");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  s.median = quantile(xs, 0.5);
  s.q1 = quantile(xs, 0.25);
  s.q3 = quantile(xs, 0.75);
  return s;
}

struct SdrReport {
  std::string method;
  std::vector<SdrRow> rows;

  // Values for one gender group, or all rows when group is empty.
  std::vector<double> sdrs(std::optional<GenderGroup> group = std::nullopt) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (!group || r.gender_group == *group) out.push_back(r.sdr_db);
    return out;
  }
  std::vector<double> improvements(std::optional<GenderGroup> group = std::nullopt) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (!group || r.gender_group == *group) out.push_back(r.improvement_db);
    return out;
  }
};

inline void write_report_csv(const std::filesystem::path& path, const std::vector<SdrReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("report: cannot write " + path.string());
  out.precision(10);
  out << "mixture_id,method,source_index,sdr_db,initial_sdr_db,improvement_db,n_sources,gender_group\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out << r.mixture_id << ',' << r.method << ',' << r.source_index << ',' << r.sdr_db << ',' << r.initial_sdr_db
          << ',' << r.improvement_db << ',' << r.n_sources << ',' << to_string(r.gender_group) << '\n';
    }
  }
}

inline std::vector<SdrRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("report: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<SdrRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (std::size_t c; (c = line.find(',', pos)) != std::string::npos; pos = c + 1) f.push_back(line.substr(pos, c - pos));
    f.push_back(line.substr(pos));
    if (f.size() != 8) throw InvalidInput("report: malformed row in " + path.string());
    try {
      rows.push_back({f[0], f[1], std::stoul(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stoul(f[6]),
                      parse_gender_group(f[7])});
    } catch (const std::logic_error&) {
      throw InvalidInput("report: malformed number in " + path.string());
    }
  }
  return rows;
}

// Boxplot statistics: quartiles, whiskers at the most extreme points within
// 1.5 IQR of the box, and the raw values.
inline nlohmann::json boxplot_stats(const std::vector<double>& xs) {
  const Summary s = summarize(xs);
  nlohmann::json j = {{"count", s.count}, {"points", xs}};
  if (xs.empty()) return j;
  const double lo_fence = s.q1 - 1.5 * s.iqr(), hi_fence = s.q3 + 1.5 * s.iqr();
  double lo = s.q1, hi = s.q3;
  for (const double x : xs) {
    if (x >= lo_fence) lo = std::min(lo, x);
    if (x <= hi_fence) hi = std::max(hi, x);
  }
  j["median"] = s.median;
  j["q1"] = s.q1;
  j["q3"] = s.q3;
  j["mean"] = s.mean;
  j["whisker_low"] = lo;
  j["whisker_high"] = hi;
  return j;
}

// Per method: statistics of absolute SDR and of improvement, overall and
// per gender group.
inline nlohmann::json boxplot_json(const std::vector<SdrRow>& rows) {
  std::map<std::string, std::vector<const SdrRow*>> by_method;
  for (const auto& r : rows) by_method[r.method].push_back(&r);
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [method, rs] : by_method) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto* r : rs) {
      for (const std::string& g : {std::string("all"), to_string(r->gender_group)}) {
        groups[g].first.push_back(r->sdr_db);
        groups[g].second.push_back(r->improvement_db);
      }
    }
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [g, v] : groups) m[g] = {{"sdr_db", boxplot_stats(v.first)}, {"improvement_db", boxplot_stats(v.second)}};
    out[method] = m;
  }
  return out;
}

struct EvalOptions {
  std::size_t n_sources = 2;
  std::uint64_t seed = 0;
  double delay_limit = 0.01 / 343.0;  // BPD oracle clamp, seconds
  double silence_floor_db = -60.0;
  StftConfig stft;  // oracles only; checkpoints carry their own
  KmeansOptions kmeans;
  Split split = Split::kTest;
  std::size_t threads = 0;
};

inline std::string method_label(EvalMethod m, const Checkpoint* ckpt) {
  switch (m) {
    case EvalMethod::kCheckpoint: return "DC " + to_string(ckpt->train.target);
    case EvalMethod::kOracleDs: return "DS oracle";
    case EvalMethod::kOracleBpd: return "BPD oracle";
    case EvalMethod::kInitial: return "Initial";
  }
  return "";
}

// Estimates for one clip; the mixture's first channel is the only input
// seen by checkpoint separation.
inline std::vector<Waveform> method_estimates(EvalMethod method, const LoadedClip& clip, const EvalOptions& opt,
                                              const Checkpoint* ckpt, Rng& rng) {
  const Waveform mic1{clip.mixture.channels[0], clip.mixture.sample_rate};
  switch (method) {
    case EvalMethod::kCheckpoint: {
      KmeansOptions ko = opt.kmeans;
      ko.restarts = ckpt->train.kmeans_restarts;
      return separate(ckpt->make_network(), ckpt->stft, mic1, opt.n_sources, rng, ko).sources;
    }
    case EvalMethod::kOracleDs: {
      std::vector<Spectrogram> refs;
      for (const auto& r : clip.references) refs.push_back(stft(r, opt.stft));
      const std::vector<double> ones(refs.size(), 1.0);
      const BinaryMask mask = dominant_source_mask(refs, ones);
      std::vector<Waveform> out;
      for (const auto& s : apply_mask(stft(mic1, opt.stft), mask)) out.push_back(istft(s, mic1.size()));
      return out;
    }
    case EvalMethod::kOracleBpd: {
      if (clip.mixture.num_channels() != 2) throw ConfigError("eval: BPD oracle needs stereo mixtures (" + clip.entry.id + ")");
      const Spectrogram m1 = stft(mic1, opt.stft);
      const Spectrogram m2 = stft(Waveform{clip.mixture.channels[1], clip.mixture.sample_rate}, opt.stft);
      BpdOptions bo;
      bo.delay_limit = opt.delay_limit;
      bo.kmeans = opt.kmeans;
      const BinaryMask mask = bpd_mask(normalized_phase_difference(m1, m2, opt.silence_floor_db), opt.n_sources, rng, bo);
      std::vector<Waveform> out;
      for (const auto& s : apply_mask(m1, mask)) out.push_back(istft(s, mic1.size()));
      return out;
    }
    case EvalMethod::kInitial:
      return std::vector<Waveform>(opt.n_sources, mic1);
  }
  return {};
}

// Scores every clip of the split. Improvement is SDR minus the SDR of the
// unprocessed first channel against the same reference.
inline SdrReport evaluate(EvalMethod method, const DatasetManifest& manifest, const EvalOptions& opt,
                          const Checkpoint* ckpt = nullptr) {
  if (method == EvalMethod::kCheckpoint && ckpt == nullptr) throw ConfigError("eval: checkpoint method needs a checkpoint");
  if (opt.n_sources < 1 || opt.n_sources > 4) throw ConfigError("eval: n_sources must be in [1, 4]");
  const auto entries = manifest.split(opt.split);
  if (entries.empty()) throw ConfigError("eval: split '" + to_string(opt.split) + "' is empty");
  for (const auto& e : entries) {
    if (e.source_paths.empty()) throw ConfigError("eval: entry " + e.id + " has no clean references");
    if (e.source_paths.size() != opt.n_sources)
      throw ConfigError("eval: entry " + e.id + " has " + std::to_string(e.source_paths.size()) +
                        " references, expected " + std::to_string(opt.n_sources));
  }

  SdrReport report;
  report.method = method_label(method, ckpt);
  std::vector<std::vector<SdrRow>> per_clip(entries.size());
  parallel_for(entries.size(), opt.threads, [&](std::size_t i) {
    const LoadedClip clip = load_clip(manifest, entries[i], true);
    if (clip.mixture.num_channels() < 1) throw InvalidInput("eval: empty mixture " + clip.entry.id);
    Rng rng(derive_seed(opt.seed, "kmeans", i));
    const auto estimates = method_estimates(method, clip, opt, ckpt, rng);
    const Waveform mic1{clip.mixture.channels[0], clip.mixture.sample_rate};
    const PermutationResult pr = resolve_permutation(estimates, clip.references);
    for (std::size_t r = 0; r < clip.references.size(); ++r) {
      const double initial = sdr(mic1, clip.references[r]);
      per_clip[i].push_back({clip.entry.id, report.method, r, pr.sdrs[r], initial, pr.sdrs[r] - initial,
                             clip.entry.n_sources, clip.entry.gender_group});
    }
  });
  for (auto& rows : per_clip) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  return report;
}

}  // namespace mixclust
