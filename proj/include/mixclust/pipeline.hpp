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

// Subcommand implementations shared by the command-line tool and tests.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixclust/checkpoint.hpp"
#include "mixclust/config.hpp"
#include "mixclust/eval.hpp"
#include "mixclust/features.hpp"
#include "mixclust/masks.hpp"
#include "mixclust/separation.hpp"
#include "mixclust/spatial_sim.hpp"
#include "mixclust/train.hpp"
#include "mixclust/wav.hpp"

namespace mixclust {

namespace fs = std::filesystem;

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create directory " + dir.string());
}

inline std::unique_ptr<SourceCorpus> make_corpus(const PipelineConfig& cfg) {
  if (cfg.corpus == "synthetic")
    return std::make_unique<SyntheticCorpus>(cfg.synthetic_speakers, derive_seed(cfg.seed, "speakers", 0),
                                             cfg.stft.sample_rate);
  return std::make_unique<DirectoryCorpus>(cfg.corpus, cfg.stft.sample_rate);
}

// Dataset under cfg.output_dir: split folders plus manifest.jsonl.
inline DatasetManifest cmd_gen(const PipelineConfig& cfg, std::size_t threads = 0) {
  cfg.validate();
  ensure_directory(cfg.output_dir);
  const auto corpus = make_corpus(cfg);
  return generate_dataset(*corpus, cfg.dataset, cfg.geometry, cfg.stft, cfg.seed, cfg.output_dir,
                          resolve_threads(threads));
}

struct InspectResult {
  Histogram histogram;
  std::vector<double> peak_delays;  // bin centres in seconds
  std::size_t valid_bins = 0;
  std::optional<double> agreement;  // BPD vs DS, energy-weighted share of bins
  std::string mixture_id;
};

struct InspectOptions {
  std::size_t bin_count = 50;
  double range_factor = 1.25;  // histogram spans +-range_factor * max delay
  std::optional<fs::path> manifest;
  std::size_t n_sources = 2;  // used when no manifest entry is found
  std::uint64_t seed = 0;
};

inline InspectResult cmd_inspect(const fs::path& mixture_path, const fs::path& csv_out, const PipelineConfig& cfg,
                                 const InspectOptions& opt = {}) {
  if (!fs::exists(mixture_path)) throw InvalidInput("inspect: no such file " + mixture_path.string());
  const AudioBuffer audio = read_wav(mixture_path);
  if (audio.num_channels() != 2) throw InvalidInput("inspect: phase differences need a stereo mixture");
  const Spectrogram m1 = stft(Waveform{audio.channels[0], audio.sample_rate}, cfg.stft);
  const Spectrogram m2 = stft(Waveform{audio.channels[1], audio.sample_rate}, cfg.stft);
  const NpdMap npd = normalized_phase_difference(m1, m2, cfg.train.silence_floor_db);

  InspectResult res;
  res.valid_bins = npd.valid_count();
  res.histogram = npd_histogram(npd, opt.bin_count, opt.range_factor * cfg.geometry.max_delay());
  for (const auto i : histogram_peaks(res.histogram))
    res.peak_delays.push_back(0.5 * (res.histogram.edges[i] + res.histogram.edges[i + 1]));
  write_histogram_csv(csv_out.string(), res.histogram);

  if (opt.manifest) {
    const DatasetManifest manifest = read_manifest(*opt.manifest);
    const fs::path target = fs::weakly_canonical(mixture_path);
    for (const auto& e : manifest.entries) {
      if (fs::weakly_canonical(manifest.resolve(e.mixture_path)) != target) continue;
      res.mixture_id = e.id;
      const LoadedClip clip = load_clip(manifest, e, true);
      std::vector<Spectrogram> refs;
      for (const auto& r : clip.references) refs.push_back(stft(r, cfg.stft));
      const std::vector<double> ones(refs.size(), 1.0);
      const BinaryMask ds = dominant_source_mask(refs, ones);
      BpdOptions bo;
      bo.delay_limit = cfg.geometry.max_delay();
      Rng rng(derive_seed(opt.seed, "kmeans", 0));
      const BinaryMask bpd = bpd_mask(npd, e.n_sources, rng, bo);
      res.agreement = mask_agreement_any_labels(bpd, ds, m1);
      break;
    }
    if (res.mixture_id.empty()) throw InvalidInput("inspect: mixture not listed in " + opt.manifest->string());
  }
  return res;
}

inline fs::path loss_csv_path(const fs::path& ckpt) { return fs::path(ckpt.string() + ".loss.csv"); }

// Trains on the manifest's train split. The checkpoint and its loss CSV
// are rewritten after every epoch, so a diverged or interrupted run leaves
// the last good state on disk. With resume set and the checkpoint present,
// training continues from it.
inline Checkpoint cmd_train(const PipelineConfig& cfg, const fs::path& manifest_path, const fs::path& ckpt_path,
                            bool resume = false, std::size_t threads = 0,
                            const std::function<void(const Checkpoint&)>& progress = {}) {
  cfg.validate();
  if (!fs::exists(manifest_path)) throw InvalidInput("train: no manifest at " + manifest_path.string());
  const DatasetManifest manifest = read_manifest(manifest_path);
  if (ckpt_path.has_parent_path()) ensure_directory(ckpt_path.parent_path());
  std::optional<Checkpoint> start;
  if (resume && fs::exists(ckpt_path)) start = load_checkpoint(ckpt_path);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  auto save = [&](const Checkpoint& ck) {
    save_checkpoint(ckpt_path, ck);
    write_loss_history_csv(loss_csv_path(ckpt_path), ck.loss_history);
  };
  try {
    Checkpoint ck = train(manifest, cfg.network, cfg.stft, tc, start, resolve_threads(threads), [&](const Checkpoint& c) {
      save(c);
      if (progress) progress(c);
    });
    save(ck);  // covers a resume that had nothing left to do
    return ck;
  } catch (const TrainingFailure& f) {
    save_checkpoint(ckpt_path, f.last_good());
    write_loss_history_csv(loss_csv_path(ckpt_path), f.last_good().loss_history);
    throw;
  }
}

// Writes <mixture_id>.src<i>.wav into out_dir. Stereo input needs an
// explicit channel.
inline std::vector<fs::path> cmd_separate(const fs::path& ckpt_path, const fs::path& wav_path, std::size_t n_sources,
                                          std::optional<std::size_t> channel, const fs::path& out_dir,
                                          std::uint64_t seed) {
  if (!fs::exists(ckpt_path)) throw InvalidInput("separate: no checkpoint at " + ckpt_path.string());
  if (!fs::exists(wav_path)) throw InvalidInput("separate: no such file " + wav_path.string());
  const Checkpoint ck = load_checkpoint(ckpt_path);
  AudioBuffer audio = read_wav(wav_path);
  if (channel) {
    if (*channel >= audio.num_channels())
      throw InvalidInput("separate: channel " + std::to_string(*channel) + " out of range");
    audio.channels = {audio.channels[*channel]};
  }
  Rng rng(derive_seed(seed, "kmeans", 0));
  const SeparationResult res = separate(ck, audio, n_sources, rng);
  ensure_directory(out_dir);
  std::string id = wav_path.stem().string();
  if (id.size() > 4 && id.ends_with(".mix")) id.resize(id.size() - 4);
  std::vector<fs::path> out;
  for (std::size_t i = 0; i < res.sources.size(); ++i) {
    const fs::path p = out_dir / (id + ".src" + std::to_string(i) + ".wav");
    write_wav(p, AudioBuffer{{res.sources[i].samples}, res.sources[i].sample_rate});
    out.push_back(p);
  }
  return out;
}

inline std::string method_slug(const std::string& label) {
  std::string s;
  for (const char c : label) s += c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Writes sdr_<method>.csv and sdr_<method>.boxplot.json into out_dir.
inline SdrReport cmd_eval(EvalMethod method, const fs::path& manifest_path, const std::optional<fs::path>& ckpt_path,
                          std::size_t n_sources, const fs::path& out_dir, const PipelineConfig& cfg,
                          Split split = Split::kTest, std::size_t threads = 0) {
  if (!fs::exists(manifest_path)) throw InvalidInput("eval: no manifest at " + manifest_path.string());
  const DatasetManifest manifest = read_manifest(manifest_path);
  std::optional<Checkpoint> ck;
  if (method == EvalMethod::kCheckpoint) {
    if (!ckpt_path) throw ConfigError("eval: checkpoint method needs --checkpoint");
    if (!fs::exists(*ckpt_path)) throw InvalidInput("eval: no checkpoint at " + ckpt_path->string());
    ck = load_checkpoint(*ckpt_path);
  }
  EvalOptions opt;
  opt.n_sources = n_sources;
  opt.seed = cfg.seed;
  opt.delay_limit = cfg.geometry.max_delay();
  opt.silence_floor_db = cfg.train.silence_floor_db;
  opt.stft = cfg.stft;
  opt.kmeans.restarts = cfg.train.kmeans_restarts;
  opt.split = split;
  opt.threads = resolve_threads(threads);
  const SdrReport rep = evaluate(method, manifest, opt, ck ? &*ck : nullptr);
  ensure_directory(out_dir);
  const std::string slug = method_slug(rep.method);
  write_report_csv(out_dir / ("sdr_" + slug + ".csv"), {rep});
  std::ofstream js(out_dir / ("sdr_" + slug + ".boxplot.json"), std::ios::trunc);
  if (!js) throw InvalidInput("eval: cannot write boxplot data in " + out_dir.string());
  js << boxplot_json(rep.rows).dump(2) << '\n';
  return rep;
}

// Merges report CSVs into one boxplot data file keyed by method.
inline nlohmann::json cmd_plot_data(const std::vector<fs::path>& reports, const fs::path& out_json) {
  if (reports.empty()) throw InvalidInput("plot-data: no report files given");
  std::vector<SdrRow> rows;
  for (const auto& p : reports) {
    const auto r = read_report_csv(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const nlohmann::json j = boxplot_json(rows);
  std::ofstream out(out_json, std::ios::trunc);
  if (!out) throw InvalidInput("plot-data: cannot write " + out_json.string());
  out << j.dump(2) << '\n';
  return j;
}

}  // namespace mixclust
