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


// mixclust: dataset generation, inspection, training, separation and
// evaluation for two-microphone-trained single-channel separation.
//
// Exit status: 0 success, 2 invalid input or configuration, 3 runtime
// failure (including training divergence).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixclust.hpp"

namespace {

using namespace mixclust;
namespace fs = std::filesystem;

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

// Values shared by subcommands that read a pipeline config. Flags given on
// the command line override the config file, which overrides defaults.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Pipeline config file (JSON)");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--out", f.out_dir, "Output directory");
  cmd->add_option("--threads", f.threads, "Worker threads (default: MIXCLUST_THREADS or 1)");
}

PipelineConfig base_config(const CommonFlags& f) {
  PipelineConfig cfg;
  if (!f.config_path.empty()) cfg = load_pipeline_config(f.config_path);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out_dir) cfg.output_dir = *f.out_dir;
  cfg.train.seed = cfg.seed;
  return cfg;
}

template <typename T>
void override_if(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-clustering source separation trained from two-microphone phase differences"};
  app.require_subcommand(1);

  // gen
  CommonFlags gen_common;
  std::optional<std::size_t> gen_n, gen_train, gen_eval, gen_test, gen_speakers;
  std::optional<std::string> gen_genders, gen_corpus, gen_write_config;
  std::optional<double> gen_seconds;
  auto* gen = app.add_subcommand("gen", "Generate a stereo mixture dataset with clean references");
  add_common(gen, gen_common);
  gen->add_option("--n-sources", gen_n, "Sources per mixture");
  gen->add_option("--genders", gen_genders, "Gender group: f, m or fm");
  gen->add_option("--train", gen_train, "Training clips");
  gen->add_option("--eval", gen_eval, "Validation clips");
  gen->add_option("--test", gen_test, "Test clips");
  gen->add_option("--clip-seconds", gen_seconds, "Clip duration in seconds");
  gen->add_option("--corpus", gen_corpus, "'synthetic' or a directory of f*/m* speaker folders");
  gen->add_option("--speakers", gen_speakers, "Speakers in the synthetic corpus");
  gen->add_option("--write-config", gen_write_config, "Also save the effective config here");

  // inspect
  CommonFlags ins_common;
  std::string ins_input, ins_csv;
  std::optional<std::string> ins_manifest;
  std::size_t ins_bins = 50;
  auto* ins = app.add_subcommand("inspect", "NPD histogram and BPD/DS mask agreement for one stereo clip");
  add_common(ins, ins_common);
  ins->add_option("input", ins_input, "Stereo mixture WAV")->required();
  ins->add_option("--csv", ins_csv, "Histogram CSV output")->required();
  ins->add_option("--manifest", ins_manifest, "Manifest listing the clip, for the agreement summary");
  ins->add_option("--bins", ins_bins, "Histogram bins");

  // train
  CommonFlags tr_common;
  std::string tr_manifest, tr_ckpt;
  std::optional<std::string> tr_target, tr_cell, tr_rpd_scaling;
  std::optional<std::size_t> tr_epochs, tr_batch, tr_hidden, tr_embed, tr_layers;
  std::optional<double> tr_lr, tr_dropout;
  bool tr_resume = false;
  auto* tr = app.add_subcommand("train", "Train the embedding network on the train split");
  add_common(tr, tr_common);
  tr->add_option("--manifest", tr_manifest, "Dataset manifest")->required();
  tr->add_option("--checkpoint", tr_ckpt, "Checkpoint to write (and resume from)")->required();
  tr->add_option("--target", tr_target, "Target kind: ds, bpd or rpd");
  tr->add_option("--epochs", tr_epochs, "Total epochs");
  tr->add_option("--lr", tr_lr, "Adam learning rate");
  tr->add_option("--batch-size", tr_batch, "Clips per update");
  tr->add_option("--hidden", tr_hidden, "Recurrent units per direction");
  tr->add_option("--embed", tr_embed, "Embedding dimension K");
  tr->add_option("--layers", tr_layers, "Bidirectional layers");
  tr->add_option("--cell", tr_cell, "gru or lstm");
  tr->add_option("--dropout", tr_dropout, "Dropout on the top recurrent layer output");
  tr->add_option("--rpd-scaling", tr_rpd_scaling, "raw or standardized");
  tr->add_flag("--resume", tr_resume, "Continue from an existing checkpoint");

  // separate
  std::string sep_ckpt, sep_input, sep_out = ".";
  std::size_t sep_n = 2, sep_threads = 0;
  std::optional<std::size_t> sep_channel;
  std::uint64_t sep_seed = 0;
  auto* sep = app.add_subcommand("separate", "Separate a single-channel mixture");
  sep->add_option("input", sep_input, "Mixture WAV")->required();
  sep->add_option("--checkpoint", sep_ckpt, "Trained checkpoint")->required();
  sep->add_option("--n-sources", sep_n, "Number of output sources");
  sep->add_option("--channel", sep_channel, "Channel to use from a multi-channel file (0-based)");
  sep->add_option("--out", sep_out, "Output directory");
  sep->add_option("--seed", sep_seed, "K-means seed");
  sep->add_option("--threads", sep_threads, "Unused; accepted for symmetry");

  // eval
  CommonFlags ev_common;
  std::string ev_method, ev_manifest, ev_split = "test";
  std::optional<std::string> ev_ckpt;
  std::size_t ev_n = 2;
  auto* ev = app.add_subcommand("eval", "SDR report for a method over a dataset split");
  add_common(ev, ev_common);
  ev->add_option("--method", ev_method, "checkpoint, oracle-ds, oracle-bpd or initial")->required();
  ev->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint for the checkpoint method");
  ev->add_option("--n-sources", ev_n, "Sources per mixture");
  ev->add_option("--split", ev_split, "train, eval or test");

  // plot-data
  std::vector<std::string> pd_reports;
  std::string pd_out;
  auto* pd = app.add_subcommand("plot-data", "Merge SDR report CSVs into boxplot data");
  pd->add_option("reports", pd_reports, "Report CSV files")->required();
  pd->add_option("--out", pd_out, "Output JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*gen) {
      PipelineConfig cfg = base_config(gen_common);
      override_if(gen_n, cfg.dataset.n_sources);
      override_if(gen_train, cfg.dataset.train);
      override_if(gen_eval, cfg.dataset.eval);
      override_if(gen_test, cfg.dataset.test);
      override_if(gen_seconds, cfg.dataset.clip_seconds);
      override_if(gen_corpus, cfg.corpus);
      override_if(gen_speakers, cfg.synthetic_speakers);
      if (gen_genders) cfg.dataset.gender_group = parse_gender_group(*gen_genders);
      const DatasetManifest m = cmd_gen(cfg, gen_common.threads);
      if (gen_write_config) save_pipeline_config(*gen_write_config, cfg);
      std::cout << "wrote " << m.entries.size() << " mixtures to " << cfg.output_dir << "\n";
    } else if (*ins) {
      const PipelineConfig cfg = base_config(ins_common);
      InspectOptions opt;
      opt.bin_count = ins_bins;
      opt.seed = cfg.seed;
      if (ins_manifest) opt.manifest = fs::path(*ins_manifest);
      const InspectResult r = cmd_inspect(ins_input, ins_csv, cfg, opt);
      std::printf("valid bins: %zu\npeaks:", r.valid_bins);
      for (const double d : r.peak_delays) std::printf(" %.2fus", d * 1e6);
      std::printf("\n");
      if (r.agreement) std::printf("BPD/DS agreement: %.2f%%\n", 100.0 * *r.agreement);
    } else if (*tr) {
      PipelineConfig cfg = base_config(tr_common);
      if (tr_target) cfg.train.target = parse_target_kind(*tr_target);
      override_if(tr_epochs, cfg.train.epochs);
      override_if(tr_lr, cfg.train.learning_rate);
      override_if(tr_batch, cfg.train.batch_size);
      override_if(tr_hidden, cfg.network.hidden);
      override_if(tr_embed, cfg.network.embed);
      override_if(tr_layers, cfg.network.layers);
      override_if(tr_dropout, cfg.network.dropout);
      if (tr_cell) cfg.network.cell = parse_cell_type(*tr_cell);
      if (tr_rpd_scaling) cfg.train.rpd_scaling = parse_rpd_scaling(*tr_rpd_scaling);
      cmd_train(cfg, tr_manifest, tr_ckpt, tr_resume, tr_common.threads, [](const Checkpoint& ck) {
        std::printf("epoch %zu loss %.6g\n", ck.epochs_completed(), ck.loss_history.back());
        std::fflush(stdout);
      });
    } else if (*sep) {
      for (const auto& p : cmd_separate(sep_ckpt, sep_input, sep_n, sep_channel, sep_out, sep_seed))
        std::cout << p.string() << "\n";
    } else if (*ev) {
      const PipelineConfig cfg = base_config(ev_common);
      const fs::path out = ev_common.out_dir ? fs::path(*ev_common.out_dir) : fs::path(".");
      const SdrReport rep = cmd_eval(parse_eval_method(ev_method), ev_manifest,
                                     ev_ckpt ? std::optional<fs::path>(*ev_ckpt) : std::nullopt, ev_n, out, cfg,
                                     parse_split(ev_split), ev_common.threads);
      const Summary s = summarize(rep.sdrs()), imp = summarize(rep.improvements());
      std::printf("%s: SDR median %.2f dB (IQR %.2f), improvement median %.2f dB, mean %.2f dB over %zu sources\n",
                  rep.method.c_str(), s.median, s.iqr(), imp.median, imp.mean, s.count);
    } else if (*pd) {
      std::vector<fs::path> paths(pd_reports.begin(), pd_reports.end());
      cmd_plot_data(paths, pd_out);
    }
  } catch (const InvalidInput& e) {
    std::cerr << "mixclust: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "mixclust: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InfeasibleScene& e) {
    std::cerr << "mixclust: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "mixclust: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "mixclust: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
