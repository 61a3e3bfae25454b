// cogload: cognitive-load classification experiments over EEG epochs.
//
// Subcommands mirror the pipeline stages; `run` chains them end to end and
// `ensemble` combines several systems by voting. Machine-readable results
// go to files under --out; progress and likelihood traces go to stderr.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cogload/pipeline.hpp"

namespace {

using namespace cogload;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--jobs", opts.jobs, "worker bound for independent jobs");
  cmd->add_option("--out", opts.out, "override the output directory");
}

ExperimentConfig load_with_overrides(const CommonOptions& opts) {
  ExperimentConfig config = load_experiment_config(opts.config_path);
  if (opts.seed) {
    config.seed = *opts.seed;
    config.system.mlp.train.seed = *opts.seed;
  }
  if (opts.jobs) config.jobs = *opts.jobs;
  if (opts.out) config.out = *opts.out;
  return config;
}

int dispatch(const std::string& subcommand, const CommonOptions& opts) {
  if (subcommand == "ensemble") {
    EnsembleConfig config = load_ensemble_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    if (opts.jobs) config.jobs = *opts.jobs;
    if (opts.out) config.out = *opts.out;
    const EvalReport report = run_ensemble(config);
    std::cout << render_report(report, ReportFormat::Text);
    return kExitOk;
  }

  const ExperimentConfig config = load_with_overrides(opts);
  if (subcommand == "run") {
    const EvalReport report = run_experiment(config);
    std::cout << render_report(report, ReportFormat::Text);
  } else if (subcommand == "featurize") {
    stage_featurize(config);
  } else if (subcommand == "train-ubm") {
    stage_train_ubm(config);
  } else if (subcommand == "accumulate-stats") {
    stage_accumulate_stats(config);
  } else if (subcommand == "train-tv") {
    stage_train_tv(config);
  } else if (subcommand == "extract") {
    stage_extract(config);
  } else if (subcommand == "postprocess") {
    stage_postprocess(config);
  } else if (subcommand == "train-clf") {
    stage_train_clf(config);
  } else if (subcommand == "predict") {
    stage_predict(config);
  } else if (subcommand == "evaluate") {
    const EvalReport report = stage_evaluate(config);
    std::cout << render_report(report, ReportFormat::Text);
  } else {
    throw ConfigError("unknown subcommand: " + subcommand);
  }
  return kExitOk;
}

SynthConfig synth_config_from_file(const std::string& path) {
  const auto doc = [&] {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open config: " + path);
    try {
      return nlohmann::json::parse(file);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
  }();
  SynthConfig config;
  config.seed = doc.value("seed", config.seed);
  config.n_subjects = doc.value("n_subjects", config.n_subjects);
  config.n_sessions = doc.value("n_sessions", config.n_sessions);
  config.epochs_per_block = doc.value("epochs_per_block", config.epochs_per_block);
  config.n_channels = doc.value("n_channels", config.n_channels);
  config.frames_per_epoch = doc.value("frames_per_epoch", config.frames_per_epoch);
  config.class_separation = doc.value("class_separation", config.class_separation);
  config.subject_offset_scale =
      doc.value("subject_offset_scale", config.subject_offset_scale);
  config.session_offset_scale =
      doc.value("session_offset_scale", config.session_offset_scale);
  config.noise_scale = doc.value("noise_scale", config.noise_scale);
  config.sample_rate_hz = doc.value("sample_rate_hz", config.sample_rate_hz);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cognitive-load classification experiments (i-vector pipeline)"};
  app.require_subcommand(1);

  const std::vector<std::string> stage_names = {
      "run",     "featurize", "train-ubm", "accumulate-stats",
      "train-tv", "extract",  "postprocess", "train-clf",
      "predict", "evaluate",  "ensemble"};
  const std::vector<std::string> stage_help = {
      "full pipeline: featurize through evaluate",
      "grouping/pooling, deltas, optional frame-stage SMA+GMVN",
      "k-means init + EM for the universal background model",
      "per-epoch Baum-Welch statistics under the UBM",
      "EM training of the total-variability matrix",
      "posterior-mean i-vectors for train and test epochs",
      "SMA over block i-vector series, GMVN fit on train",
      "train the feed-forward classifier",
      "class posteriors for the test epochs",
      "accuracy report from persisted predictions",
      "run or reuse several systems and combine by voting"};

  std::vector<CommonOptions> opts(stage_names.size());
  for (std::size_t i = 0; i < stage_names.size(); ++i)
    add_common(app.add_subcommand(stage_names[i], stage_help[i]), opts[i]);

  // synth has its own config schema and a single output file.
  CommonOptions synth_opts;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand(
      "synth", "deterministic synthetic dataset generator");
  synth->add_option("--config", synth_opts.config_path,
                    "synth config (JSON)")->required();
  synth->add_option("--seed", synth_opts.seed, "override the config seed");
  synth->add_option("--out", synth_out, "output EPO1 file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      SynthConfig config = synth_config_from_file(synth_opts.config_path);
      if (synth_opts.seed) config.seed = *synth_opts.seed;
      const EpochDataset dataset = synth_generate(config);
      write_epoch_file(dataset, synth_out);
      std::fprintf(stderr, "synth: wrote %zu epochs to %s\n",
                   dataset.records.size(), synth_out.c_str());
      return kExitOk;
    }
    for (std::size_t i = 0; i < stage_names.size(); ++i)
      if (app.get_subcommand(stage_names[i])->parsed())
        return dispatch(stage_names[i], opts[i]);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}
