#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cogload/common.hpp"
#include "cogload/dataset.hpp"
#include "cogload/ensemble.hpp"
#include "cogload/eval.hpp"
#include "cogload/features.hpp"
#include "cogload/gmm.hpp"
#include "cogload/ivector.hpp"
#include "cogload/mlp.hpp"

namespace cogload {

struct UbmSettings {
  int components = 512;
  int em_iterations = 20;
  int kmeans_iterations = 10;
  int frame_subsample = 1;  // train the UBM on every k-th frame
};

struct TvSettings {
  int rank = 80;
  int iterations = 5;
};

struct MlpSettings {
  int hidden = 32;
  double validation_fraction = 0.0;  // carved off the training set
  TrainConfig train;
};

// Where the SMA/GMVN stage runs: on the per-epoch i-vector series
// (default) or on frame-level features before the UBM.
enum class SmaStage { Ivector, Frame };

const char* sma_stage_name(SmaStage stage);
SmaStage sma_stage_from_name(const std::string& name);

// One full pipeline configuration: a Table-4 preset or a custom assembly.
// `grouping` is a builtin name ("sd31", "p21", "p25"), "auto:<k>" for
// synthetic channels, or a path to a grouping JSON file.
struct SystemConfig {
  std::string name = "custom";
  std::string grouping = "sd31";
  Pooling pooling = Pooling::None;
  int sma_window = 16;
  SmaStage sma_stage = SmaStage::Ivector;
  UbmSettings ubm;
  TvSettings tv;
  MlpSettings mlp;
};

// The seven systems of the final combination, by name
// (e.g. "maxP21-SMA16"); throws ConfigError for unknown names.
SystemConfig preset_system(const std::string& name);
std::vector<std::string> preset_names();

struct ExperimentConfig {
  std::filesystem::path dataset;
  SplitSpec split;
  SystemConfig system;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

// Canonical 64-bit hash of the experiment-relevant fields (dataset, split,
// system, seed); recorded in every stage artifact and checked on reuse.
std::string config_hash(const ExperimentConfig& config);

// JSON config file; flag-style overrides applied by the CLI layer.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_json(const std::string& text,
                                             const std::filesystem::path& base_dir);

// --- Stage-by-stage pipeline ----------------------------------------------
//
// Every stage reads persisted artifacts from config.out and writes its own
// there, so each is runnable standalone; run_experiment simply chains them.

void stage_featurize(const ExperimentConfig& config);
void stage_train_ubm(const ExperimentConfig& config);
void stage_accumulate_stats(const ExperimentConfig& config);
void stage_train_tv(const ExperimentConfig& config);
void stage_extract(const ExperimentConfig& config);
void stage_postprocess(const ExperimentConfig& config);
void stage_train_clf(const ExperimentConfig& config);
void stage_predict(const ExperimentConfig& config);
EvalReport stage_evaluate(const ExperimentConfig& config);

EvalReport run_experiment(const ExperimentConfig& config);

// --- Ensemble ---------------------------------------------------------------

struct EnsembleConfig {
  std::filesystem::path dataset;
  SplitSpec split;
  std::vector<SystemConfig> systems;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int jobs = 1;
};

EnsembleConfig load_ensemble_config(const std::filesystem::path& path);

// Runs (or reuses, when the stored config hash matches) each system's
// predictions, applies vote_combine per epoch, and evaluates the combined
// labels. The combined prediction file carries system_name "<n>-system".
EvalReport run_ensemble(const EnsembleConfig& config);

// --- Prediction dumps -------------------------------------------------------

struct PredictionRecord {
  EpochKey key;
  Label truth = Label::Easy;
  Eigen::Vector3d posteriors = Eigen::Vector3d::Zero();
  Label predicted = Label::Easy;
};

struct PredictionSet {
  std::string system_name;
  std::string split_description;
  std::vector<PredictionRecord> records;
};

void save_predictions(const PredictionSet& predictions,
                      const std::filesystem::path& path,
                      const std::string& config_hash = "");
PredictionSet load_predictions(const std::filesystem::path& path,
                               std::string* config_hash = nullptr);

// Dataset path resolution: relative paths fall back to COGLOAD_DATA_DIR
// when the file is not found next to the config.
std::filesystem::path resolve_dataset_path(const std::filesystem::path& path,
                                           const std::filesystem::path& base_dir);

}  // namespace cogload
