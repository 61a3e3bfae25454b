#include "cogload/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "artifacts.hpp"
#include "json_util.hpp"

namespace cogload {

const char* sma_stage_name(SmaStage stage) {
  switch (stage) {
    case SmaStage::Ivector: return "ivector";
    case SmaStage::Frame: return "frame";
  }
  throw ConfigError("invalid sma stage");
}

SmaStage sma_stage_from_name(const std::string& name) {
  if (name == "ivector") return SmaStage::Ivector;
  if (name == "frame") return SmaStage::Frame;
  throw ConfigError("unknown sma stage: " + name);
}

// --- presets -------------------------------------------------------------------

SystemConfig preset_system(const std::string& name) {
  struct Preset {
    const char* name;
    const char* grouping;
    Pooling pooling;
    int window;
  };
  static const Preset presets[] = {
      {"sd31-SMA16", "sd31", Pooling::None, 16},
      {"avgP25-SMA16", "p25", Pooling::Average, 16},
      {"maxP25-SMA16", "p25", Pooling::Max, 16},
      {"avgP21-SMA16", "p21", Pooling::Average, 16},
      {"maxP21-SMA16", "p21", Pooling::Max, 16},
      {"avgP21-SMA20", "p21", Pooling::Average, 20},
      {"maxP21-SMA20", "p21", Pooling::Max, 20},
  };
  for (const Preset& p : presets) {
    if (name == p.name) {
      SystemConfig config;
      config.name = p.name;
      config.grouping = p.grouping;
      config.pooling = p.pooling;
      config.sma_window = p.window;
      return config;
    }
  }
  throw ConfigError("unknown system preset: " + name +
                    " (expected one of the seven combination presets)");
}

std::vector<std::string> preset_names() {
  return {"sd31-SMA16",   "avgP25-SMA16", "maxP25-SMA16", "avgP21-SMA16",
          "maxP21-SMA16", "avgP21-SMA20", "maxP21-SMA20"};
}

// --- config parsing --------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config: missing dataset path");
  if (out.empty()) throw ConfigError("config: missing output directory");
  if (system.sma_window < 1) throw ConfigError("config: sma window must be >= 1");
  if (system.ubm.components < 1 || system.ubm.em_iterations < 0 ||
      system.ubm.kmeans_iterations < 0 || system.ubm.frame_subsample < 1)
    throw ConfigError("config: bad ubm settings");
  if (system.tv.rank < 1 || system.tv.iterations < 0)
    throw ConfigError("config: bad tv settings");
  if (system.mlp.hidden < 1) throw ConfigError("config: bad mlp hidden width");
  if (system.mlp.validation_fraction < 0 ||
      system.mlp.validation_fraction >= 1)
    throw ConfigError("config: validation fraction must be in [0, 1)");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (split.train_sessions.empty() || split.test_sessions.empty())
    throw ConfigError("config: split needs train and test sessions");
}

namespace {

std::set<int> int_set(const nlohmann::json& arr) {
  std::set<int> out;
  for (const auto& v : arr) out.insert(v.get<int>());
  return out;
}

nlohmann::json int_set_json(const std::set<int>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (int v : values) arr.push_back(v);
  return arr;
}

SplitSpec split_from_json(const nlohmann::json& doc) {
  SplitSpec spec;
  spec.mode = split_mode_from_name(doc.at("mode").get<std::string>());
  if (doc.contains("train_subjects"))
    spec.train_subjects = int_set(doc["train_subjects"]);
  if (doc.contains("test_subjects"))
    spec.test_subjects = int_set(doc["test_subjects"]);
  spec.train_sessions = int_set(doc.at("train_sessions"));
  spec.test_sessions = int_set(doc.at("test_sessions"));
  return spec;
}

nlohmann::json split_to_json(const SplitSpec& spec) {
  nlohmann::json doc;
  doc["mode"] = split_mode_name(spec.mode);
  doc["train_subjects"] = int_set_json(spec.train_subjects);
  doc["test_subjects"] = int_set_json(spec.test_subjects);
  doc["train_sessions"] = int_set_json(spec.train_sessions);
  doc["test_sessions"] = int_set_json(spec.test_sessions);
  return doc;
}

SystemConfig system_from_json(const nlohmann::json& doc) {
  SystemConfig config;
  if (doc.contains("preset")) {
    config = preset_system(doc["preset"].get<std::string>());
  } else {
    config.name = doc.value("name", "custom");
    config.grouping = doc.at("grouping").get<std::string>();
    if (doc.contains("pooling"))
      config.pooling = pooling_from_name(doc["pooling"].get<std::string>());
    else if (is_builtin_grouping(config.grouping))
      config.pooling = builtin_grouping(config.grouping).pooling;
  }
  if (doc.contains("sma_window")) config.sma_window = doc["sma_window"].get<int>();
  if (doc.contains("sma_stage"))
    config.sma_stage = sma_stage_from_name(doc["sma_stage"].get<std::string>());
  if (doc.contains("ubm")) {
    const auto& u = doc["ubm"];
    config.ubm.components = u.value("components", config.ubm.components);
    config.ubm.em_iterations = u.value("em_iterations", config.ubm.em_iterations);
    config.ubm.kmeans_iterations =
        u.value("kmeans_iterations", config.ubm.kmeans_iterations);
    config.ubm.frame_subsample =
        u.value("frame_subsample", config.ubm.frame_subsample);
  }
  if (doc.contains("tv")) {
    const auto& t = doc["tv"];
    config.tv.rank = t.value("rank", config.tv.rank);
    config.tv.iterations = t.value("iterations", config.tv.iterations);
  }
  if (doc.contains("mlp")) {
    const auto& m = doc["mlp"];
    config.mlp.hidden = m.value("hidden", config.mlp.hidden);
    config.mlp.validation_fraction =
        m.value("validation_fraction", config.mlp.validation_fraction);
    config.mlp.train.learning_rate =
        m.value("learning_rate", config.mlp.train.learning_rate);
    config.mlp.train.momentum = m.value("momentum", config.mlp.train.momentum);
    config.mlp.train.batch_size =
        m.value("batch_size", config.mlp.train.batch_size);
    config.mlp.train.max_epochs =
        m.value("max_epochs", config.mlp.train.max_epochs);
    config.mlp.train.patience = m.value("patience", config.mlp.train.patience);
  }
  return config;
}

nlohmann::json system_to_json(const SystemConfig& config) {
  nlohmann::json doc;
  doc["name"] = config.name;
  doc["grouping"] = config.grouping;
  doc["pooling"] = pooling_name(config.pooling);
  doc["sma_window"] = config.sma_window;
  doc["sma_stage"] = sma_stage_name(config.sma_stage);
  doc["ubm"] = {{"components", config.ubm.components},
                {"em_iterations", config.ubm.em_iterations},
                {"kmeans_iterations", config.ubm.kmeans_iterations},
                {"frame_subsample", config.ubm.frame_subsample}};
  doc["tv"] = {{"rank", config.tv.rank}, {"iterations", config.tv.iterations}};
  doc["mlp"] = {{"hidden", config.mlp.hidden},
                {"validation_fraction", config.mlp.validation_fraction},
                {"learning_rate", config.mlp.train.learning_rate},
                {"momentum", config.mlp.train.momentum},
                {"batch_size", config.mlp.train.batch_size},
                {"max_epochs", config.mlp.train.max_epochs},
                {"patience", config.mlp.train.patience}};
  return doc;
}

constexpr int kSchemaVersion = 1;

}  // namespace

std::filesystem::path resolve_dataset_path(
    const std::filesystem::path& path, const std::filesystem::path& base_dir) {
  if (path.is_absolute()) return path;
  const std::filesystem::path local = base_dir / path;
  if (std::filesystem::exists(local)) return local;
  if (const char* env = std::getenv("COGLOAD_DATA_DIR")) {
    const std::filesystem::path fallback = std::filesystem::path(env) / path;
    if (std::filesystem::exists(fallback)) return fallback;
  }
  return local;
}

ExperimentConfig experiment_config_from_json(
    const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (doc.value("schema_version", kSchemaVersion) != kSchemaVersion)
    throw ConfigError("unsupported config schema version");

  ExperimentConfig config;
  config.dataset =
      resolve_dataset_path(doc.at("dataset").get<std::string>(), base_dir);
  config.split = split_from_json(doc.at("split"));
  config.system = system_from_json(doc.at("system"));
  if (doc.contains("out"))
    config.out = base_dir / doc["out"].get<std::string>();
  config.seed = doc.value("seed", 0ULL);
  config.jobs = doc.value("jobs", 1);
  config.system.mlp.train.seed = config.seed;
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << file.rdbuf();
  return experiment_config_from_json(ss.str(), path.parent_path());
}

std::string config_hash(const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["dataset"] = config.dataset.filename().string();
  doc["split"] = split_to_json(config.split);
  doc["system"] = system_to_json(config.system);
  doc["seed"] = config.seed;
  return detail::fnv1a_hex(doc.dump());
}

// --- stage plumbing -----------------------------------------------------------------

namespace {

struct StagePaths {
  std::filesystem::path out;

  std::filesystem::path config_copy() const { return out / "config.json"; }
  std::filesystem::path features(bool train) const {
    return out / (train ? "features.train.fea" : "features.test.fea");
  }
  std::filesystem::path ubm() const { return out / "ubm.json"; }
  std::filesystem::path stats(bool train) const {
    return out / (train ? "stats.train.bws" : "stats.test.bws");
  }
  std::filesystem::path tv() const { return out / "tv.json"; }
  std::filesystem::path ivectors_raw(bool train) const {
    return out / (train ? "ivectors.raw.train.json" : "ivectors.raw.test.json");
  }
  std::filesystem::path gmvn() const { return out / "gmvn.json"; }
  std::filesystem::path ivectors_post(bool train) const {
    return out /
           (train ? "ivectors.post.train.json" : "ivectors.post.test.json");
  }
  std::filesystem::path mlp() const { return out / "mlp.json"; }
  std::filesystem::path predictions() const { return out / "predictions.json"; }
  std::filesystem::path report(const char* ext) const {
    return out / (std::string("report.") + ext);
  }
};

void check_hash(const std::string& found, const ExperimentConfig& config,
                const std::filesystem::path& artifact) {
  const std::string expected = config_hash(config);
  if (found != expected)
    throw ConfigError(artifact.string() +
                      " was produced by a different configuration (hash " +
                      found + ", expected " + expected +
                      "); re-run the earlier stages");
}

void require_not_subject_dependent(const ExperimentConfig& config,
                                   const char* stage) {
  if (config.split.mode == SplitMode::SubjectDependent)
    throw ConfigError(std::string(stage) +
                      ": subject_dependent experiments decompose into "
                      "per-subject runs; use the run subcommand");
}

ChannelGrouping resolve_grouping(const SystemConfig& system,
                                 const std::vector<std::string>& channel_names) {
  ChannelGrouping grouping;
  if (is_builtin_grouping(system.grouping)) {
    grouping = builtin_grouping(system.grouping);
  } else if (system.grouping.rfind("auto:", 0) == 0) {
    const int size = std::stoi(system.grouping.substr(5));
    return auto_grouping(channel_names, size, system.pooling);
  } else {
    grouping = load_grouping(system.grouping);
  }
  grouping = grouping.with_pooling(system.pooling);
  grouping.validate_against(channel_names);
  return grouping;
}

// Features for one epoch. The SMA+GMVN pair runs at the frame stage only
// when configured; normalization statistics are supplied by the caller in
// that case (fit on training frames).
FeatureMatrix featurize_epoch(const EpochRecord& record,
                              const ChannelGrouping& grouping,
                              const std::vector<std::string>& channel_names,
                              const SystemConfig& system) {
  const FeatureMatrix base =
      apply_grouping(record.frames, grouping, channel_names);
  if (system.sma_stage == SmaStage::Frame) {
    // Deltas come from the unsmoothed signal.
    FeatureMatrix out(base.rows(), 2 * base.cols());
    out.leftCols(base.cols()) = sma_smooth(base, system.sma_window);
    out.rightCols(base.cols()) =
        append_deltas(base).rightCols(base.cols());
    return out;
  }
  return append_deltas(base);
}

detail::FeatureSet featurize_records(const EpochDataset& dataset,
                                     const std::vector<std::size_t>& indices,
                                     const ChannelGrouping& grouping,
                                     const SystemConfig& system) {
  detail::FeatureSet set;
  set.dim = grouping.group_count() * 2;
  set.epochs.reserve(indices.size());
  for (std::size_t idx : indices) {
    const EpochRecord& record = dataset.records[idx];
    detail::FeatureEpoch epoch;
    epoch.key = record.key();
    epoch.label = record.label;
    epoch.values =
        featurize_epoch(record, grouping, dataset.channel_names, system);
    set.epochs.push_back(std::move(epoch));
  }
  return set;
}

Eigen::MatrixXd pool_frames(const detail::FeatureSet& set, int subsample) {
  Eigen::Index total = 0;
  for (const auto& e : set.epochs)
    total += (e.values.rows() + subsample - 1) / subsample;
  Eigen::MatrixXd pooled(total, set.dim);
  Eigen::Index row = 0;
  for (const auto& e : set.epochs)
    for (Eigen::Index t = 0; t < e.values.rows(); t += subsample)
      pooled.row(row++) = e.values.row(t);
  return pooled;
}

std::vector<EpochIvector> extract_set(const IvectorExtractor& extractor,
                                      const detail::StatsSet& stats) {
  std::vector<EpochIvector> out;
  out.reserve(stats.epochs.size());
  for (const auto& e : stats.epochs) {
    EpochIvector iv;
    iv.key = e.key;
    iv.label = e.label;
    iv.w = extractor.extract(e.stats);
    out.push_back(std::move(iv));
  }
  return out;
}

void save_gmvn(const GmvnStats& stats, const std::filesystem::path& path,
               const std::string& hash) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "gmvn";
  doc["config_hash"] = hash;
  doc["mean"] = detail::vector_to_json(stats.mean);
  doc["std"] = detail::vector_to_json(stats.std);
  doc["floor"] = stats.floor;
  detail::write_json_file(doc, path);
}

}  // namespace

// --- stages ------------------------------------------------------------------------

void stage_featurize(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "featurize");
  std::filesystem::create_directories(config.out);
  const std::string hash = config_hash(config);

  const EpochDataset dataset = load_epoch_file(config.dataset);
  const Split split = make_split(dataset, config.split);
  const ChannelGrouping grouping =
      resolve_grouping(config.system, dataset.channel_names);

  detail::FeatureSet train =
      featurize_records(dataset, split.train, grouping, config.system);
  detail::FeatureSet test =
      featurize_records(dataset, split.test, grouping, config.system);

  if (config.system.sma_stage == SmaStage::Frame) {
    // Frame-stage GMVN, fit on training frames only.
    std::vector<FeatureMatrix> train_seqs;
    train_seqs.reserve(train.epochs.size());
    for (const auto& e : train.epochs) train_seqs.push_back(e.values);
    const GmvnStats stats = fit_gmvn(train_seqs);
    for (auto& e : train.epochs) e.values = apply_gmvn(e.values, stats);
    for (auto& e : test.epochs) e.values = apply_gmvn(e.values, stats);
    save_gmvn(stats, config.out / "gmvn.frame.json", hash);
  }

  detail::save_features(train, StagePaths{config.out}.features(true), hash);
  detail::save_features(test, StagePaths{config.out}.features(false), hash);
  std::fprintf(stderr, "featurize: %zu train / %zu test epochs, dim %d\n",
               train.epochs.size(), test.epochs.size(), train.dim);
}

void stage_train_ubm(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "train-ubm");
  const StagePaths paths{config.out};
  std::string hash;
  const detail::FeatureSet train = detail::load_features(paths.features(true), &hash);
  check_hash(hash, config, paths.features(true));

  const Eigen::MatrixXd frames =
      pool_frames(train, config.system.ubm.frame_subsample);
  std::fprintf(stderr, "train-ubm: %lld frames, %d components\n",
               static_cast<long long>(frames.rows()),
               config.system.ubm.components);

  const DiagonalGmm init =
      kmeans_init(frames, config.system.ubm.components, config.seed,
                  config.system.ubm.kmeans_iterations);
  const EmResult result =
      em_fit(frames, init, config.system.ubm.em_iterations);
  for (std::size_t i = 0; i < result.loglik.size(); ++i)
    std::fprintf(stderr, "train-ubm: iteration %zu loglik %.6f\n", i + 1,
                 result.loglik[i]);
  save_gmm(result.gmm, paths.ubm(), config_hash(config));
}

void stage_accumulate_stats(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "accumulate-stats");
  const StagePaths paths{config.out};
  std::string hash;
  const DiagonalGmm ubm = load_gmm(paths.ubm(), &hash);
  check_hash(hash, config, paths.ubm());

  for (bool train : {true, false}) {
    const detail::FeatureSet features =
        detail::load_features(paths.features(train), &hash);
    check_hash(hash, config, paths.features(train));
    detail::StatsSet stats;
    stats.components = ubm.components();
    stats.dim = ubm.dim();
    stats.epochs.reserve(features.epochs.size());
    for (const auto& e : features.epochs) {
      detail::StatsEpoch se;
      se.key = e.key;
      se.label = e.label;
      se.stats = accumulate_bw_stats(ubm, e.values);
      stats.epochs.push_back(std::move(se));
    }
    detail::save_stats(stats, paths.stats(train), config_hash(config));
  }
}

void stage_train_tv(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "train-tv");
  const StagePaths paths{config.out};
  std::string hash;
  const DiagonalGmm ubm = load_gmm(paths.ubm(), &hash);
  check_hash(hash, config, paths.ubm());
  const detail::StatsSet train = detail::load_stats(paths.stats(true), &hash);
  check_hash(hash, config, paths.stats(true));

  std::vector<BaumWelchStats> stats;
  stats.reserve(train.epochs.size());
  for (const auto& e : train.epochs) stats.push_back(e.stats);

  TotalVariability tv = tv_init(ubm, config.system.tv.rank, config.seed);
  std::fprintf(stderr, "train-tv: rank %d over %zu epochs, %d iterations\n",
               config.system.tv.rank, stats.size(),
               config.system.tv.iterations);
  tv = tv_train(tv, stats, config.system.tv.iterations);
  save_tv(tv, paths.tv(), config_hash(config));
}

void stage_extract(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "extract");
  const StagePaths paths{config.out};
  std::string hash;
  const DiagonalGmm ubm = load_gmm(paths.ubm(), &hash);
  check_hash(hash, config, paths.ubm());
  const TotalVariability tv = load_tv(paths.tv(), ubm, &hash);
  check_hash(hash, config, paths.tv());

  const IvectorExtractor extractor(tv);
  for (bool train : {true, false}) {
    const detail::StatsSet stats = detail::load_stats(paths.stats(train), &hash);
    check_hash(hash, config, paths.stats(train));
    save_ivectors(extract_set(extractor, stats), paths.ivectors_raw(train),
                  config_hash(config));
  }
}

void stage_postprocess(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "postprocess");
  const StagePaths paths{config.out};
  std::string hash;
  const std::vector<EpochIvector> raw_train =
      load_ivectors(paths.ivectors_raw(true), &hash);
  check_hash(hash, config, paths.ivectors_raw(true));
  const std::vector<EpochIvector> raw_test =
      load_ivectors(paths.ivectors_raw(false), &hash);
  check_hash(hash, config, paths.ivectors_raw(false));

  const std::string out_hash = config_hash(config);
  if (config.system.sma_stage == SmaStage::Frame) {
    // SMA+GMVN already ran at the frame stage; this one is a pass-through.
    save_ivectors(raw_train, paths.ivectors_post(true), out_hash);
    save_ivectors(raw_test, paths.ivectors_post(false), out_hash);
    return;
  }

  GmvnStats stats;
  const std::vector<EpochIvector> post_train = postprocess_ivectors(
      raw_train, config.system.sma_window, nullptr, &stats);
  const std::vector<EpochIvector> post_test =
      postprocess_ivectors(raw_test, config.system.sma_window, &stats);
  save_gmvn(stats, paths.gmvn(), out_hash);
  save_ivectors(post_train, paths.ivectors_post(true), out_hash);
  save_ivectors(post_test, paths.ivectors_post(false), out_hash);
}

void stage_train_clf(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "train-clf");
  const StagePaths paths{config.out};
  std::string hash;
  const std::vector<EpochIvector> train =
      load_ivectors(paths.ivectors_post(true), &hash);
  check_hash(hash, config, paths.ivectors_post(true));
  if (train.empty()) throw DataError("train-clf: no training i-vectors");

  std::vector<TrainSample> samples;
  samples.reserve(train.size());
  for (const auto& e : train)
    samples.push_back({e.w, e.label});

  std::vector<TrainSample> validation;
  if (config.system.mlp.validation_fraction > 0) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_val = static_cast<std::size_t>(
        config.system.mlp.validation_fraction * samples.size());
    std::vector<TrainSample> kept;
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < n_val ? validation : kept).push_back(samples[order[i]]);
    samples = std::move(kept);
    if (samples.empty())
      throw ConfigError("train-clf: validation fraction leaves no training data");
  }

  const int rank = static_cast<int>(samples.front().x.size());
  TrainConfig train_config = config.system.mlp.train;
  train_config.seed = config.seed;
  const MlpModel model =
      train_mlp(samples, {rank, config.system.mlp.hidden, kNumClasses},
                train_config, validation);
  save_mlp(model, paths.mlp(), config_hash(config));
  std::fprintf(stderr, "train-clf: training accuracy %.4f\n",
               accuracy(model, samples));
}

void stage_predict(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "predict");
  const StagePaths paths{config.out};
  std::string hash;
  const MlpModel model = load_mlp(paths.mlp(), &hash);
  check_hash(hash, config, paths.mlp());
  const std::vector<EpochIvector> test =
      load_ivectors(paths.ivectors_post(false), &hash);
  check_hash(hash, config, paths.ivectors_post(false));

  PredictionSet predictions;
  predictions.system_name = config.system.name;
  predictions.split_description = config.split.describe();
  predictions.records.reserve(test.size());
  for (const auto& e : test) {
    PredictionRecord rec;
    rec.key = e.key;
    rec.truth = e.label;
    rec.posteriors = predict_proba(model, e.w);
    rec.predicted = argmax_label(rec.posteriors);
    predictions.records.push_back(std::move(rec));
  }
  save_predictions(predictions, paths.predictions(), config_hash(config));
}

EvalReport stage_evaluate(const ExperimentConfig& config) {
  config.validate();
  require_not_subject_dependent(config, "evaluate");
  const StagePaths paths{config.out};
  std::string hash;
  const PredictionSet predictions = load_predictions(paths.predictions(), &hash);
  check_hash(hash, config, paths.predictions());

  std::vector<LabeledEpoch> predicted, truth;
  predicted.reserve(predictions.records.size());
  truth.reserve(predictions.records.size());
  for (const auto& rec : predictions.records) {
    predicted.push_back({rec.key, rec.predicted});
    truth.push_back({rec.key, rec.truth});
  }
  EvalReport report = evaluate(predicted, truth);
  report.split_description =
      config.split.describe() + " | system: " + predictions.system_name;

  std::ofstream(paths.report("txt")) << render_report(report, ReportFormat::Text);
  std::ofstream(paths.report("csv")) << render_report(report, ReportFormat::Csv);
  std::ofstream(paths.report("json")) << render_report(report, ReportFormat::Json);
  return report;
}

// --- experiment runner ------------------------------------------------------------

namespace {

void write_config_copy(const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["dataset"] = config.dataset.string();
  doc["split"] = split_to_json(config.split);
  doc["system"] = system_to_json(config.system);
  doc["seed"] = config.seed;
  doc["jobs"] = config.jobs;
  doc["config_hash"] = config_hash(config);
  detail::write_json_file(doc, StagePaths{config.out}.config_copy());
}

EvalReport run_single(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out);
  write_config_copy(config);
  stage_featurize(config);
  stage_train_ubm(config);
  stage_accumulate_stats(config);
  stage_train_tv(config);
  stage_extract(config);
  stage_postprocess(config);
  stage_train_clf(config);
  stage_predict(config);
  return stage_evaluate(config);
}

EvalReport merge_reports(const std::vector<EvalReport>& parts,
                         const std::string& description) {
  EvalReport merged;
  merged.split_description = description;
  for (const EvalReport& part : parts) {
    merged.confusion += part.confusion;
    merged.n_epochs += part.n_epochs;
    for (const auto& [subject, acc] : part.per_subject) {
      merged.per_subject[subject] = acc;
      merged.per_subject_count[subject] = part.per_subject_count.at(subject);
    }
  }
  merged.overall_accuracy =
      merged.n_epochs == 0
          ? 0.0
          : static_cast<double>(merged.confusion.trace()) / merged.n_epochs;
  return merged;
}

EvalReport run_subject_dependent(const ExperimentConfig& config) {
  const EpochDataset dataset = load_epoch_file(config.dataset);
  std::set<int> subjects;
  for (const auto& r : dataset.records) subjects.insert(r.subject_id);
  if (!config.split.train_subjects.empty()) subjects = config.split.train_subjects;

  std::vector<EvalReport> reports;
  for (int subject : subjects) {
    ExperimentConfig sub = config;
    sub.split.mode = SplitMode::SubjectIndependent;
    sub.split.train_subjects = {subject};
    sub.split.test_subjects = {subject};
    sub.out = config.out / subject_name(subject);
    std::fprintf(stderr, "run: subject-dependent model for %s\n",
                 subject_name(subject).c_str());
    reports.push_back(run_single(sub));
  }

  EvalReport merged = merge_reports(
      reports, config.split.describe() + " | system: " + config.system.name +
                   " (per-subject models)");
  std::filesystem::create_directories(config.out);
  const StagePaths paths{config.out};
  std::ofstream(paths.report("txt")) << render_report(merged, ReportFormat::Text);
  std::ofstream(paths.report("csv")) << render_report(merged, ReportFormat::Csv);
  std::ofstream(paths.report("json")) << render_report(merged, ReportFormat::Json);
  return merged;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.split.mode == SplitMode::SubjectDependent)
    return run_subject_dependent(config);
  return run_single(config);
}

// --- ensemble ----------------------------------------------------------------------

EnsembleConfig load_ensemble_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (doc.value("schema_version", kSchemaVersion) != kSchemaVersion)
    throw ConfigError("unsupported config schema version");

  const auto base_dir = path.parent_path();
  EnsembleConfig config;
  config.dataset =
      resolve_dataset_path(doc.at("dataset").get<std::string>(), base_dir);
  config.split = split_from_json(doc.at("split"));
  if (!doc.contains("systems") || !doc["systems"].is_array() ||
      doc["systems"].empty())
    throw ConfigError("ensemble config needs a non-empty \"systems\" array");
  for (const auto& entry : doc["systems"]) {
    if (entry.is_string())
      config.systems.push_back(preset_system(entry.get<std::string>()));
    else
      config.systems.push_back(system_from_json(entry));
  }
  if (doc.contains("out")) config.out = base_dir / doc["out"].get<std::string>();
  config.seed = doc.value("seed", 0ULL);
  config.jobs = doc.value("jobs", 1);
  return config;
}

namespace {

ExperimentConfig member_config(const EnsembleConfig& ensemble,
                               const SystemConfig& system, int index) {
  ExperimentConfig config;
  config.dataset = ensemble.dataset;
  config.split = ensemble.split;
  config.system = system;
  config.system.mlp.train.seed = ensemble.seed;
  config.seed = ensemble.seed;
  config.jobs = 1;
  std::string dir_name = system.name;
  for (char& c : dir_name)
    if (c == '/' || c == '\\') c = '_';
  config.out = ensemble.out / (std::to_string(index) + "-" + dir_name);
  return config;
}

bool can_reuse(const ExperimentConfig& config) {
  const StagePaths paths{config.out};
  if (!std::filesystem::exists(paths.predictions())) return false;
  try {
    std::string hash;
    load_predictions(paths.predictions(), &hash);
    return hash == config_hash(config);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

EvalReport run_ensemble(const EnsembleConfig& config) {
  if (config.systems.empty()) throw ConfigError("ensemble: no systems");
  if (config.out.empty()) throw ConfigError("ensemble: missing output directory");
  std::filesystem::create_directories(config.out);

  std::vector<ExperimentConfig> members;
  for (std::size_t i = 0; i < config.systems.size(); ++i)
    members.push_back(member_config(config, config.systems[i],
                                    static_cast<int>(i)));

  // Member systems are independent; run them on up to `jobs` workers.
  const int jobs =
      std::max(1, std::min<int>(config.jobs,
                                static_cast<int>(members.size())));
  if (jobs == 1) {
    for (const auto& member : members) {
      if (can_reuse(member)) {
        std::fprintf(stderr, "ensemble: reusing predictions for %s\n",
                     member.system.name.c_str());
        continue;
      }
      run_experiment(member);
    }
  } else {
    std::vector<std::future<void>> futures;
    std::size_t next = 0;
    while (next < members.size() || !futures.empty()) {
      while (next < members.size() &&
             static_cast<int>(futures.size()) < jobs) {
        const ExperimentConfig& member = members[next++];
        futures.push_back(std::async(std::launch::async, [member] {
          if (!can_reuse(member)) run_experiment(member);
        }));
      }
      futures.front().get();
      futures.erase(futures.begin());
    }
  }

  // Combine aligned per-epoch outputs.
  std::vector<PredictionSet> outputs;
  for (const auto& member : members)
    outputs.push_back(load_predictions(StagePaths{member.out}.predictions()));

  const PredictionSet& reference = outputs.front();
  for (const PredictionSet& other : outputs) {
    if (other.records.size() != reference.records.size())
      throw ConfigError("ensemble: systems predicted different epoch counts");
    for (std::size_t i = 0; i < other.records.size(); ++i) {
      if (other.records[i].key != reference.records[i].key)
        throw ConfigError("ensemble: epoch identity mismatch at position " +
                          std::to_string(i));
      if (other.records[i].truth != reference.records[i].truth)
        throw DataError("ensemble: truth label mismatch at epoch " +
                        format_key(other.records[i].key));
    }
  }

  PredictionSet combined;
  combined.system_name = std::to_string(outputs.size()) + "-system";
  combined.split_description = config.split.describe();
  combined.records.reserve(reference.records.size());
  std::vector<LabeledEpoch> predicted, truth;
  for (std::size_t i = 0; i < reference.records.size(); ++i) {
    std::vector<SystemOutput> per_system;
    Eigen::Vector3d posterior_sum = Eigen::Vector3d::Zero();
    per_system.reserve(outputs.size());
    for (const PredictionSet& out : outputs) {
      per_system.push_back({out.system_name, out.records[i].posteriors,
                            out.records[i].predicted});
      posterior_sum += out.records[i].posteriors;
    }
    PredictionRecord rec;
    rec.key = reference.records[i].key;
    rec.truth = reference.records[i].truth;
    rec.posteriors = posterior_sum / static_cast<double>(outputs.size());
    rec.predicted = vote_combine(per_system);
    predicted.push_back({rec.key, rec.predicted});
    truth.push_back({rec.key, rec.truth});
    combined.records.push_back(std::move(rec));
  }

  save_predictions(combined, StagePaths{config.out}.predictions());
  EvalReport report = evaluate(predicted, truth);
  report.split_description =
      config.split.describe() + " | system: " + combined.system_name;
  const StagePaths paths{config.out};
  std::ofstream(paths.report("txt")) << render_report(report, ReportFormat::Text);
  std::ofstream(paths.report("csv")) << render_report(report, ReportFormat::Csv);
  std::ofstream(paths.report("json")) << render_report(report, ReportFormat::Json);
  return report;
}

// --- prediction dumps -----------------------------------------------------------------

void save_predictions(const PredictionSet& predictions,
                      const std::filesystem::path& path,
                      const std::string& config_hash) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "predictions";
  if (!config_hash.empty()) doc["config_hash"] = config_hash;
  doc["system_name"] = predictions.system_name;
  doc["split"] = predictions.split_description;
  nlohmann::json records = nlohmann::json::array();
  for (const PredictionRecord& rec : predictions.records) {
    nlohmann::json r;
    r["subject"] = rec.key.subject;
    r["session"] = rec.key.session;
    r["block"] = rec.key.block;
    r["index"] = rec.key.index;
    r["label"] = label_name(rec.truth);
    r["posteriors"] = {rec.posteriors[0], rec.posteriors[1], rec.posteriors[2]};
    r["predicted"] = label_name(rec.predicted);
    records.push_back(std::move(r));
  }
  doc["records"] = std::move(records);
  detail::write_json_file(doc, path);
}

PredictionSet load_predictions(const std::filesystem::path& path,
                               std::string* config_hash) {
  const nlohmann::json doc = detail::load_json_file(path, "predictions");
  if (doc.value("format_version", 0) != 1 ||
      doc.value("kind", "") != "predictions")
    throw DataError(path.string() + ": not a prediction dump");
  PredictionSet predictions;
  predictions.system_name = doc.value("system_name", "");
  predictions.split_description = doc.value("split", "");
  for (const auto& r : doc.at("records")) {
    PredictionRecord rec;
    rec.key.subject = static_cast<std::uint16_t>(r.at("subject").get<int>());
    rec.key.session = static_cast<std::uint8_t>(r.at("session").get<int>());
    rec.key.block = static_cast<std::uint8_t>(r.at("block").get<int>());
    rec.key.index = r.at("index").get<std::uint32_t>();
    rec.truth = label_from_name(r.at("label").get<std::string>());
    const auto& post = r.at("posteriors");
    if (post.size() != kNumClasses)
      throw DataError(path.string() + ": posterior length mismatch");
    for (int k = 0; k < kNumClasses; ++k)
      rec.posteriors[k] = post[k].get<double>();
    rec.predicted = label_from_name(r.at("predicted").get<std::string>());
    predictions.records.push_back(std::move(rec));
  }
  if (config_hash) *config_hash = doc.value("config_hash", "");
  return predictions;
}

}  // namespace cogload
