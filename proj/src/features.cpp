#include "cogload/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cogload {

const char* pooling_name(Pooling pooling) {
  switch (pooling) {
    case Pooling::None: return "none";
    case Pooling::Max: return "max";
    case Pooling::Average: return "average";
  }
  throw ConfigError("invalid pooling mode");
}

Pooling pooling_from_name(const std::string& name) {
  if (name == "none") return Pooling::None;
  if (name == "max") return Pooling::Max;
  if (name == "average" || name == "avg") return Pooling::Average;
  throw ConfigError("unknown pooling mode: " + name);
}

void ChannelGrouping::validate() const {
  if (groups.empty()) throw ConfigError("grouping \"" + name + "\" is empty");
  for (const auto& group : groups) {
    if (group.empty())
      throw ConfigError("grouping \"" + name + "\" contains an empty group");
    if (pooling == Pooling::None && group.size() != 1)
      throw ConfigError("grouping \"" + name +
                        "\": pooling none requires singleton groups");
  }
}

void ChannelGrouping::validate_against(
    const std::vector<std::string>& channel_names) const {
  validate();
  std::unordered_set<std::string> known(channel_names.begin(),
                                        channel_names.end());
  for (const auto& group : groups)
    for (const auto& channel : group)
      if (!known.count(channel))
        throw ConfigError("grouping \"" + name + "\" references channel \"" +
                          channel + "\" absent from the dataset");
}

ChannelGrouping ChannelGrouping::with_pooling(Pooling mode) const {
  ChannelGrouping out = *this;
  out.pooling = mode;
  return out;
}

namespace {

using Groups = std::vector<std::vector<std::string>>;

// Table-3 sensor configurations, transcribed verbatim.

ChannelGrouping make_sd31() {
  const std::vector<std::string> channels = {
      "FP1", "FP2", "Fz",  "F3",  "F7",  "F4",  "F8",  "FCz",
      "FC1", "FC2", "FC5", "FC6", "C3",  "C4",  "CP1", "CP5",
      "CP2", "CP6", "Pz",  "P3",  "P7",  "P4",  "P8",  "Oz",
      "O1",  "O2",  "AF7", "T7",  "FT9", "FT8", "T8"};
  ChannelGrouping g;
  g.name = "sd31";
  g.pooling = Pooling::None;
  for (const auto& c : channels) g.groups.push_back({c});
  return g;
}

ChannelGrouping make_p21() {
  ChannelGrouping g;
  g.name = "p21";
  g.pooling = Pooling::Max;
  g.groups = Groups{{"FP1", "FP2"},
                    {"Fz", "F1", "F2"},
                    {"F3", "F5", "F7"},
                    {"F4", "F6", "F8"},
                    {"FCz", "FC1", "FC2"},
                    {"FC3", "FC5"},
                    {"FC4", "FC6"},
                    {"C1", "C3", "C5"},
                    {"C2", "C4", "C6"},
                    {"CP1", "CP3", "CP5"},
                    {"CP2", "CP4", "CP6"},
                    {"CPz"},
                    {"Pz", "P1", "P2"},
                    {"P3", "P5", "P7"},
                    {"P4", "P6", "P8"},
                    {"Oz", "O1", "O2", "O3", "O4", "O5"},
                    {"AFz", "AF3", "AF7"},
                    {"AF4", "AF8"},
                    {"POz", "PO3", "PO4", "PO7", "PO8"},
                    {"FT7", "T7", "TP7"},
                    {"FT8", "T8", "P8"}};
  return g;
}

ChannelGrouping make_p25() {
  ChannelGrouping g;
  g.name = "p25";
  g.pooling = Pooling::Max;
  g.groups = Groups{{"FP1", "FP2"},
                    {"Fz"},
                    {"F1", "F3", "F5", "F7"},
                    {"F2", "F4", "F6", "F8"},
                    {"FCz"},
                    {"FC1", "FC3", "FC5"},
                    {"FC2", "FC4", "FC6"},
                    {"C1", "C3", "C5"},
                    {"C2", "C4", "C6"},
                    {"CP1", "CP3", "CP5"},
                    {"CP2", "CP4", "CP6"},
                    {"CPz"},
                    {"Pz"},
                    {"P1", "P3", "P5", "P7"},
                    {"P2", "P4", "P6", "P8"},
                    {"Oz", "O1", "O2", "O3", "O4", "O5"},
                    {"AFz"},
                    {"AF3", "AF7"},
                    {"AF4", "AF8"},
                    {"POz"},
                    {"PO3", "PO7"},
                    {"PO4", "PO8"},
                    {"T7"},
                    {"FT7", "FT8"},
                    {"TP7", "TP8"}};
  return g;
}

}  // namespace

const ChannelGrouping& builtin_grouping(std::string_view name) {
  static const ChannelGrouping sd31 = make_sd31();
  static const ChannelGrouping p21 = make_p21();
  static const ChannelGrouping p25 = make_p25();
  if (name == "sd31") return sd31;
  if (name == "p21") return p21;
  if (name == "p25") return p25;
  throw ConfigError("unknown builtin grouping: " + std::string(name));
}

std::vector<std::string> builtin_grouping_names() {
  return {"sd31", "p21", "p25"};
}

bool is_builtin_grouping(std::string_view name) {
  return name == "sd31" || name == "p21" || name == "p25";
}

const std::vector<std::string>& table_montage() {
  // Union of every channel the bundled groupings reference, front-to-back.
  static const std::vector<std::string> montage = {
      "FP1", "FP2",
      "AFz", "AF3", "AF4", "AF7", "AF8",
      "Fz",  "F1",  "F2",  "F3",  "F4",  "F5",  "F6",  "F7",  "F8",
      "FT7", "FT8", "FT9",
      "FCz", "FC1", "FC2", "FC3", "FC4", "FC5", "FC6",
      "T7",  "T8",
      "C1",  "C2",  "C3",  "C4",  "C5",  "C6",
      "TP7", "TP8",
      "CPz", "CP1", "CP2", "CP3", "CP4", "CP5", "CP6",
      "Pz",  "P1",  "P2",  "P3",  "P4",  "P5",  "P6",  "P7",  "P8",
      "POz", "PO3", "PO4", "PO7", "PO8",
      "Oz",  "O1",  "O2",  "O3",  "O4",  "O5"};
  return montage;
}

ChannelGrouping auto_grouping(const std::vector<std::string>& channel_names,
                              int group_size, Pooling pooling) {
  if (group_size <= 0) throw ConfigError("auto grouping: group size must be positive");
  if (pooling == Pooling::None && group_size != 1)
    throw ConfigError("auto grouping: pooling none requires group size 1");
  ChannelGrouping g;
  g.name = "auto:" + std::to_string(group_size);
  g.pooling = pooling;
  for (std::size_t start = 0; start < channel_names.size();
       start += group_size) {
    const std::size_t end =
        std::min(channel_names.size(), start + group_size);
    g.groups.emplace_back(channel_names.begin() + start,
                          channel_names.begin() + end);
  }
  g.validate();
  return g;
}

ChannelGrouping load_grouping(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open grouping file: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("grouping parse error in " + path.string() + ": " +
                      e.what());
  }
  ChannelGrouping g;
  g.name = doc.value("name", path.stem().string());
  g.pooling = pooling_from_name(doc.at("pooling").get<std::string>());
  for (const auto& group : doc.at("groups"))
    g.groups.push_back(group.get<std::vector<std::string>>());
  g.validate();
  return g;
}

void save_grouping(const ChannelGrouping& grouping,
                   const std::filesystem::path& path) {
  grouping.validate();
  nlohmann::json doc;
  doc["name"] = grouping.name;
  doc["pooling"] = pooling_name(grouping.pooling);
  doc["groups"] = grouping.groups;
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw DataError("cannot write grouping file: " + path.string());
  file << doc.dump(2) << "\n";
}

// --- Frame featurization ------------------------------------------------------

FeatureMatrix apply_grouping(const Eigen::Ref<const Eigen::MatrixXf>& frames,
                             const ChannelGrouping& grouping,
                             const std::vector<std::string>& channel_names) {
  grouping.validate_against(channel_names);
  if (frames.cols() != static_cast<Eigen::Index>(channel_names.size()))
    throw DataError("frame matrix has " + std::to_string(frames.cols()) +
                    " channels, channel list has " +
                    std::to_string(channel_names.size()));

  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < channel_names.size(); ++i)
    index.emplace(channel_names[i], static_cast<int>(i));

  const Eigen::Index n_frames = frames.rows();
  FeatureMatrix out(n_frames, grouping.group_count());
  for (int g = 0; g < grouping.group_count(); ++g) {
    const auto& group = grouping.groups[g];
    if (grouping.pooling == Pooling::None) {
      out.col(g) = frames.col(index.at(group.front())).cast<double>();
      continue;
    }
    Eigen::MatrixXd cols(n_frames, group.size());
    for (std::size_t j = 0; j < group.size(); ++j)
      cols.col(j) = frames.col(index.at(group[j])).cast<double>();
    if (grouping.pooling == Pooling::Max)
      out.col(g) = cols.rowwise().maxCoeff();
    else
      out.col(g) = cols.rowwise().mean();
  }
  return out;
}

FeatureMatrix sma_smooth(const Eigen::Ref<const FeatureMatrix>& seq,
                         int window) {
  if (window < 1) throw ConfigError("sma window must be >= 1");
  if (window == 1) return seq;
  const Eigen::Index n = seq.rows();
  FeatureMatrix out(n, seq.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - window + 1);
    const Eigen::Index len = t - lo + 1;
    out.row(t) = seq.middleRows(lo, len).colwise().sum() /
                 static_cast<double>(len);
  }
  return out;
}

GmvnStats fit_gmvn(const std::vector<FeatureMatrix>& seqs, double floor) {
  if (floor <= 0) throw ConfigError("gmvn floor must be positive");
  Eigen::Index dim = -1;
  std::size_t n_frames = 0;
  for (const auto& seq : seqs) {
    if (dim < 0)
      dim = seq.cols();
    else if (seq.cols() != dim)
      throw DataError("gmvn: sequences have mismatched dimensions");
    n_frames += static_cast<std::size_t>(seq.rows());
  }
  if (dim < 0 || n_frames == 0)
    throw DataError("gmvn: no frames to fit on");

  GmvnStats stats;
  stats.floor = floor;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& seq : seqs) sum += seq.colwise().sum().transpose();
  stats.mean = sum / static_cast<double>(n_frames);

  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (const auto& seq : seqs)
    sq += (seq.rowwise() - stats.mean.transpose())
              .array()
              .square()
              .colwise()
              .sum()
              .matrix()
              .transpose();
  stats.std = (sq / static_cast<double>(n_frames))
                  .array()
                  .max(0.0)
                  .sqrt()
                  .max(floor)
                  .matrix();
  return stats;
}

FeatureMatrix apply_gmvn(const Eigen::Ref<const FeatureMatrix>& seq,
                         const GmvnStats& stats) {
  if (seq.cols() != stats.mean.size())
    throw DataError("gmvn: sequence dim " + std::to_string(seq.cols()) +
                    " does not match stats dim " +
                    std::to_string(stats.mean.size()));
  return (seq.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

FeatureMatrix append_deltas(const Eigen::Ref<const FeatureMatrix>& seq) {
  const Eigen::Index n = seq.rows();
  const Eigen::Index d = seq.cols();
  if (n < 1) throw DataError("append_deltas: empty sequence");
  FeatureMatrix out(n, 2 * d);
  out.leftCols(d) = seq;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index prev = std::max<Eigen::Index>(0, t - 1);
    const Eigen::Index next = std::min<Eigen::Index>(n - 1, t + 1);
    out.row(t).tail(d) = 0.5 * (seq.row(next) - seq.row(prev));
  }
  return out;
}

}  // namespace cogload
