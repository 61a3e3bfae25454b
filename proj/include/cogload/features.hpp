#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"

namespace cogload {

// Frame-level feature sequences are dense double matrices, frame-major
// (row = frame, column = feature dimension).
using FeatureMatrix = Eigen::MatrixXd;

enum class Pooling { None, Max, Average };

const char* pooling_name(Pooling pooling);
Pooling pooling_from_name(const std::string& name);

// A named list of channel groups plus a pooling mode. Groups may overlap;
// with Pooling::None every group must be a singleton.
struct ChannelGrouping {
  std::string name;
  std::vector<std::vector<std::string>> groups;
  Pooling pooling = Pooling::None;

  int group_count() const { return static_cast<int>(groups.size()); }

  // Structural checks only (non-empty groups, singleton rule for None).
  void validate() const;
  // Also checks every referenced channel exists in `channel_names`.
  void validate_against(const std::vector<std::string>& channel_names) const;

  ChannelGrouping with_pooling(Pooling mode) const;
};

// The three bundled sensor configurations: "sd31" (31 singletons),
// "p21" (21 sub-regions), "p25" (25 sub-regions).
const ChannelGrouping& builtin_grouping(std::string_view name);
std::vector<std::string> builtin_grouping_names();
bool is_builtin_grouping(std::string_view name);

// All channel names the bundled groupings reference, in a fixed montage
// order. Synthetic paper-shaped datasets use this channel list.
const std::vector<std::string>& table_montage();

// Disjoint groups of `group_size` consecutive channels (last group may be
// smaller). Used for synthetic datasets whose channels carry no montage
// meaning.
ChannelGrouping auto_grouping(const std::vector<std::string>& channel_names,
                              int group_size, Pooling pooling);

// JSON data-file format: {"name": ..., "pooling": ..., "groups": [[...]]}.
ChannelGrouping load_grouping(const std::filesystem::path& path);
void save_grouping(const ChannelGrouping& grouping,
                   const std::filesystem::path& path);

// --- Frame featurization ---------------------------------------------------

// Per frame and group, the max, mean, or raw value of the group's channels.
// Output has one column per group.
FeatureMatrix apply_grouping(const Eigen::Ref<const Eigen::MatrixXf>& frames,
                             const ChannelGrouping& grouping,
                             const std::vector<std::string>& channel_names);

// Trailing (causal) moving average, per column:
// out[t] = mean(in[max(0, t-window+1) .. t]).
FeatureMatrix sma_smooth(const Eigen::Ref<const FeatureMatrix>& seq,
                         int window);

struct GmvnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  double floor = 1e-6;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Per-dimension mean and population standard deviation over all frames of
// all sequences; std is clamped below by `floor`.
GmvnStats fit_gmvn(const std::vector<FeatureMatrix>& seqs,
                   double floor = 1e-6);

FeatureMatrix apply_gmvn(const Eigen::Ref<const FeatureMatrix>& seq,
                         const GmvnStats& stats);

// Doubles the feature dimension: [x | delta] with
// delta[t] = (x[t+1] - x[t-1]) / 2 and edge replication.
FeatureMatrix append_deltas(const Eigen::Ref<const FeatureMatrix>& seq);

}  // namespace cogload
