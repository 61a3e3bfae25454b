#pragma once

// Binary stage artifacts private to the pipeline: per-epoch feature
// sequences (FEA1) and Baum-Welch statistics (BWS1). Both carry the
// experiment config hash and full-precision doubles, so chaining stages
// through files reproduces in-memory runs bit for bit.

#include <filesystem>
#include <string>
#include <vector>

#include "cogload/common.hpp"
#include "cogload/features.hpp"
#include "cogload/gmm.hpp"

namespace cogload::detail {

struct FeatureEpoch {
  EpochKey key;
  Label label = Label::Easy;
  FeatureMatrix values;
};

struct FeatureSet {
  int dim = 0;
  std::vector<FeatureEpoch> epochs;
};

void save_features(const FeatureSet& set, const std::filesystem::path& path,
                   const std::string& config_hash);
FeatureSet load_features(const std::filesystem::path& path,
                         std::string* config_hash);

struct StatsEpoch {
  EpochKey key;
  Label label = Label::Easy;
  BaumWelchStats stats;
};

struct StatsSet {
  int components = 0;
  int dim = 0;
  std::vector<StatsEpoch> epochs;
};

void save_stats(const StatsSet& set, const std::filesystem::path& path,
                const std::string& config_hash);
StatsSet load_stats(const std::filesystem::path& path,
                    std::string* config_hash);

}  // namespace cogload::detail
