#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"

namespace cogload {

// One system's output for a single epoch.
struct SystemOutput {
  std::string system_name;
  Eigen::Vector3d posteriors = Eigen::Vector3d::Zero();
  Label predicted = Label::Easy;
};

// Plurality vote over predicted labels. Ties are broken by the highest
// posterior summed across all systems, then by lowest class index. The
// result does not depend on the order of `outputs`.
Label vote_combine(const std::vector<SystemOutput>& outputs);

}  // namespace cogload
