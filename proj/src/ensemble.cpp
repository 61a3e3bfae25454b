#include "cogload/ensemble.hpp"

#include <array>
#include <cmath>

namespace cogload {

Label vote_combine(const std::vector<SystemOutput>& outputs) {
  if (outputs.empty())
    throw DataError("vote_combine: no system outputs for this epoch");

  std::array<int, kNumClasses> votes = {0, 0, 0};
  std::array<double, kNumClasses> posterior_sum = {0.0, 0.0, 0.0};
  for (const SystemOutput& out : outputs) {
    if (std::abs(out.posteriors.sum() - 1.0) >= 1e-9)
      throw DataError("vote_combine: system \"" + out.system_name +
                      "\" posteriors do not sum to 1");
    votes[static_cast<int>(out.predicted)] += 1;
    for (int k = 0; k < kNumClasses; ++k) posterior_sum[k] += out.posteriors[k];
  }

  // Plurality; ties by summed posterior, then by lowest class index. All
  // three keys are sums over systems, so the result is order-invariant.
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (votes[k] > votes[best] ||
        (votes[k] == votes[best] && posterior_sum[k] > posterior_sum[best]))
      best = k;
  }
  return label_from_index(best);
}

}  // namespace cogload
