#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"
#include "cogload/features.hpp"

namespace cogload {

// Diagonal-covariance Gaussian mixture. Rows of means/variances are
// components.
struct DiagonalGmm {
  Eigen::VectorXd weights;    // C
  Eigen::MatrixXd means;      // C x F
  Eigen::MatrixXd variances;  // C x F

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  void validate() const;
};

// Per-dimension variance floor: max(floor_abs, floor_rel * global variance
// of that dimension). Applied at init and every M-step.
Eigen::VectorXd variance_floor(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                               double floor_abs = 1e-6,
                               double floor_rel = 1e-3);

// Seeded k-means++ seeding followed by `lloyd_iterations` Lloyd passes.
// Weights are cluster fractions, variances per-cluster per-dim, floored.
DiagonalGmm kmeans_init(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                        int components, std::uint64_t seed,
                        int lloyd_iterations = 10,
                        double floor_abs = 1e-6, double floor_rel = 1e-3);

struct EmResult {
  DiagonalGmm gmm;
  std::vector<double> loglik;  // total log-likelihood after each iteration
};

EmResult em_fit(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                const DiagonalGmm& init, int iterations,
                double floor_abs = 1e-6, double floor_rel = 1e-3);

// log(w_c N(x_t; mean_c, var_c)) for every frame/component pair, N x C.
Eigen::MatrixXd log_weighted_density(
    const DiagonalGmm& gmm, const Eigen::Ref<const Eigen::MatrixXd>& frames);

// Posterior component probabilities, normalized per frame via log-sum-exp.
Eigen::VectorXd responsibilities(const DiagonalGmm& gmm,
                                 const Eigen::Ref<const Eigen::VectorXd>& frame);
Eigen::MatrixXd responsibilities_batch(
    const DiagonalGmm& gmm, const Eigen::Ref<const Eigen::MatrixXd>& frames);

double log_likelihood(const DiagonalGmm& gmm,
                      const Eigen::Ref<const Eigen::MatrixXd>& frames);

// Zeroth- and centered first-order sufficient statistics of a sequence
// under the UBM.
struct BaumWelchStats {
  Eigen::VectorXd zeroth;          // C, soft frame counts
  Eigen::MatrixXd first_centered;  // C x F, sum_t gamma_t(c) (x_t - mean_c)

  BaumWelchStats() = default;
  BaumWelchStats(int components, int dim)
      : zeroth(Eigen::VectorXd::Zero(components)),
        first_centered(Eigen::MatrixXd::Zero(components, dim)) {}

  BaumWelchStats& operator+=(const BaumWelchStats& other);
};

BaumWelchStats accumulate_bw_stats(const DiagonalGmm& gmm,
                                   const Eigen::Ref<const FeatureMatrix>& seq);

// Pairwise-tree summation in index order; deterministic and stable against
// long accumulation chains.
BaumWelchStats sum_stats(const std::vector<BaumWelchStats>& parts);

// JSON document {format_version, C, F, weights, means, variances};
// round-trips exactly.
void save_gmm(const DiagonalGmm& gmm, const std::filesystem::path& path,
              const std::string& config_hash = "");
DiagonalGmm load_gmm(const std::filesystem::path& path,
                     std::string* config_hash = nullptr);

}  // namespace cogload
