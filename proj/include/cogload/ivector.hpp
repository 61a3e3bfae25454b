#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"
#include "cogload/features.hpp"
#include "cogload/gmm.hpp"

namespace cogload {

// Total-variability model: T maps R-dimensional latent vectors to offsets
// of the UBM mean supervector. Row block c of T spans rows [c*F, (c+1)*F).
struct TotalVariability {
  Eigen::MatrixXd T;  // (C*F) x R
  DiagonalGmm ubm;

  int rank() const { return static_cast<int>(T.cols()); }
  int components() const { return ubm.components(); }
  int feature_dim() const { return ubm.dim(); }

  void validate() const;
};

// T entries i.i.d. Gaussian with scale 0.1 * sqrt(mean UBM variance); a
// non-negative `scale` overrides that default.
TotalVariability tv_init(const DiagonalGmm& ubm, int rank, std::uint64_t seed,
                         double scale = -1.0);

// Precomputed per-component Gram matrices for repeated extraction.
class IvectorExtractor {
 public:
  explicit IvectorExtractor(const TotalVariability& tv);

  // Posterior mean of the latent vector under prior N(0, I):
  //   L = I + sum_c N_c T_c' Sigma_c^-1 T_c
  //   w = L^-1 sum_c T_c' Sigma_c^-1 fc
  Eigen::VectorXd extract(const BaumWelchStats& stats) const;

  // Posterior precision for the given zeroth-order stats.
  Eigen::MatrixXd posterior_precision(const Eigen::VectorXd& zeroth) const;
  // T' Sigma^-1 f for the given first-order stats.
  Eigen::VectorXd information_vector(const Eigen::MatrixXd& first_centered) const;

  int rank() const { return rank_; }

 private:
  int components_;
  int feature_dim_;
  int rank_;
  Eigen::MatrixXd sigma_inv_T_;            // (C*F) x R, rows scaled by 1/var
  std::vector<Eigen::MatrixXd> gram_;      // per component, R x R
};

Eigen::VectorXd extract_ivector(const TotalVariability& tv,
                                const BaumWelchStats& stats);

// EM re-estimation of T from per-epoch statistics. Per iteration the E-step
// computes posterior means and second moments per epoch; the M-step solves
// T_c = (sum_u f_uc E[w_u]') (sum_u N_uc E[w_u w_u'])^-1 per component.
// A singular M-step accumulator is regularized with 1e-8*I and a warning
// on stderr.
TotalVariability tv_train(const TotalVariability& tv,
                          const std::vector<BaumWelchStats>& all_stats,
                          int iterations);

// --- Per-epoch i-vector series -------------------------------------------

struct EpochIvector {
  EpochKey key;
  Label label = Label::Easy;
  Eigen::VectorXd w;
};

// Trailing SMA over consecutive same-block i-vectors; the window never
// crosses a (subject, session, block) boundary. The series must be ordered
// by key.
std::vector<EpochIvector> sma_over_blocks(
    const std::vector<EpochIvector>& series, int window);

// SMA then GMVN. With stats == nullptr the normalization statistics are fit
// on the smoothed series itself (the fit-on-train path); `fitted` receives
// them when non-null.
std::vector<EpochIvector> postprocess_ivectors(
    const std::vector<EpochIvector>& series, int window,
    const GmvnStats* stats = nullptr, GmvnStats* fitted = nullptr);

// JSON: {format_version, R, C, F, T (row-major), ubm_checksum}; the UBM is
// stored in its own file and re-attached on load.
void save_tv(const TotalVariability& tv, const std::filesystem::path& path,
             const std::string& config_hash = "");
TotalVariability load_tv(const std::filesystem::path& path,
                         const DiagonalGmm& ubm,
                         std::string* config_hash = nullptr);

// Checksum over the UBM parameter bytes, used to pair T-matrix files with
// the UBM they were trained against.
std::string gmm_checksum(const DiagonalGmm& gmm);

// I-vector dumps: one record per epoch
// {subject, session, block, index, label, w}.
void save_ivectors(const std::vector<EpochIvector>& series,
                   const std::filesystem::path& path,
                   const std::string& config_hash = "");
std::vector<EpochIvector> load_ivectors(const std::filesystem::path& path,
                                        std::string* config_hash = nullptr);

}  // namespace cogload
