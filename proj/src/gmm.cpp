#include "cogload/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "json_util.hpp"

namespace cogload {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kEmptyComponentCount = 1e-8;
// Frame-block size for the chunked E-step; bounds the responsibility
// matrix at blocks x C doubles.
constexpr Eigen::Index kEmBlock = 16384;

Eigen::VectorXd safe_log(const Eigen::VectorXd& v) {
  return v.array().max(1e-300).log().matrix();
}

}  // namespace

void DiagonalGmm::validate() const {
  const int C = components();
  const int F = dim();
  if (C == 0) throw DataError("gmm has no components");
  if (means.rows() != C || variances.rows() != C || variances.cols() != F)
    throw DataError("gmm parameter shapes disagree");
  if (std::abs(weights.sum() - 1.0) >= 1e-10)
    throw DataError("gmm weights do not sum to 1");
  if ((weights.array() < 0).any()) throw DataError("negative gmm weight");
  if (!(variances.array() > 0).all())
    throw DataError("gmm variances must be positive");
  if (!weights.allFinite() || !means.allFinite() || !variances.allFinite())
    throw DataError("gmm parameters must be finite");
}

Eigen::VectorXd variance_floor(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                               double floor_abs, double floor_rel) {
  const Eigen::Index n = frames.rows();
  if (n == 0)
    return Eigen::VectorXd::Constant(frames.cols(), floor_abs);
  const Eigen::RowVectorXd mean = frames.colwise().mean();
  const Eigen::RowVectorXd var =
      (frames.rowwise() - mean).array().square().colwise().sum() /
      static_cast<double>(n);
  return (floor_rel * var.transpose().array()).max(floor_abs).matrix();
}

// --- densities ---------------------------------------------------------------

Eigen::MatrixXd log_weighted_density(
    const DiagonalGmm& gmm, const Eigen::Ref<const Eigen::MatrixXd>& frames) {
  if (frames.cols() != gmm.dim())
    throw DataError("frame dim " + std::to_string(frames.cols()) +
                    " does not match gmm dim " + std::to_string(gmm.dim()));
  const int C = gmm.components();
  const double F = static_cast<double>(gmm.dim());

  const Eigen::MatrixXd inv_var = gmm.variances.cwiseInverse();  // C x F
  const Eigen::MatrixXd mean_inv_var = gmm.means.cwiseProduct(inv_var);
  // Per-component constant: log w_c - 0.5 (F log 2pi + sum log var + mu' S^-1 mu).
  Eigen::VectorXd constant(C);
  for (int c = 0; c < C; ++c)
    constant[c] = -0.5 * (F * kLog2Pi + gmm.variances.row(c).array().log().sum() +
                          mean_inv_var.row(c).dot(gmm.means.row(c)));
  constant += safe_log(gmm.weights);

  // Quadratic term via three matrix products.
  Eigen::MatrixXd out = frames.array().square().matrix() *
                        (-0.5 * inv_var).transpose();
  out.noalias() += frames * mean_inv_var.transpose();
  out.rowwise() += constant.transpose();
  return out;
}

namespace {

// Row-wise log-sum-exp.
Eigen::VectorXd logsumexp_rows(const Eigen::MatrixXd& log_values) {
  if (log_values.cols() == 1) return log_values.col(0);
  Eigen::VectorXd max = log_values.rowwise().maxCoeff();
  Eigen::VectorXd out(log_values.rows());
  for (Eigen::Index r = 0; r < log_values.rows(); ++r)
    out[r] = max[r] +
             std::log((log_values.row(r).array() - max[r]).exp().sum());
  return out;
}

}  // namespace

Eigen::MatrixXd responsibilities_batch(
    const DiagonalGmm& gmm, const Eigen::Ref<const Eigen::MatrixXd>& frames) {
  Eigen::MatrixXd gamma = log_weighted_density(gmm, frames);
  const Eigen::VectorXd lse = logsumexp_rows(gamma);
  gamma.colwise() -= lse;
  return gamma.array().exp();
}

Eigen::VectorXd responsibilities(const DiagonalGmm& gmm,
                                 const Eigen::Ref<const Eigen::VectorXd>& frame) {
  Eigen::MatrixXd row(1, frame.size());
  row.row(0) = frame.transpose();
  return responsibilities_batch(gmm, row).row(0);
}

double log_likelihood(const DiagonalGmm& gmm,
                      const Eigen::Ref<const Eigen::MatrixXd>& frames) {
  if (frames.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index start = 0; start < frames.rows(); start += kEmBlock) {
    const Eigen::Index len = std::min(kEmBlock, frames.rows() - start);
    total += logsumexp_rows(
                 log_weighted_density(gmm, frames.middleRows(start, len)))
                 .sum();
  }
  return total;
}

// --- k-means init --------------------------------------------------------------

namespace {

// Squared distances of every frame to one center.
Eigen::VectorXd sq_dist_to(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                           const Eigen::RowVectorXd& center) {
  return (frames.rowwise() - center).rowwise().squaredNorm();
}

}  // namespace

DiagonalGmm kmeans_init(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                        int components, std::uint64_t seed,
                        int lloyd_iterations, double floor_abs,
                        double floor_rel) {
  const Eigen::Index n = frames.rows();
  const Eigen::Index dim = frames.cols();
  if (components <= 0) throw ConfigError("component count must be positive");
  if (n < components)
    throw DataError("k-means: " + std::to_string(n) + " frames for " +
                    std::to_string(components) + " components");

  std::mt19937_64 rng(seed);
  const Eigen::VectorXd floor = variance_floor(frames, floor_abs, floor_rel);

  // k-means++ seeding.
  Eigen::MatrixXd centers(components, dim);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = frames.row(first(rng));
  Eigen::VectorXd min_dist = sq_dist_to(frames, centers.row(0));
  for (int c = 1; c < components; ++c) {
    const double total = min_dist.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> unif(0.0, total);
      double target = unif(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= min_dist[i];
        if (target <= 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = frames.row(pick);
    min_dist = min_dist.cwiseMin(sq_dist_to(frames, centers.row(c)));
  }

  // Lloyd iterations. Assignment uses -2 x.mu' + |mu|^2 (the |x|^2 term is
  // constant per frame).
  std::vector<int> assignment(n, 0);
  for (int iter = 0; iter < lloyd_iterations; ++iter) {
    Eigen::MatrixXd score = frames * centers.transpose() * -2.0;
    score.rowwise() += centers.rowwise().squaredNorm().transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      score.row(i).minCoeff(&best);
      assignment[i] = static_cast<int>(best);
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(components, dim);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(components);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignment[i]) += frames.row(i);
      counts[assignment[i]] += 1.0;
    }
    Eigen::VectorXd point_dist(n);
    for (Eigen::Index i = 0; i < n; ++i)
      point_dist[i] =
          (frames.row(i) - centers.row(assignment[i])).squaredNorm();
    for (int c = 0; c < components; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        Eigen::Index far;
        point_dist.maxCoeff(&far);
        centers.row(c) = frames.row(far);
        point_dist[far] = -1.0;
      }
    }
  }

  // Final hard assignment for the output parameters.
  {
    Eigen::MatrixXd score = frames * centers.transpose() * -2.0;
    score.rowwise() += centers.rowwise().squaredNorm().transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      score.row(i).minCoeff(&best);
      assignment[i] = static_cast<int>(best);
    }
  }

  DiagonalGmm gmm;
  gmm.weights = Eigen::VectorXd::Zero(components);
  gmm.means = Eigen::MatrixXd::Zero(components, dim);
  gmm.variances = Eigen::MatrixXd::Zero(components, dim);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(components);
  for (Eigen::Index i = 0; i < n; ++i) {
    counts[assignment[i]] += 1.0;
    gmm.means.row(assignment[i]) += frames.row(i);
  }
  for (int c = 0; c < components; ++c)
    if (counts[c] > 0) gmm.means.row(c) /= counts[c];
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = assignment[i];
    gmm.variances.row(c) +=
        (frames.row(i) - gmm.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < components; ++c) {
    if (counts[c] > 0) gmm.variances.row(c) /= counts[c];
    gmm.variances.row(c) =
        gmm.variances.row(c).cwiseMax(floor.transpose());
    if (counts[c] == 0) gmm.means.row(c) = centers.row(c);
  }
  gmm.weights = counts / static_cast<double>(n);
  return gmm;
}

// --- EM ------------------------------------------------------------------------

EmResult em_fit(const Eigen::Ref<const Eigen::MatrixXd>& frames,
                const DiagonalGmm& init, int iterations, double floor_abs,
                double floor_rel) {
  if (iterations < 0) throw ConfigError("em iterations must be >= 0");
  const Eigen::Index n = frames.rows();
  if (n == 0) throw DataError("em_fit: no frames");
  init.validate();
  const int C = init.components();
  const Eigen::Index dim = frames.cols();
  if (dim != init.dim()) throw DataError("em_fit: frame/gmm dim mismatch");

  const Eigen::VectorXd floor = variance_floor(frames, floor_abs, floor_rel);
  const Eigen::MatrixXd frames_sq = frames.array().square();

  EmResult result;
  result.gmm = init;
  result.loglik.reserve(iterations);

  // The trace holds the data log-likelihood after each update. The E-step
  // of iteration i evaluates the model produced by iteration i-1, so each
  // E-step pass doubles as the previous iteration's trace entry; one extra
  // pass at the end covers the final model.
  for (int iter = 0; iter < iterations; ++iter) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(C);
    Eigen::MatrixXd weighted_sum = Eigen::MatrixXd::Zero(C, dim);
    Eigen::MatrixXd weighted_sq = Eigen::MatrixXd::Zero(C, dim);
    double loglik = 0.0;

    for (Eigen::Index start = 0; start < n; start += kEmBlock) {
      const Eigen::Index len = std::min(kEmBlock, n - start);
      Eigen::MatrixXd gamma =
          log_weighted_density(result.gmm, frames.middleRows(start, len));
      const Eigen::VectorXd lse = logsumexp_rows(gamma);
      loglik += lse.sum();
      gamma.colwise() -= lse;
      gamma = gamma.array().exp();
      counts += gamma.colwise().sum().transpose();
      weighted_sum.noalias() +=
          gamma.transpose() * frames.middleRows(start, len);
      weighted_sq.noalias() +=
          gamma.transpose() * frames_sq.middleRows(start, len);
    }

    if (!std::isfinite(loglik))
      throw NumericalError("em_fit: non-finite log-likelihood at iteration " +
                           std::to_string(iter));
    if (iter > 0) result.loglik.push_back(loglik);

    for (int c = 0; c < C; ++c) {
      if (counts[c] < kEmptyComponentCount) continue;  // keep previous params
      const Eigen::RowVectorXd mean = weighted_sum.row(c) / counts[c];
      result.gmm.means.row(c) = mean;
      result.gmm.variances.row(c) =
          (weighted_sq.row(c) / counts[c] - mean.array().square().matrix())
              .cwiseMax(floor.transpose());
    }
    result.gmm.weights = counts / static_cast<double>(n);
  }

  if (iterations > 0) {
    const double final_loglik = log_likelihood(result.gmm, frames);
    if (!std::isfinite(final_loglik))
      throw NumericalError(
          "em_fit: non-finite log-likelihood after final iteration");
    result.loglik.push_back(final_loglik);
  }
  return result;
}

// --- Baum-Welch statistics ------------------------------------------------------

BaumWelchStats& BaumWelchStats::operator+=(const BaumWelchStats& other) {
  if (zeroth.size() == 0) {
    *this = other;
    return *this;
  }
  if (other.zeroth.size() == 0) return *this;
  if (zeroth.size() != other.zeroth.size() ||
      first_centered.cols() != other.first_centered.cols())
    throw DataError("cannot add Baum-Welch stats of different shapes");
  zeroth += other.zeroth;
  first_centered += other.first_centered;
  return *this;
}

BaumWelchStats accumulate_bw_stats(const DiagonalGmm& gmm,
                                   const Eigen::Ref<const FeatureMatrix>& seq) {
  BaumWelchStats stats(gmm.components(), gmm.dim());
  if (seq.rows() == 0) return stats;
  const Eigen::MatrixXd gamma = responsibilities_batch(gmm, seq);
  stats.zeroth = gamma.colwise().sum();
  stats.first_centered.noalias() = gamma.transpose() * seq;
  stats.first_centered -= stats.zeroth.asDiagonal() * gmm.means;
  return stats;
}

namespace {

BaumWelchStats sum_range(const std::vector<BaumWelchStats>& parts,
                         std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  BaumWelchStats left = sum_range(parts, lo, mid);
  left += sum_range(parts, mid, hi);
  return left;
}

}  // namespace

BaumWelchStats sum_stats(const std::vector<BaumWelchStats>& parts) {
  if (parts.empty()) return {};
  return sum_range(parts, 0, parts.size());
}

// --- serialization ---------------------------------------------------------------

void save_gmm(const DiagonalGmm& gmm, const std::filesystem::path& path,
              const std::string& config_hash) {
  gmm.validate();
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "diagonal_gmm";
  if (!config_hash.empty()) doc["config_hash"] = config_hash;
  doc["C"] = gmm.components();
  doc["F"] = gmm.dim();
  doc["weights"] = detail::vector_to_json(gmm.weights);
  doc["means"] = detail::matrix_to_json(gmm.means);
  doc["variances"] = detail::matrix_to_json(gmm.variances);
  detail::write_json_file(doc, path);
}

DiagonalGmm load_gmm(const std::filesystem::path& path,
                     std::string* config_hash) {
  const nlohmann::json doc = detail::load_json_file(path, "gmm model");
  if (doc.value("format_version", 0) != 1 ||
      doc.value("kind", "") != "diagonal_gmm")
    throw DataError(path.string() + ": not a gmm model file");
  DiagonalGmm gmm;
  gmm.weights = detail::vector_from_json(doc.at("weights"));
  gmm.means = detail::matrix_from_json(doc.at("means"));
  gmm.variances = detail::matrix_from_json(doc.at("variances"));
  if (gmm.components() != doc.at("C").get<int>() ||
      gmm.dim() != doc.at("F").get<int>())
    throw DataError(path.string() + ": header dims disagree with payload");
  gmm.validate();
  if (config_hash) *config_hash = doc.value("config_hash", "");
  return gmm;
}

}  // namespace cogload
