#include "cogload/ivector.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <tuple>

#include <Eigen/Cholesky>

#include "json_util.hpp"

namespace cogload {

void TotalVariability::validate() const {
  ubm.validate();
  const int supervector = components() * feature_dim();
  if (T.rows() != supervector)
    throw DataError("T has " + std::to_string(T.rows()) +
                    " rows, expected C*F = " + std::to_string(supervector));
  if (rank() < 1) throw DataError("T has no columns");
  if (rank() > supervector)
    throw ConfigError("i-vector rank " + std::to_string(rank()) +
                      " exceeds supervector dim " +
                      std::to_string(supervector));
  if (!T.allFinite()) throw DataError("T contains non-finite entries");
}

TotalVariability tv_init(const DiagonalGmm& ubm, int rank, std::uint64_t seed,
                         double scale) {
  ubm.validate();
  if (rank < 1) throw ConfigError("i-vector rank must be >= 1");
  const Eigen::Index supervector =
      static_cast<Eigen::Index>(ubm.components()) * ubm.dim();
  if (rank > supervector)
    throw ConfigError("i-vector rank " + std::to_string(rank) +
                      " exceeds supervector dim " +
                      std::to_string(supervector));
  if (scale < 0) scale = 0.1 * std::sqrt(ubm.variances.mean());

  TotalVariability tv;
  tv.ubm = ubm;
  tv.T.resize(supervector, rank);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < supervector; ++r)
    for (int c = 0; c < rank; ++c) tv.T(r, c) = scale * normal(rng);
  return tv;
}

// --- extraction -----------------------------------------------------------------

IvectorExtractor::IvectorExtractor(const TotalVariability& tv)
    : components_(tv.components()),
      feature_dim_(tv.feature_dim()),
      rank_(tv.rank()) {
  tv.validate();
  sigma_inv_T_.resize(tv.T.rows(), rank_);
  gram_.reserve(components_);
  for (int c = 0; c < components_; ++c) {
    const auto T_c = tv.T.middleRows(c * feature_dim_, feature_dim_);
    auto S_c = sigma_inv_T_.middleRows(c * feature_dim_, feature_dim_);
    S_c = tv.ubm.variances.row(c).cwiseInverse().asDiagonal() * T_c;
    Eigen::MatrixXd gram = T_c.transpose() * S_c;
    gram_.push_back(0.5 * (gram + gram.transpose()));
  }
}

Eigen::MatrixXd IvectorExtractor::posterior_precision(
    const Eigen::VectorXd& zeroth) const {
  if (zeroth.size() != components_)
    throw DataError("stats component count does not match the model");
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(rank_, rank_);
  for (int c = 0; c < components_; ++c)
    if (zeroth[c] != 0.0) L.noalias() += zeroth[c] * gram_[c];
  return L;
}

Eigen::VectorXd IvectorExtractor::information_vector(
    const Eigen::MatrixXd& first_centered) const {
  if (first_centered.rows() != components_ ||
      first_centered.cols() != feature_dim_)
    throw DataError("stats shape does not match the model");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rank_);
  for (int c = 0; c < components_; ++c)
    rhs.noalias() += sigma_inv_T_.middleRows(c * feature_dim_, feature_dim_)
                         .transpose() *
                     first_centered.row(c).transpose();
  return rhs;
}

Eigen::VectorXd IvectorExtractor::extract(const BaumWelchStats& stats) const {
  const Eigen::MatrixXd L = posterior_precision(stats.zeroth);
  const Eigen::VectorXd rhs = information_vector(stats.first_centered);
  Eigen::LLT<Eigen::MatrixXd> llt(L);
  if (llt.info() != Eigen::Success)
    throw NumericalError("i-vector posterior precision is not SPD");
  return llt.solve(rhs);
}

Eigen::VectorXd extract_ivector(const TotalVariability& tv,
                                const BaumWelchStats& stats) {
  return IvectorExtractor(tv).extract(stats);
}

// --- training -------------------------------------------------------------------

TotalVariability tv_train(const TotalVariability& tv,
                          const std::vector<BaumWelchStats>& all_stats,
                          int iterations) {
  tv.validate();
  if (iterations < 0) throw ConfigError("tv iterations must be >= 0");
  if (all_stats.empty()) throw DataError("tv_train: no statistics");
  const int C = tv.components();
  const int F = tv.feature_dim();
  const int R = tv.rank();
  for (const auto& stats : all_stats)
    if (stats.zeroth.size() != C || stats.first_centered.cols() != F)
      throw DataError("tv_train: stats shape does not match the model");

  TotalVariability current = tv;
  for (int iter = 0; iter < iterations; ++iter) {
    const IvectorExtractor extractor(current);

    std::vector<Eigen::MatrixXd> moment_acc(
        C, Eigen::MatrixXd::Zero(R, R));                 // sum_u N_uc E[w w']
    Eigen::MatrixXd cross_acc =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C) * F, R);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(R, R);

    for (const BaumWelchStats& stats : all_stats) {
      const Eigen::MatrixXd L = extractor.posterior_precision(stats.zeroth);
      Eigen::LLT<Eigen::MatrixXd> llt(L);
      if (llt.info() != Eigen::Success)
        throw NumericalError("tv_train: posterior precision not SPD");
      const Eigen::VectorXd mean =
          llt.solve(extractor.information_vector(stats.first_centered));
      Eigen::MatrixXd second = llt.solve(identity);
      second.noalias() += mean * mean.transpose();

      for (int c = 0; c < C; ++c)
        if (stats.zeroth[c] != 0.0)
          moment_acc[c].noalias() += stats.zeroth[c] * second;
      for (int c = 0; c < C; ++c)
        cross_acc.middleRows(c * F, F).noalias() +=
            stats.first_centered.row(c).transpose() * mean.transpose();
    }

    for (int c = 0; c < C; ++c) {
      Eigen::MatrixXd acc = 0.5 * (moment_acc[c] + moment_acc[c].transpose());
      Eigen::LDLT<Eigen::MatrixXd> ldlt(acc);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        std::fprintf(stderr,
                     "tv_train: singular update accumulator for component %d "
                     "(iteration %d); regularizing\n",
                     c, iter);
        acc += 1e-8 * identity;
        ldlt.compute(acc);
      }
      current.T.middleRows(c * F, F) =
          ldlt.solve(cross_acc.middleRows(c * F, F).transpose()).transpose();
    }
  }
  return current;
}

// --- per-epoch series --------------------------------------------------------------

namespace {

std::tuple<int, int, int> block_of(const EpochIvector& e) {
  return {e.key.subject, e.key.session, e.key.block};
}

void check_ordered(const std::vector<EpochIvector>& series) {
  for (std::size_t i = 1; i < series.size(); ++i)
    if (!(series[i - 1].key < series[i].key))
      throw DataError("i-vector series not ordered by epoch key at position " +
                      std::to_string(i) + " (" + format_key(series[i].key) +
                      ")");
}

}  // namespace

std::vector<EpochIvector> sma_over_blocks(
    const std::vector<EpochIvector>& series, int window) {
  if (window < 1) throw ConfigError("sma window must be >= 1");
  check_ordered(series);
  std::vector<EpochIvector> out = series;

  std::size_t start = 0;
  while (start < out.size()) {
    std::size_t end = start + 1;
    while (end < out.size() && block_of(out[end]) == block_of(out[start]))
      ++end;
    const std::size_t len = end - start;
    Eigen::MatrixXd block(len, out[start].w.size());
    for (std::size_t i = 0; i < len; ++i)
      block.row(i) = out[start + i].w.transpose();
    const Eigen::MatrixXd smoothed = sma_smooth(block, window);
    for (std::size_t i = 0; i < len; ++i)
      out[start + i].w = smoothed.row(i).transpose();
    start = end;
  }
  return out;
}

std::vector<EpochIvector> postprocess_ivectors(
    const std::vector<EpochIvector>& series, int window,
    const GmvnStats* stats, GmvnStats* fitted) {
  std::vector<EpochIvector> out = sma_over_blocks(series, window);
  if (out.empty()) return out;

  Eigen::MatrixXd stacked(out.size(), out.front().w.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    stacked.row(i) = out[i].w.transpose();

  GmvnStats used = stats ? *stats : fit_gmvn({stacked});
  if (fitted) *fitted = used;

  const Eigen::MatrixXd normalized = apply_gmvn(stacked, used);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].w = normalized.row(i).transpose();
  return out;
}

// --- serialization -------------------------------------------------------------------

std::string gmm_checksum(const DiagonalGmm& gmm) {
  std::uint64_t hash = detail::fnv1a(
      gmm.weights.data(), sizeof(double) * gmm.weights.size());
  hash = detail::fnv1a(gmm.means.data(), sizeof(double) * gmm.means.size(),
                       hash);
  hash = detail::fnv1a(gmm.variances.data(),
                       sizeof(double) * gmm.variances.size(), hash);
  return detail::hash_hex(hash);
}

void save_tv(const TotalVariability& tv, const std::filesystem::path& path,
             const std::string& config_hash) {
  tv.validate();
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "total_variability";
  if (!config_hash.empty()) doc["config_hash"] = config_hash;
  doc["R"] = tv.rank();
  doc["C"] = tv.components();
  doc["F"] = tv.feature_dim();
  doc["T"] = detail::matrix_to_json_flat(tv.T);
  doc["ubm_checksum"] = gmm_checksum(tv.ubm);
  detail::write_json_file(doc, path);
}

TotalVariability load_tv(const std::filesystem::path& path,
                         const DiagonalGmm& ubm, std::string* config_hash) {
  const nlohmann::json doc = detail::load_json_file(path, "tv model");
  if (doc.value("format_version", 0) != 1 ||
      doc.value("kind", "") != "total_variability")
    throw DataError(path.string() + ": not a total-variability model file");
  const int R = doc.at("R").get<int>();
  const int C = doc.at("C").get<int>();
  const int F = doc.at("F").get<int>();
  if (C != ubm.components() || F != ubm.dim())
    throw DataError(path.string() + ": model dims do not match the UBM");
  if (doc.at("ubm_checksum").get<std::string>() != gmm_checksum(ubm))
    throw DataError(path.string() +
                    ": UBM checksum mismatch; this T-matrix was trained "
                    "against a different UBM");
  TotalVariability tv;
  tv.ubm = ubm;
  tv.T = detail::matrix_from_json_flat(doc.at("T"),
                                       static_cast<Eigen::Index>(C) * F, R);
  tv.validate();
  if (config_hash) *config_hash = doc.value("config_hash", "");
  return tv;
}

void save_ivectors(const std::vector<EpochIvector>& series,
                   const std::filesystem::path& path,
                   const std::string& config_hash) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "ivectors";
  if (!config_hash.empty()) doc["config_hash"] = config_hash;
  doc["R"] = series.empty() ? 0 : static_cast<int>(series.front().w.size());
  nlohmann::json records = nlohmann::json::array();
  for (const EpochIvector& e : series) {
    nlohmann::json rec;
    rec["subject"] = e.key.subject;
    rec["session"] = e.key.session;
    rec["block"] = e.key.block;
    rec["index"] = e.key.index;
    rec["label"] = label_name(e.label);
    rec["w"] = detail::vector_to_json(e.w);
    records.push_back(std::move(rec));
  }
  doc["records"] = std::move(records);
  detail::write_json_file(doc, path);
}

std::vector<EpochIvector> load_ivectors(const std::filesystem::path& path,
                                        std::string* config_hash) {
  const nlohmann::json doc = detail::load_json_file(path, "i-vector dump");
  if (doc.value("format_version", 0) != 1 || doc.value("kind", "") != "ivectors")
    throw DataError(path.string() + ": not an i-vector dump");
  std::vector<EpochIvector> series;
  for (const auto& rec : doc.at("records")) {
    EpochIvector e;
    e.key.subject = static_cast<std::uint16_t>(rec.at("subject").get<int>());
    e.key.session = static_cast<std::uint8_t>(rec.at("session").get<int>());
    e.key.block = static_cast<std::uint8_t>(rec.at("block").get<int>());
    e.key.index = rec.at("index").get<std::uint32_t>();
    e.label = label_from_name(rec.at("label").get<std::string>());
    e.w = detail::vector_from_json(rec.at("w"));
    series.push_back(std::move(e));
  }
  if (config_hash) *config_hash = doc.value("config_hash", "");
  return series;
}

}  // namespace cogload
