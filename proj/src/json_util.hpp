#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cogload/common.hpp"

namespace cogload::detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

// Nested row arrays.
inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows == 0 ? 0 : rows[0].size();
  Eigen::MatrixXd m(n_rows, n_cols);
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (rows[r].size() != n_cols)
      throw DataError("ragged matrix rows in JSON document");
    for (std::size_t c = 0; c < n_cols; ++c)
      m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

// Flat row-major array.
inline nlohmann::json matrix_to_json_flat(const Eigen::MatrixXd& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

inline Eigen::MatrixXd matrix_from_json_flat(const nlohmann::json& arr,
                                             Eigen::Index rows,
                                             Eigen::Index cols) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw DataError("flat matrix size mismatch in JSON document");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[i++].get<double>();
  return m;
}

inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t seed = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = seed;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

inline std::string fnv1a_hex(const std::string& text) {
  return hash_hex(fnv1a(text.data(), text.size()));
}

inline nlohmann::json load_json_file(const std::filesystem::path& path,
                                     const char* what) {
  std::ifstream file(path);
  if (!file)
    throw DataError(std::string("cannot open ") + what + ": " + path.string());
  try {
    return nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string(what) + " parse error in " + path.string() +
                    ": " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& doc,
                            const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw DataError("cannot write: " + path.string());
  file << doc.dump(2) << "\n";
  if (!file) throw DataError("write failed: " + path.string());
}

}  // namespace cogload::detail
