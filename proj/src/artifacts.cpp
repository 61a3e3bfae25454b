#include "artifacts.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace cogload::detail {

namespace {

using RowMajorMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_matrix(std::string& out, const Eigen::MatrixXd& m) {
  RowMajorMatrixXd row_major = m;
  out.append(reinterpret_cast<const char*>(row_major.data()),
             sizeof(double) * row_major.size());
}

void put_hash(std::string& out, const std::string& hash) {
  std::string padded = hash;
  padded.resize(16, '0');
  out.append(padded.data(), 16);
}

class Reader {
 public:
  Reader(std::string bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Eigen::MatrixXd get_matrix(Eigen::Index rows, Eigen::Index cols) {
    need(sizeof(double) * rows * cols);
    Eigen::MatrixXd m = Eigen::Map<const RowMajorMatrixXd>(
        reinterpret_cast<const double*>(bytes_.data() + pos_), rows, cols);
    pos_ += sizeof(double) * rows * cols;
    return m;
  }

  void expect_end() const {
    if (pos_ != bytes_.size())
      throw DataError(name_ + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size())
      throw DataError(name_ + ": truncated at byte " + std::to_string(pos_));
  }

  std::string bytes_;
  std::size_t pos_ = 0;
  std::string name_;
};

Reader open_reader(const std::filesystem::path& path, const char* magic) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open: " + path.string());
  std::stringstream ss;
  ss << file.rdbuf();
  std::string bytes = ss.str();
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0)
    throw DataError(path.string() + ": bad magic, expected " +
                    std::string(magic, 4));
  bytes.erase(0, 4);
  return Reader(std::move(bytes), path.string());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open for writing: " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw DataError("write failed: " + path.string());
}

void put_key(std::string& out, const EpochKey& key, Label label) {
  put<std::uint16_t>(out, key.subject);
  put<std::uint8_t>(out, key.session);
  put<std::uint8_t>(out, key.block);
  put<std::uint32_t>(out, key.index);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(label));
}

std::pair<EpochKey, Label> get_key(Reader& reader) {
  EpochKey key;
  key.subject = reader.get<std::uint16_t>();
  key.session = reader.get<std::uint8_t>();
  key.block = reader.get<std::uint8_t>();
  key.index = reader.get<std::uint32_t>();
  const auto label_byte = reader.get<std::uint8_t>();
  if (label_byte >= kNumClasses)
    throw DataError("invalid label byte in artifact");
  return {key, static_cast<Label>(label_byte)};
}

}  // namespace

void save_features(const FeatureSet& set, const std::filesystem::path& path,
                   const std::string& config_hash) {
  std::string out("FEA1", 4);
  put<std::uint32_t>(out, 1);
  put_hash(out, config_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
  put<std::uint64_t>(out, set.epochs.size());
  for (const FeatureEpoch& e : set.epochs) {
    put_key(out, e.key, e.label);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.values.rows()));
    put_matrix(out, e.values);
  }
  write_file(path, out);
}

FeatureSet load_features(const std::filesystem::path& path,
                         std::string* config_hash) {
  Reader reader = open_reader(path, "FEA1");
  if (reader.get<std::uint32_t>() != 1)
    throw DataError(path.string() + ": unsupported FEA1 version");
  const std::string hash = reader.get_bytes(16);
  if (config_hash) *config_hash = hash;
  FeatureSet set;
  set.dim = static_cast<int>(reader.get<std::uint32_t>());
  const auto count = reader.get<std::uint64_t>();
  set.epochs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    FeatureEpoch e;
    std::tie(e.key, e.label) = get_key(reader);
    const auto frames = reader.get<std::uint32_t>();
    e.values = reader.get_matrix(frames, set.dim);
    set.epochs.push_back(std::move(e));
  }
  reader.expect_end();
  return set;
}

void save_stats(const StatsSet& set, const std::filesystem::path& path,
                const std::string& config_hash) {
  std::string out("BWS1", 4);
  put<std::uint32_t>(out, 1);
  put_hash(out, config_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.components));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
  put<std::uint64_t>(out, set.epochs.size());
  for (const StatsEpoch& e : set.epochs) {
    put_key(out, e.key, e.label);
    out.append(reinterpret_cast<const char*>(e.stats.zeroth.data()),
               sizeof(double) * e.stats.zeroth.size());
    put_matrix(out, e.stats.first_centered);
  }
  write_file(path, out);
}

StatsSet load_stats(const std::filesystem::path& path,
                    std::string* config_hash) {
  Reader reader = open_reader(path, "BWS1");
  if (reader.get<std::uint32_t>() != 1)
    throw DataError(path.string() + ": unsupported BWS1 version");
  const std::string hash = reader.get_bytes(16);
  if (config_hash) *config_hash = hash;
  StatsSet set;
  set.components = static_cast<int>(reader.get<std::uint32_t>());
  set.dim = static_cast<int>(reader.get<std::uint32_t>());
  const auto count = reader.get<std::uint64_t>();
  set.epochs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    StatsEpoch e;
    std::tie(e.key, e.label) = get_key(reader);
    e.stats.zeroth = reader.get_matrix(set.components, 1);
    e.stats.first_centered = reader.get_matrix(set.components, set.dim);
    set.epochs.push_back(std::move(e));
  }
  reader.expect_end();
  return set;
}

}  // namespace cogload::detail
