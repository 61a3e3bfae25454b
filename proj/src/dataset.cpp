#include "cogload/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cogload {

namespace {

constexpr char kMagic[4] = {'E', 'P', 'O', '1'};
constexpr std::uint32_t kFormatVersion = 1;

// Little-endian primitives. The build targets little-endian hosts; the
// explicit byte assembly keeps the file layout independent of struct
// padding.
template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(const char* data, std::size_t size, std::string name)
      : data_(data), size_(size), name_(std::move(name)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > size_)
      throw DataError(name_ + ": truncated payload at byte " +
                      std::to_string(pos_));
    T value;
    std::memcpy(&value, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    if (pos_ + n > size_)
      throw DataError(name_ + ": truncated payload at byte " +
                      std::to_string(pos_));
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }

  void get_floats(float* dst, std::size_t count) {
    const std::size_t bytes = count * sizeof(float);
    if (pos_ + bytes > size_)
      throw DataError(name_ + ": truncated payload at byte " +
                      std::to_string(pos_));
    std::memcpy(dst, data_ + pos_, bytes);
    pos_ += bytes;
  }

  bool at_end() const { return pos_ == size_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string name_;
};

using RowMajorMatrixXf =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

void EpochDataset::validate() const {
  if (!(sample_rate_hz > 0))
    throw DataError("sample_rate_hz must be positive");
  std::unordered_set<std::string> seen;
  for (const auto& name : channel_names) {
    if (name.empty()) throw DataError("empty channel name");
    if (!seen.insert(name).second)
      throw DataError("duplicate channel name: " + name);
  }
  const int channels = channel_count();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EpochRecord& r = records[i];
    if (r.channel_count() != channels)
      throw DataError("record " + std::to_string(i) + " has " +
                      std::to_string(r.channel_count()) +
                      " channels, dataset has " + std::to_string(channels));
    if (r.frame_count() <= 0)
      throw DataError("record " + std::to_string(i) + " has no frames");
    if (static_cast<int>(r.label) >= kNumClasses)
      throw DataError("record " + std::to_string(i) + " has invalid label");
  }
}

void EpochDataset::assign_epoch_indices() {
  std::map<std::tuple<int, int, int>, std::uint32_t> counters;
  for (EpochRecord& r : records) {
    auto& counter = counters[{r.subject_id, r.session_id, r.block_index}];
    r.epoch_index = counter++;
  }
}

bool is_paper_shaped(const EpochDataset& dataset) {
  if (dataset.channel_count() != 61 || dataset.sample_rate_hz != 250.0)
    return false;
  return std::all_of(dataset.records.begin(), dataset.records.end(),
                     [](const EpochRecord& r) { return r.frame_count() == 500; });
}

void write_epoch_file(const EpochDataset& dataset,
                      const std::filesystem::path& path) {
  dataset.validate();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<double>(out, dataset.sample_rate_hz);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.channel_count()));
  for (const auto& name : dataset.channel_names) {
    if (name.size() > 0xFFFF)
      throw DataError("channel name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.append(name);
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(dataset.records.size()));

  std::vector<float> buf;
  for (const EpochRecord& r : dataset.records) {
    put<std::uint16_t>(out, r.subject_id);
    put<std::uint8_t>(out, r.session_id);
    put<std::uint8_t>(out, r.block_index);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.label));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.frame_count()));
    buf.resize(static_cast<std::size_t>(r.frames.size()));
    Eigen::Map<RowMajorMatrixXf>(buf.data(), r.frames.rows(),
                                 r.frames.cols()) = r.frames;
    out.append(reinterpret_cast<const char*>(buf.data()),
               buf.size() * sizeof(float));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("write failed: " + path.string());
}

EpochDataset load_epoch_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open: " + path.string());
  std::stringstream ss;
  ss << file.rdbuf();
  const std::string bytes = ss.str();

  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError(path.string() + ": not an EPO1 file (bad magic)");

  Reader reader(bytes.data() + sizeof(kMagic), bytes.size() - sizeof(kMagic),
                path.string());
  const auto version = reader.get<std::uint32_t>();
  if (version != kFormatVersion)
    throw DataError(path.string() + ": unsupported EPO1 version " +
                    std::to_string(version));

  EpochDataset dataset;
  dataset.sample_rate_hz = reader.get<double>();
  const auto channel_count = reader.get<std::uint32_t>();
  dataset.channel_names.reserve(channel_count);
  for (std::uint32_t c = 0; c < channel_count; ++c) {
    const auto len = reader.get<std::uint16_t>();
    dataset.channel_names.push_back(reader.get_string(len));
  }
  const auto record_count = reader.get<std::uint64_t>();
  dataset.records.reserve(record_count);
  for (std::uint64_t i = 0; i < record_count; ++i) {
    EpochRecord r;
    r.subject_id = reader.get<std::uint16_t>();
    r.session_id = reader.get<std::uint8_t>();
    r.block_index = reader.get<std::uint8_t>();
    const auto label_byte = reader.get<std::uint8_t>();
    if (label_byte >= kNumClasses)
      throw DataError(path.string() + ": record " + std::to_string(i) +
                      " has invalid label byte " + std::to_string(label_byte));
    r.label = static_cast<Label>(label_byte);
    const auto frame_count = reader.get<std::uint32_t>();
    RowMajorMatrixXf frames(frame_count, channel_count);
    reader.get_floats(frames.data(),
                      static_cast<std::size_t>(frame_count) * channel_count);
    r.frames = frames;
    dataset.records.push_back(std::move(r));
  }
  if (!reader.at_end())
    throw DataError(path.string() + ": trailing bytes after last record");

  dataset.validate();
  dataset.assign_epoch_indices();
  return dataset;
}

// --- CSV import ------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

EpochDataset import_csv(const std::filesystem::path& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("cannot open manifest: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest parse error: " + std::string(e.what()));
  }

  EpochDataset dataset;
  dataset.sample_rate_hz = manifest.value("sample_rate_hz", 250.0);
  const int frames_per_epoch = manifest.value("frames_per_epoch", 500);
  if (frames_per_epoch <= 0)
    throw DataError("manifest frames_per_epoch must be positive");
  if (!manifest.contains("files") || !manifest["files"].is_array())
    throw DataError("manifest missing \"files\" array");

  const auto base_dir = manifest_path.parent_path();
  for (const auto& entry : manifest["files"]) {
    const std::filesystem::path csv_path =
        base_dir / entry.at("path").get<std::string>();
    EpochRecord proto;
    proto.subject_id =
        static_cast<std::uint16_t>(entry.at("subject").get<int>());
    proto.session_id =
        static_cast<std::uint8_t>(entry.at("session").get<int>());
    proto.block_index = static_cast<std::uint8_t>(entry.at("block").get<int>());
    proto.label = label_from_name(entry.at("label").get<std::string>());

    std::ifstream csv(csv_path);
    if (!csv) throw DataError("cannot open CSV: " + csv_path.string());
    std::string line;
    if (!std::getline(csv, line))
      throw DataError("empty CSV: " + csv_path.string());
    const auto header = split_line(line);
    if (dataset.channel_names.empty()) {
      dataset.channel_names = header;
    } else if (dataset.channel_names != header) {
      throw DataError("CSV header mismatch in " + csv_path.string());
    }

    std::vector<float> values;
    std::size_t n_rows = 0;
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      const auto fields = split_line(line);
      if (fields.size() != header.size())
        throw DataError(csv_path.string() + ": row " +
                        std::to_string(n_rows + 2) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
      for (const auto& f : fields) {
        try {
          values.push_back(std::stof(f));
        } catch (const std::exception&) {
          throw DataError(csv_path.string() + ": bad numeric field \"" + f +
                          "\"");
        }
      }
      ++n_rows;
    }

    const std::size_t n_epochs = n_rows / frames_per_epoch;
    const int channels = static_cast<int>(header.size());
    for (std::size_t e = 0; e < n_epochs; ++e) {
      EpochRecord r = proto;
      r.frames = Eigen::Map<const RowMajorMatrixXf>(
          values.data() + e * frames_per_epoch * channels, frames_per_epoch,
          channels);
      dataset.records.push_back(std::move(r));
    }
  }

  dataset.validate();
  dataset.assign_epoch_indices();
  return dataset;
}

// --- Splits ------------------------------------------------------------------

const char* split_mode_name(SplitMode mode) {
  switch (mode) {
    case SplitMode::SubjectDependent: return "subject_dependent";
    case SplitMode::SubjectIndependent: return "subject_independent";
    case SplitMode::HeldOutSubjects: return "held_out_subjects";
  }
  throw ConfigError("invalid split mode");
}

SplitMode split_mode_from_name(const std::string& name) {
  if (name == "subject_dependent") return SplitMode::SubjectDependent;
  if (name == "subject_independent") return SplitMode::SubjectIndependent;
  if (name == "held_out_subjects") return SplitMode::HeldOutSubjects;
  throw ConfigError("unknown split mode: " + name);
}

namespace {

std::string join_ints(const std::set<int>& values) {
  std::string out = "{";
  bool first = true;
  for (int v : values) {
    if (!first) out += ",";
    out += std::to_string(v);
    first = false;
  }
  return out + "}";
}

}  // namespace

std::string SplitSpec::describe() const {
  std::string out = split_mode_name(mode);
  out += " train subjects ";
  out += train_subjects.empty() ? "{all}" : join_ints(train_subjects);
  out += " sessions " + join_ints(train_sessions);
  out += " | test subjects ";
  out += test_subjects.empty() ? "{all}" : join_ints(test_subjects);
  out += " sessions " + join_ints(test_sessions);
  return out;
}

Split make_split(const EpochDataset& dataset, const SplitSpec& spec) {
  std::set<int> subjects;
  std::set<int> sessions;
  for (const EpochRecord& r : dataset.records) {
    subjects.insert(r.subject_id);
    sessions.insert(r.session_id);
  }
  auto check_exists = [&](const std::set<int>& wanted, const std::set<int>& have,
                          const char* what) {
    for (int v : wanted)
      if (!have.count(v))
        throw ConfigError(std::string("split references ") + what + " " +
                          std::to_string(v) + " absent from dataset");
  };
  check_exists(spec.train_subjects, subjects, "subject");
  check_exists(spec.test_subjects, subjects, "subject");
  check_exists(spec.train_sessions, sessions, "session");
  check_exists(spec.test_sessions, sessions, "session");

  const std::set<int>& train_subjects =
      spec.train_subjects.empty() ? subjects : spec.train_subjects;
  const std::set<int>& test_subjects =
      spec.test_subjects.empty() ? subjects : spec.test_subjects;

  if (spec.mode == SplitMode::HeldOutSubjects) {
    for (int s : train_subjects)
      if (test_subjects.count(s))
        throw ConfigError("held_out_subjects: subject " + std::to_string(s) +
                          " appears in both train and test");
  }
  if (spec.mode == SplitMode::SubjectDependent &&
      train_subjects != test_subjects)
    throw ConfigError(
        "subject_dependent: train and test subject sets must match");

  // (subject, session) pairs must not appear on both sides.
  for (int s : train_subjects) {
    if (!test_subjects.count(s)) continue;
    for (int sess : spec.train_sessions)
      if (spec.test_sessions.count(sess))
        throw ConfigError("subject " + std::to_string(s) + " session " +
                          std::to_string(sess) +
                          " selected for both train and test");
  }

  Split split;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const EpochRecord& r = dataset.records[i];
    if (train_subjects.count(r.subject_id) &&
        spec.train_sessions.count(r.session_id))
      split.train.push_back(i);
    if (test_subjects.count(r.subject_id) &&
        spec.test_sessions.count(r.session_id))
      split.test.push_back(i);
  }

  auto by_key = [&dataset](std::size_t a, std::size_t b) {
    return dataset.records[a].key() < dataset.records[b].key();
  };
  std::sort(split.train.begin(), split.train.end(), by_key);
  std::sort(split.test.begin(), split.test.end(), by_key);

  if (split.train.empty()) throw ConfigError("split selects no training epochs");
  if (split.test.empty()) throw ConfigError("split selects no test epochs");
  return split;
}

// --- Synthetic data ----------------------------------------------------------

void SynthConfig::validate() const {
  if (n_subjects <= 0 || n_sessions <= 0 || epochs_per_block <= 0 ||
      n_channels <= 0 || frames_per_epoch <= 0)
    throw ConfigError("synth: counts must be positive");
  if (!(class_separation >= 0) || !(subject_offset_scale >= 0) ||
      !(session_offset_scale >= 0) || !(noise_scale >= 0))
    throw ConfigError("synth: scales must be finite and non-negative");
  if (!(sample_rate_hz > 0)) throw ConfigError("synth: bad sample rate");
}

namespace {

// Three unit-norm class directions. For >= 3 channels: Gram-Schmidt over
// seeded Gaussians, giving pairwise distance sqrt(2); lower dimensions use
// fixed simplex layouts.
Eigen::MatrixXd class_directions(int n_channels, std::mt19937_64& rng) {
  Eigen::MatrixXd dirs(kNumClasses, n_channels);
  if (n_channels == 1) {
    dirs << -1.0, 0.0, 1.0;
    return dirs;
  }
  if (n_channels == 2) {
    const double s = std::sqrt(3.0) / 2.0;
    dirs << 1.0, 0.0, -0.5, s, -0.5, -s;
    return dirs;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < kNumClasses; ++k) {
    Eigen::VectorXd v(n_channels);
    for (int d = 0; d < n_channels; ++d) v[d] = normal(rng);
    for (int j = 0; j < k; ++j)
      v -= dirs.row(j).dot(v) * dirs.row(j).transpose();
    const double norm = v.norm();
    if (norm < 1e-9) {
      // Degenerate draw; fall back to a coordinate axis.
      v.setZero();
      v[k % n_channels] = 1.0;
    } else {
      v /= norm;
    }
    dirs.row(k) = v.transpose();
  }
  return dirs;
}

std::string synth_channel_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "CH%02d", index + 1);
  return buf;
}

}  // namespace

EpochDataset synth_generate(const SynthConfig& config) {
  config.validate();

  EpochDataset dataset;
  dataset.sample_rate_hz = config.sample_rate_hz;
  dataset.channel_names.reserve(config.n_channels);
  for (int c = 0; c < config.n_channels; ++c)
    dataset.channel_names.push_back(synth_channel_name(c));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::MatrixXd class_means =
      config.class_separation * class_directions(config.n_channels, rng);

  std::vector<Eigen::VectorXd> subject_offset(config.n_subjects);
  for (int s = 0; s < config.n_subjects; ++s) {
    subject_offset[s] = Eigen::VectorXd(config.n_channels);
    for (int d = 0; d < config.n_channels; ++d)
      subject_offset[s][d] = config.subject_offset_scale * normal(rng);
  }

  dataset.records.reserve(static_cast<std::size_t>(config.n_subjects) *
                          config.n_sessions * kNumClasses *
                          config.epochs_per_block);

  for (int s = 0; s < config.n_subjects; ++s) {
    for (int sess = 0; sess < config.n_sessions; ++sess) {
      Eigen::VectorXd session_offset(config.n_channels);
      for (int d = 0; d < config.n_channels; ++d)
        session_offset[d] = config.session_offset_scale * normal(rng);

      // Pseudo-randomized block order: one block per class, permuted.
      std::array<int, kNumClasses> block_class = {0, 1, 2};
      std::shuffle(block_class.begin(), block_class.end(), rng);

      const Eigen::VectorXd base = subject_offset[s] + session_offset;
      for (int block = 0; block < kNumClasses; ++block) {
        const Label label = label_from_index(block_class[block]);
        const Eigen::VectorXd mean =
            base + class_means.row(block_class[block]).transpose();
        for (int e = 0; e < config.epochs_per_block; ++e) {
          EpochRecord r;
          r.subject_id = static_cast<std::uint16_t>(s + 1);
          r.session_id = static_cast<std::uint8_t>(sess + 1);
          r.block_index = static_cast<std::uint8_t>(block);
          r.label = label;
          r.frames.resize(config.frames_per_epoch, config.n_channels);
          for (int t = 0; t < config.frames_per_epoch; ++t)
            for (int d = 0; d < config.n_channels; ++d)
              r.frames(t, d) = static_cast<float>(
                  mean[d] + config.noise_scale * normal(rng));
          dataset.records.push_back(std::move(r));
        }
      }
    }
  }

  dataset.assign_epoch_indices();
  return dataset;
}

}  // namespace cogload
