#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"

namespace cogload {

// One labeled 2-second EEG epoch. Frames are stored frame-major
// (row = frame, column = channel), in microvolts.
struct EpochRecord {
  std::uint16_t subject_id = 0;
  std::uint8_t session_id = 1;
  std::uint8_t block_index = 0;
  Label label = Label::Easy;
  Eigen::MatrixXf frames;

  // Position within (subject, session, block); assigned on load/generation,
  // not serialized.
  std::uint32_t epoch_index = 0;

  EpochKey key() const {
    return EpochKey{subject_id, session_id, block_index, epoch_index};
  }
  int frame_count() const { return static_cast<int>(frames.rows()); }
  int channel_count() const { return static_cast<int>(frames.cols()); }
};

struct EpochDataset {
  std::vector<std::string> channel_names;
  double sample_rate_hz = 250.0;
  std::vector<EpochRecord> records;

  int channel_count() const { return static_cast<int>(channel_names.size()); }

  // Throws DataError on duplicate channel names, channel-count mismatches,
  // or non-positive sample rate.
  void validate() const;

  // Recomputes epoch_index for every record from record order.
  void assign_epoch_indices();
};

// Paper-scale data: 61 channels sampled at 250 Hz, 500-frame epochs.
bool is_paper_shaped(const EpochDataset& dataset);

// --- EPO1 container ------------------------------------------------------
//
// Little-endian binary layout:
//   magic "EPO1", version u32, sample_rate_hz f64, channel_count u32,
//   channel names (u16 byte length + UTF-8 each), record count u64;
//   per record: subject_id u16, session_id u8, block_index u8, label u8,
//   frame_count u32, then frame-major f32 values.

EpochDataset load_epoch_file(const std::filesystem::path& path);
void write_epoch_file(const EpochDataset& dataset,
                      const std::filesystem::path& path);

// CSV import: a JSON manifest names one CSV per recording along with its
// subject/session/block/label; each CSV starts with a header row of channel
// names and is sliced into consecutive non-overlapping epochs of
// `frames_per_epoch` frames (trailing remainder dropped).
EpochDataset import_csv(const std::filesystem::path& manifest_path);

// --- Splits --------------------------------------------------------------

enum class SplitMode { SubjectDependent, SubjectIndependent, HeldOutSubjects };

const char* split_mode_name(SplitMode mode);
SplitMode split_mode_from_name(const std::string& name);

// Empty subject sets mean "all subjects in the dataset".
struct SplitSpec {
  SplitMode mode = SplitMode::SubjectIndependent;
  std::set<int> train_subjects;
  std::set<int> test_subjects;
  std::set<int> train_sessions;
  std::set<int> test_sessions;

  std::string describe() const;
};

// Index lists into dataset.records, sorted by (subject, session, block,
// epoch index).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split make_split(const EpochDataset& dataset, const SplitSpec& spec);

// --- Synthetic data ------------------------------------------------------

// Desk-scale stand-in for the real corpus: three class means separated by
// `class_separation`, plus per-subject and per-(subject, session) additive
// channel offsets and white noise. Block-to-label assignment is a seeded
// permutation per (subject, session), like the pseudo-randomized protocol.
struct SynthConfig {
  std::uint64_t seed = 0;
  int n_subjects = 2;
  int n_sessions = 2;
  int epochs_per_block = 10;
  int n_channels = 8;
  int frames_per_epoch = 500;
  double class_separation = 1.0;
  double subject_offset_scale = 0.0;
  double session_offset_scale = 0.0;
  double noise_scale = 1.0;
  double sample_rate_hz = 250.0;

  void validate() const;
};

EpochDataset synth_generate(const SynthConfig& config);

}  // namespace cogload
