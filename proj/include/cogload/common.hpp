#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cogload {

// Error taxonomy, mapped to CLI exit codes (config 2, data 3, numerical 4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The three MATB-II workload levels. The integer values are the wire
// encoding (EPO1 files, JSON dumps, confusion-matrix axes) and must not
// change.
enum class Label : std::uint8_t { Easy = 0, Medium = 1, Difficult = 2 };

inline constexpr int kNumClasses = 3;

const char* label_name(Label label);
Label label_from_index(int index);
Label label_from_name(const std::string& name);

// Identity of one epoch within a dataset. `index` is the position of the
// epoch inside its (subject, session, block), assigned in record order.
struct EpochKey {
  std::uint16_t subject = 0;
  std::uint8_t session = 0;
  std::uint8_t block = 0;
  std::uint32_t index = 0;

  auto operator<=>(const EpochKey&) const = default;
};

// "P01".."P15" style subject names used in report tables.
std::string subject_name(int subject_id);

std::string format_key(const EpochKey& key);

}  // namespace cogload
