#include "cogload/common.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace cogload {

const char* label_name(Label label) {
  switch (label) {
    case Label::Easy: return "easy";
    case Label::Medium: return "medium";
    case Label::Difficult: return "difficult";
  }
  throw DataError("invalid label value " +
                  std::to_string(static_cast<int>(label)));
}

Label label_from_index(int index) {
  if (index < 0 || index >= kNumClasses)
    throw DataError("label index out of range: " + std::to_string(index));
  return static_cast<Label>(index);
}

Label label_from_name(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "easy") return Label::Easy;
  if (lower == "medium") return Label::Medium;
  if (lower == "difficult") return Label::Difficult;
  throw DataError("unknown label name: " + name);
}

std::string subject_name(int subject_id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "P%02d", subject_id);
  return buf;
}

std::string format_key(const EpochKey& key) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/s%d/b%d/e%u",
                subject_name(key.subject).c_str(),
                static_cast<int>(key.session), static_cast<int>(key.block),
                key.index);
  return buf;
}

}  // namespace cogload
