#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"

namespace cogload {

struct LabeledEpoch {
  EpochKey key;
  Label label = Label::Easy;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  std::map<int, double> per_subject;     // subject id -> accuracy
  std::map<int, int> per_subject_count;  // subject id -> epoch count
  Eigen::Matrix3i confusion = Eigen::Matrix3i::Zero();  // rows truth, cols prediction
  int n_epochs = 0;
  std::string split_description;
};

// Exact-match accuracy overall and per subject. Both sides must cover the
// same epoch identities; a mismatch raises DataError listing missing/extra
// keys.
EvalReport evaluate(const std::vector<LabeledEpoch>& predictions,
                    const std::vector<LabeledEpoch>& truth);

enum class ReportFormat { Text, Csv, Json };

ReportFormat report_format_from_name(const std::string& name);

// Deterministic, diff-friendly rendering; accuracies shown to 2 decimals
// (round half to even), rows ordered Overall then subjects ascending.
std::string render_report(const EvalReport& report, ReportFormat format);

// Accuracy rounded half-to-even at two decimals, as printed in reports.
double round_accuracy(double accuracy);

}  // namespace cogload
