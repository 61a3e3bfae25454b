#include "cogload/eval.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cogload {

EvalReport evaluate(const std::vector<LabeledEpoch>& predictions,
                    const std::vector<LabeledEpoch>& truth) {
  std::map<EpochKey, Label> predicted;
  for (const LabeledEpoch& p : predictions) {
    if (!predicted.emplace(p.key, p.label).second)
      throw DataError("evaluate: duplicate prediction for epoch " +
                      format_key(p.key));
  }

  // Identity check with a bounded listing of offenders.
  std::string missing, extra;
  int n_missing = 0, n_extra = 0;
  std::map<EpochKey, Label> truth_map;
  for (const LabeledEpoch& t : truth) {
    if (!truth_map.emplace(t.key, t.label).second)
      throw DataError("evaluate: duplicate truth entry for epoch " +
                      format_key(t.key));
    if (!predicted.count(t.key)) {
      if (++n_missing <= 5) missing += " " + format_key(t.key);
    }
  }
  for (const auto& [key, label] : predicted) {
    if (!truth_map.count(key)) {
      if (++n_extra <= 5) extra += " " + format_key(key);
    }
  }
  if (n_missing > 0 || n_extra > 0)
    throw DataError("evaluate: epoch identity mismatch; " +
                    std::to_string(n_missing) + " missing (" + missing +
                    " ...), " + std::to_string(n_extra) + " extra (" + extra +
                    " ...)");

  EvalReport report;
  report.n_epochs = static_cast<int>(truth.size());
  std::map<int, int> correct_per_subject;
  int correct = 0;
  for (const auto& [key, true_label] : truth_map) {
    const Label guess = predicted.at(key);
    report.confusion(static_cast<int>(true_label),
                     static_cast<int>(guess)) += 1;
    report.per_subject_count[key.subject] += 1;
    if (guess == true_label) {
      ++correct;
      correct_per_subject[key.subject] += 1;
    }
  }
  report.overall_accuracy =
      report.n_epochs == 0
          ? 0.0
          : static_cast<double>(correct) / static_cast<double>(report.n_epochs);
  for (const auto& [subject, count] : report.per_subject_count)
    report.per_subject[subject] =
        static_cast<double>(correct_per_subject[subject]) /
        static_cast<double>(count);
  return report;
}

double round_accuracy(double accuracy) {
  // nearbyint under the default rounding mode is round-half-to-even.
  return std::nearbyint(accuracy * 100.0) / 100.0;
}

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "text" || name == "txt") return ReportFormat::Text;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw ConfigError("unknown report format: " + name);
}

namespace {

std::string fmt2(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", round_accuracy(value));
  return buf;
}

std::string render_text(const EvalReport& report) {
  std::ostringstream out;
  out << "# cogload evaluation report\n";
  if (!report.split_description.empty())
    out << "# split: " << report.split_description << "\n";
  out << "# epochs: " << report.n_epochs << "\n";
  out << "Subject    Accuracy  Epochs\n";
  out << "Overall    " << fmt2(report.overall_accuracy) << "      "
      << report.n_epochs << "\n";
  for (const auto& [subject, acc] : report.per_subject)
    out << subject_name(subject) << "        " << fmt2(acc) << "      "
        << report.per_subject_count.at(subject) << "\n";
  out << "# confusion matrix (rows = truth, cols = predicted; "
         "easy/medium/difficult)\n";
  for (int r = 0; r < kNumClasses; ++r) {
    out << label_name(label_from_index(r));
    for (int c = 0; c < kNumClasses; ++c) out << " " << report.confusion(r, c);
    out << "\n";
  }
  return out.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "row,subject,accuracy,epochs\n";
  out << "accuracy,Overall," << fmt2(report.overall_accuracy) << ","
      << report.n_epochs << "\n";
  for (const auto& [subject, acc] : report.per_subject)
    out << "accuracy," << subject_name(subject) << "," << fmt2(acc) << ","
        << report.per_subject_count.at(subject) << "\n";
  for (int r = 0; r < kNumClasses; ++r) {
    out << "confusion," << label_name(label_from_index(r));
    for (int c = 0; c < kNumClasses; ++c) out << "," << report.confusion(r, c);
    out << "\n";
  }
  return out.str();
}

std::string render_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["split"] = report.split_description;
  doc["n_epochs"] = report.n_epochs;
  doc["overall_accuracy"] = round_accuracy(report.overall_accuracy);
  nlohmann::json per_subject = nlohmann::json::object();
  for (const auto& [subject, acc] : report.per_subject) {
    nlohmann::json entry;
    entry["accuracy"] = round_accuracy(acc);
    entry["epochs"] = report.per_subject_count.at(subject);
    per_subject[subject_name(subject)] = std::move(entry);
  }
  doc["per_subject"] = std::move(per_subject);
  nlohmann::json confusion = nlohmann::json::array();
  for (int r = 0; r < kNumClasses; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < kNumClasses; ++c) row.push_back(report.confusion(r, c));
    confusion.push_back(std::move(row));
  }
  doc["confusion"] = std::move(confusion);
  return doc.dump(2) + "\n";
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Text: return render_text(report);
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Json: return render_json(report);
  }
  throw ConfigError("invalid report format");
}

}  // namespace cogload
