#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adlabel/dataset.hpp"
#include "adlabel/model.hpp"

namespace adlabel {

// Mann-Whitney AUC from the rank sum with average ranks for ties, O(n log n).
// labels are 0/1. UndefinedMetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Fraction of entries where (score >= threshold) matches the label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// Mean clamped binary cross-entropy.
double cross_entropy(std::span<const double> probabilities, std::span<const int> labels);

struct TaskReport {
  std::string task;
  std::optional<double> auc;  // absent when the split holds a single class
  double accuracy = 0;
  double cross_entropy = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

// Per-task reports from N x 3 probabilities and labels (row-major).
std::vector<TaskReport> task_reports(std::span<const float> probabilities, std::span<const float> labels);

// Evaluates the model on every image of `data`; DataError when it is empty.
std::vector<TaskReport> evaluate(const MultitaskCnn<float>& model, const Dataset& data);

// "task: AUC [accuracy]" per line, e.g. "compliant_label: 0.993 [97.1%]".
std::string report_to_text(const std::vector<TaskReport>& reports);
std::string report_to_json(const std::vector<TaskReport>& reports, const std::string& split, int indent = 2);

}  // namespace adlabel
