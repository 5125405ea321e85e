#include "adlabel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"
#include "adlabel/ops.hpp"

namespace adlabel {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("scores and labels differ in length (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC is undefined without both positive and negative labels");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1) / 2) / (np * static_cast<double>(n_neg));
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores.size(), labels.size());
  if (scores.empty()) throw DataError("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if ((scores[i] >= threshold ? 1 : 0) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double cross_entropy(std::span<const double> probabilities, std::span<const int> labels) {
  check_lengths(probabilities.size(), labels.size());
  if (probabilities.empty()) throw DataError("cross-entropy of an empty set");
  double sum = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(probabilities.size());
}

std::vector<TaskReport> task_reports(std::span<const float> probabilities, std::span<const float> labels) {
  check_lengths(probabilities.size(), labels.size());
  const std::size_t n = probabilities.size() / kTaskCount;
  if (n == 0) throw DataError("cannot evaluate an empty split");
  std::vector<TaskReport> out;
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = probabilities[i * kTaskCount + t];
      y[i] = labels[i * kTaskCount + t] > 0.5f ? 1 : 0;
    }
    TaskReport r;
    r.task = kTaskNames[t];
    r.n_positive = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    r.n_negative = n - r.n_positive;
    try {
      r.auc = auc(s, y);
    } catch (const UndefinedMetricError&) {
      r.auc.reset();
    }
    r.accuracy = accuracy(s, y);
    r.cross_entropy = cross_entropy(s, y);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TaskReport> evaluate(const MultitaskCnn<float>& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("cannot evaluate an empty split");
  const auto probs = predict_dataset(model, data);
  return task_reports(probs, data.labels);
}

std::string report_to_text(const std::vector<TaskReport>& reports) {
  std::string out;
  char buf[160];
  for (const auto& r : reports) {
    if (r.auc) {
      std::snprintf(buf, sizeof buf, "%s: %.3f [%.1f%%]\n", r.task.c_str(), *r.auc, 100.0 * r.accuracy);
    } else {
      std::snprintf(buf, sizeof buf, "%s: n/a [%.1f%%]\n", r.task.c_str(), 100.0 * r.accuracy);
    }
    out += buf;
  }
  return out;
}

std::string report_to_json(const std::vector<TaskReport>& reports, const std::string& split, int indent) {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json t;
    t["task"] = r.task;
    t["auc"] = r.auc ? nlohmann::ordered_json(*r.auc) : nlohmann::ordered_json(nullptr);
    t["accuracy"] = r.accuracy;
    t["cross_entropy"] = r.cross_entropy;
    t["n_positive"] = r.n_positive;
    t["n_negative"] = r.n_negative;
    j["tasks"].push_back(std::move(t));
  }
  return j.dump(indent);
}

}  // namespace adlabel
