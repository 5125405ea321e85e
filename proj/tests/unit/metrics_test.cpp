#include <cmath>

#include <gtest/gtest.h>

#include "adlabel/error.hpp"
#include "adlabel/metrics.hpp"
#include "fixtures.hpp"

namespace adlabel {
namespace {

TEST(Auc, HandExamples) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> l{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auc(s, l), 0.75);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, l), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>(4, 0.3), l), 0.5);
}

TEST(Auc, MatchesPairwiseCountWithTies) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 200));
    const int levels = static_cast<int>(uniform_int(rng, 2, 12));
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(uniform_int(rng, 0, levels)) / levels;
      l[i] = bernoulli(rng, 0.4) ? 1 : 0;
    }
    l[0] = 1;
    l[1] = 0;
    EXPECT_NEAR(auc(s, l), testing::brute_force_auc(s, l), 1e-12);
  }
}

TEST(Auc, MonotoneTransformInvariant) {
  Rng rng(3);
  std::vector<double> s(80), t(80);
  std::vector<int> l(80);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = uniform01(rng);
    t[i] = std::exp(5 * s[i]) - 2;
    l[i] = bernoulli(rng, s[i]) ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(auc(s, l), auc(t, l));
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetricError);
}

TEST(Accuracy, ThresholdRule) {
  EXPECT_DOUBLE_EQ(accuracy(std::vector<double>{0.6, 0.4, 0.7}, std::vector<int>{1, 1, 0}), 1.0 / 3);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
  // Ties at the threshold predict positive, so accuracy equals prevalence.
  EXPECT_DOUBLE_EQ(accuracy(std::vector<double>(5, 0.5), std::vector<int>{1, 0, 1, 0, 0}), 0.4);
}

TEST(Accuracy, ComplementLabelsSumToOne) {
  Rng rng(4);
  std::vector<double> s(50);
  std::vector<int> l(50), flipped(50);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = uniform01(rng);
    l[i] = bernoulli(rng, 0.3) ? 1 : 0;
    flipped[i] = 1 - l[i];
  }
  EXPECT_NEAR(accuracy(s, l) + accuracy(s, flipped), 1.0, 1e-15);
}

TEST(Reports, PerfectAndConstantModels) {
  const std::vector<float> labels{1, 0, 1, 0, 0, 0, 1, 1, 0, 0, 1, 0};
  auto r = task_reports(labels, labels);
  ASSERT_EQ(r.size(), 3u);
  for (const auto& t : r) {
    EXPECT_DOUBLE_EQ(t.accuracy, 1.0);
    EXPECT_LE(t.cross_entropy, 1e-6);
    EXPECT_EQ(t.n_positive + t.n_negative, 4u);
  }
  EXPECT_DOUBLE_EQ(*r[0].auc, 1.0);
  const std::vector<float> half(12, 0.5f);
  r = task_reports(half, labels);
  EXPECT_DOUBLE_EQ(r[0].accuracy, 0.5);
  EXPECT_NEAR(r[0].cross_entropy, std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(*r[0].auc, 0.5);
}

TEST(Reports, SingleClassTaskHasNoAuc) {
  const std::vector<float> labels{1, 1, 0, 1, 0, 0};
  const auto r = task_reports(std::vector<float>(6, 0.7f), labels);
  EXPECT_TRUE(r[0].auc.has_value() == false);
  EXPECT_NE(report_to_json(r, "test").find("null"), std::string::npos);
}

TEST(Reports, TextUsesAucAndBracketedAccuracy) {
  TaskReport t;
  t.task = "compliant_label";
  t.auc = 0.9934;
  t.accuracy = 0.971;
  EXPECT_EQ(report_to_text({t}), "compliant_label: 0.993 [97.1%]\n");
}

}  // namespace
}  // namespace adlabel
