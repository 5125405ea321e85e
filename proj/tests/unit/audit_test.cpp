#include <gtest/gtest.h>

#include "adlabel/audit.hpp"
#include "adlabel/error.hpp"
#include "adlabel/synth.hpp"
#include "fixtures.hpp"

namespace adlabel {
namespace {

Manifest planned_manifest(const CorpusConfig& c) {
  Manifest m;
  for (auto& [r, spec] : plan_corpus(c)) m.records.push_back(r);
  return m;
}

TEST(Audit, GroundTruthReproducesLabels) {
  CorpusConfig c;
  c.n_posts = 400;
  const auto m = planned_manifest(c);
  const auto report = audit_corpus(m, WarningSource::kGroundTruth, {}, {}, 2);
  EXPECT_EQ(report.summary.records, m.records.size());
  EXPECT_EQ(report.summary.agreements, m.records.size());
  EXPECT_EQ(report.summary.errors, 0u);
  EXPECT_EQ(report.summary.fully_compliant + report.summary.non_compliant + report.summary.absent, m.records.size());
}

TEST(Audit, AbsentOnlyCorpus) {
  CorpusConfig c;
  c.n_posts = 50;
  c.mix.fully_compliant = c.mix.noncompliant_small = c.mix.noncompliant_low = c.mix.noncompliant_tiny_font = 0;
  c.mix.absent = 1;
  const auto report = audit_corpus(planned_manifest(c), WarningSource::kGroundTruth);
  EXPECT_EQ(report.summary.absent, report.summary.records);
}

TEST(Audit, DetectedModeContinuesPastMissingFiles) {
  testing::TempDir dir("audit");
  CorpusConfig c;
  c.n_posts = 6;
  c.extra_images_mean = 0;
  c.image.width = c.image.height = 256;
  auto m = generate_corpus(c, dir.path(), 2);
  std::filesystem::remove(m.image_file(m.records[2]));
  const auto report = audit_corpus(m, WarningSource::kDetected, {}, {}, 2);
  EXPECT_EQ(report.summary.errors, 1u);
  EXPECT_FALSE(report.entries[2].error.empty());
  EXPECT_FALSE(report.entries[2].verdict);
  EXPECT_TRUE(report.entries[3].verdict);
}

TEST(Audit, ParallelMatchesSerial) {
  CorpusConfig c;
  c.n_posts = 120;
  const auto m = planned_manifest(c);
  const auto a = audit_corpus(m, WarningSource::kGroundTruth, {}, {}, 1);
  const auto b = audit_corpus(m, WarningSource::kGroundTruth, {}, {}, 4);
  EXPECT_EQ(audit_to_json(m, a), audit_to_json(m, b));
  EXPECT_EQ(audit_summary_table(a), audit_summary_table(b));
}

TEST(Audit, SourceNames) {
  EXPECT_EQ(parse_source(source_name(WarningSource::kDetected)), WarningSource::kDetected);
  EXPECT_EQ(parse_source("ground_truth"), WarningSource::kGroundTruth);
  EXPECT_THROW(parse_source("guess"), Error);
}

}  // namespace
}  // namespace adlabel
