#include <fstream>

#include <gtest/gtest.h>

#include "adlabel/dataset.hpp"
#include "adlabel/error.hpp"
#include "adlabel/manifest.hpp"
#include "adlabel/synth.hpp"
#include "fixtures.hpp"

namespace adlabel {
namespace {

ManifestRecord sample_record() {
  ManifestRecord r;
  r.post_id = "p0007";
  r.image_path = "images/p0007_0.ppm";
  r.width = r.height = 64;
  r.scenario = Scenario::kNoncompliantLow;
  r.labels = labels_for(r.scenario, true);
  r.warning_geometry = WarningGeometry{{0, 30, 64, 16}, 3};
  r.split = Split::kVal;
  return r;
}

TEST(Labels, ScenarioToLabels) {
  EXPECT_EQ(labels_for(Scenario::kFullyCompliant, false), (Labels{0, 1, 0}));
  EXPECT_EQ(labels_for(Scenario::kNoncompliantTinyFont, true), (Labels{1, 0, 1}));
  EXPECT_EQ(labels_for(Scenario::kAbsent, true), (Labels{1, 0, 0}));
  EXPECT_EQ(status_from_labels(Labels{1, 0, 1}), ComplianceStatus::kNonCompliant);
  EXPECT_EQ(status_from_labels(Labels{0, 0, 0}), ComplianceStatus::kAbsent);
}

TEST(Labels, NamesRoundTrip) {
  for (Scenario s : kAllScenarios) EXPECT_EQ(parse_scenario(scenario_name(s)), s);
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) EXPECT_EQ(parse_split(split_name(s)), s);
  EXPECT_THROW(parse_split("holdout"), Error);
}

TEST(Manifest, JsonLineRoundTrip) {
  const auto r = sample_record();
  EXPECT_EQ(record_from_json_line(record_to_json_line(r)), r);
  auto bare = r;
  bare.warning_geometry.reset();
  bare.split.reset();
  bare.scenario = Scenario::kAbsent;
  bare.labels = labels_for(Scenario::kAbsent, true);
  EXPECT_EQ(record_from_json_line(record_to_json_line(bare)), bare);
}

TEST(Manifest, MalformedLineNamesFileAndLine) {
  testing::TempDir dir("manifest");
  const auto path = dir.path() / kManifestFile;
  {
    std::ofstream f(path);
    f << record_to_json_line(sample_record()) << "\n{\"post_id\": 3}\n";
  }
  try {
    read_manifest(path);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(path.string()), std::string::npos) << msg;
    EXPECT_NE(msg.find('2'), std::string::npos) << msg;
  }
  EXPECT_THROW(read_manifest(dir.path() / "missing.jsonl"), DataError);
}

TEST(Manifest, FileRoundTripAndSelect) {
  testing::TempDir dir("manifest");
  auto a = sample_record(), b = sample_record();
  b.post_id = "p0008";
  b.split = Split::kTrain;
  write_manifest(dir.path() / kManifestFile, {a, b});
  const auto m = read_manifest(dir.path() / kManifestFile);
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0], a);
  EXPECT_EQ(m.select(Split::kTrain).size(), 1u);
  EXPECT_EQ(m.image_file(a), dir.path() / "images/p0007_0.ppm");
}

TEST(Dataset, LoadsPixelsAndLabels) {
  testing::TempDir dir("dataset");
  CorpusConfig c;
  c.n_posts = 6;
  c.extra_images_mean = 0;
  const auto m = generate_corpus(c, dir.path(), 1);
  const auto data = load_dataset(m, std::nullopt, 64, 64, 2);
  ASSERT_EQ(data.size(), 6u);
  const auto first = read_ppm(m.image_file(m.records[0]));
  EXPECT_EQ(data.pixels[0], first.at(0, 0).r);
  EXPECT_EQ(data.pixels[64 * 64], first.at(0, 0).g);
  const std::size_t idx[] = {0};
  const auto batch = make_batch<float>(data, idx);
  EXPECT_FLOAT_EQ(batch[0], first.at(0, 0).r / 255.0f);
  const auto counts = data.label_counts();
  EXPECT_EQ(counts[0].positives + counts[0].negatives, 6);
  EXPECT_THROW(load_dataset(m, std::nullopt, 32, 32, 1), DataError);
}

}  // namespace
}  // namespace adlabel
