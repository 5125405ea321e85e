#include <gtest/gtest.h>

#include "adlabel/compliance.hpp"
#include "adlabel/error.hpp"
#include "adlabel/random.hpp"

namespace adlabel {
namespace {

constexpr ImageDims kSquare{1000, 1000};

TEST(Check, NoWarningIsAbsent) {
  const auto v = check(kSquare, std::nullopt);
  EXPECT_EQ(v.status, ComplianceStatus::kAbsent);
  EXPECT_TRUE(v.violations.empty());
  EXPECT_FALSE(v.measured);
}

TEST(Check, FullBannerAtTop) {
  const auto v = check(kSquare, WarningRegion{{0, 0, 1000, 200}, 40});
  EXPECT_EQ(v.status, ComplianceStatus::kFullyCompliant);
  EXPECT_DOUBLE_EQ(v.measured->area_fraction, 0.20);
  EXPECT_DOUBLE_EQ(v.measured->top_edge_fraction, 0.0);
  EXPECT_DOUBLE_EQ(v.measured->glyph_height_fraction, 0.04);
}

TEST(Check, LowBanner) {
  const auto v = check(kSquare, WarningRegion{{0, 600, 1000, 200}, 40});
  EXPECT_EQ(v.status, ComplianceStatus::kNonCompliant);
  EXPECT_EQ(v.violations, (ViolationSet{Violation::kNotUpperPortion}));
  EXPECT_DOUBLE_EQ(v.measured->top_edge_fraction, 0.6);
}

TEST(Check, SmallBannerWithSmallFont) {
  const auto v = check(kSquare, WarningRegion{{0, 0, 500, 200}, 20});
  EXPECT_EQ(v.violations, (ViolationSet{Violation::kAreaTooSmall, Violation::kFontTooSmall}));
  EXPECT_DOUBLE_EQ(v.measured->area_fraction, 0.10);
  EXPECT_DOUBLE_EQ(v.measured->glyph_height_fraction, 0.02);
}

TEST(Check, BoundaryValuesPass) {
  // Area exactly 0.20, top edge exactly 0.10, glyph exactly 0.03.
  const auto v = check(kSquare, WarningRegion{{0, 100, 1000, 200}, 30});
  EXPECT_EQ(v.status, ComplianceStatus::kFullyCompliant);
  // One pixel past each boundary fails that rule alone.
  EXPECT_EQ(check(kSquare, WarningRegion{{0, 101, 1000, 200}, 30}).violations,
            (ViolationSet{Violation::kNotUpperPortion}));
  EXPECT_EQ(check(kSquare, WarningRegion{{0, 100, 1000, 199}, 30}).violations,
            (ViolationSet{Violation::kAreaTooSmall}));
  EXPECT_EQ(check(kSquare, WarningRegion{{0, 100, 1000, 200}, 29}).violations,
            (ViolationSet{Violation::kFontTooSmall}));
}

TEST(Check, OutOfBoundsBoxIsDataError) {
  EXPECT_THROW(check(kSquare, WarningRegion{{0, 900, 1000, 200}, 30}), DataError);
  EXPECT_THROW(check(kSquare, WarningRegion{{-1, 0, 10, 10}, 30}), DataError);
}

TEST(Check, GrowingBoxKeepsCompliance) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int x = static_cast<int>(uniform_int(rng, 0, 300)), y = static_cast<int>(uniform_int(rng, 0, 100));
    const int w = static_cast<int>(uniform_int(rng, 300, 1000 - x)), h = static_cast<int>(uniform_int(rng, 100, 900 - y));
    const double g = static_cast<double>(uniform_int(rng, 10, 60));
    const auto base = check(kSquare, WarningRegion{{x, y, w, h}, g});
    if (base.status != ComplianceStatus::kFullyCompliant) continue;
    const auto grown = check(kSquare, WarningRegion{{x, y, 1000 - x, 1000 - y}, g});
    EXPECT_EQ(grown.status, ComplianceStatus::kFullyCompliant);
  }
}

TEST(Check, ScaleInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const int W = static_cast<int>(uniform_int(rng, 20, 200)), H = static_cast<int>(uniform_int(rng, 20, 200));
    const int x = static_cast<int>(uniform_int(rng, 0, W - 1)), y = static_cast<int>(uniform_int(rng, 0, H - 1));
    const int w = static_cast<int>(uniform_int(rng, 1, W - x)), h = static_cast<int>(uniform_int(rng, 1, H - y));
    const int g = static_cast<int>(uniform_int(rng, 1, 10));
    const auto base = check({W, H}, WarningRegion{{x, y, w, h}, double(g)});
    for (int k : {2, 3, 7}) {
      const auto scaled = check({W * k, H * k}, WarningRegion{{x * k, y * k, w * k, h * k}, double(g * k)});
      EXPECT_EQ(scaled.status, base.status);
      EXPECT_EQ(scaled.violations, base.violations);
    }
  }
}

TEST(Check, StatusMatchesViolations) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int y = static_cast<int>(uniform_int(rng, 0, 500));
    const auto v = check(kSquare, WarningRegion{{0, y, static_cast<int>(uniform_int(rng, 1, 1000)),
                                                 static_cast<int>(uniform_int(rng, 1, 500))},
                                                double(uniform_int(rng, 1, 60))});
    EXPECT_EQ(v.status == ComplianceStatus::kFullyCompliant, v.violations.empty());
  }
}

TEST(Rules, ValidationAndJson) {
  ComplianceRuleSet r;
  EXPECT_NO_THROW(r.validate());
  r.min_area_fraction = 1.0;
  EXPECT_THROW(r.validate(), ConfigError);
  const auto json = verdict_to_json(check(kSquare, WarningRegion{{0, 0, 500, 200}, 20}));
  EXPECT_NE(json.find("NonCompliant"), std::string::npos) << json;
  EXPECT_NE(json.find("AreaTooSmall"), std::string::npos) << json;
  EXPECT_NE(json.find("sans_serif_assumed"), std::string::npos) << json;
}

}  // namespace
}  // namespace adlabel
