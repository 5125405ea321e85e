#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adlabel/raster.hpp"

namespace adlabel {

// Geometric proxies for the warning-statement requirements. All fractions
// are relative to the advertisement image and must lie in (0, 1).
struct ComplianceRuleSet {
  double min_area_fraction = 0.20;
  // Top edge of the warning must lie within this fraction of image height.
  double upper_region_fraction = 0.10;
  // Pixel stand-in for the minimum point size.
  double min_glyph_height_fraction = 0.03;

  void validate() const;
};

enum class ComplianceStatus { kFullyCompliant, kNonCompliant, kAbsent };

enum class Violation : std::uint8_t {
  kAreaTooSmall = 1,
  kNotUpperPortion = 2,
  kFontTooSmall = 4,
};

class ViolationSet {
 public:
  ViolationSet() = default;
  ViolationSet(std::initializer_list<Violation> vs) {
    for (auto v : vs) insert(v);
  }
  void insert(Violation v) { bits_ |= static_cast<std::uint8_t>(v); }
  bool contains(Violation v) const { return (bits_ & static_cast<std::uint8_t>(v)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Violation> list() const;
  bool operator==(const ViolationSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ImageDims {
  int width = 0;
  int height = 0;
};

struct WarningRegion {
  Box box;
  double glyph_height = 0;  // pixels
};

struct ComplianceMeasurements {
  double area_fraction = 0;
  double top_edge_fraction = 0;
  double glyph_height_fraction = 0;
};

struct ComplianceVerdict {
  ComplianceStatus status = ComplianceStatus::kAbsent;
  ViolationSet violations;
  std::optional<ComplianceMeasurements> measured;
  // Typeface is not inspected; the atlas is sans-serif by construction.
  bool sans_serif_assumed = true;
};

std::string_view status_name(ComplianceStatus s);
std::string_view violation_name(Violation v);

// Evaluates every rule with inclusive comparisons: a measurement exactly at
// its threshold passes. Throws DataError when the box is not inside the image.
ComplianceVerdict check(ImageDims dims, const std::optional<WarningRegion>& warning,
                        const ComplianceRuleSet& rules = {});

std::string verdict_to_json(const ComplianceVerdict& verdict, int indent = -1);

}  // namespace adlabel
