#include "adlabel/compliance.hpp"

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"

namespace adlabel {

void ComplianceRuleSet::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(min_area_fraction) || !in_unit(upper_region_fraction) || !in_unit(min_glyph_height_fraction)) {
    throw ConfigError("compliance rule fractions must lie in (0, 1)");
  }
}

std::vector<Violation> ViolationSet::list() const {
  std::vector<Violation> out;
  for (auto v : {Violation::kAreaTooSmall, Violation::kNotUpperPortion, Violation::kFontTooSmall}) {
    if (contains(v)) out.push_back(v);
  }
  return out;
}

std::string_view status_name(ComplianceStatus s) {
  switch (s) {
    case ComplianceStatus::kFullyCompliant: return "FullyCompliant";
    case ComplianceStatus::kNonCompliant: return "NonCompliant";
    case ComplianceStatus::kAbsent: return "Absent";
  }
  return "?";
}

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::kAreaTooSmall: return "AreaTooSmall";
    case Violation::kNotUpperPortion: return "NotUpperPortion";
    case Violation::kFontTooSmall: return "FontTooSmall";
  }
  return "?";
}

ComplianceVerdict check(ImageDims dims, const std::optional<WarningRegion>& warning, const ComplianceRuleSet& rules) {
  rules.validate();
  if (dims.width < 1 || dims.height < 1) throw DataError("image dimensions must be positive");
  ComplianceVerdict v;
  if (!warning) return v;

  const Box& b = warning->box;
  if (!b.inside(dims.width, dims.height)) {
    throw DataError("warning box (" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) +
                    "," + std::to_string(b.h) + ") is not inside the " + std::to_string(dims.width) + "x" +
                    std::to_string(dims.height) + " image");
  }
  // Quotients of exact integers are correctly rounded, so a ratio that equals
  // a threshold exactly compares equal to the threshold literal.
  ComplianceMeasurements m;
  m.area_fraction = static_cast<double>(b.area()) /
                    (static_cast<double>(dims.width) * static_cast<double>(dims.height));
  m.top_edge_fraction = static_cast<double>(b.y) / dims.height;
  m.glyph_height_fraction = warning->glyph_height / dims.height;
  v.measured = m;

  if (!(m.area_fraction >= rules.min_area_fraction)) v.violations.insert(Violation::kAreaTooSmall);
  if (!(m.top_edge_fraction <= rules.upper_region_fraction)) v.violations.insert(Violation::kNotUpperPortion);
  if (!(m.glyph_height_fraction >= rules.min_glyph_height_fraction)) v.violations.insert(Violation::kFontTooSmall);
  v.status = v.violations.empty() ? ComplianceStatus::kFullyCompliant : ComplianceStatus::kNonCompliant;
  return v;
}

std::string verdict_to_json(const ComplianceVerdict& verdict, int indent) {
  nlohmann::ordered_json j;
  j["status"] = status_name(verdict.status);
  j["violations"] = nlohmann::ordered_json::array();
  for (auto v : verdict.violations.list()) j["violations"].push_back(violation_name(v));
  if (verdict.measured) {
    j["measured"] = {{"area_fraction", verdict.measured->area_fraction},
                     {"top_edge_fraction", verdict.measured->top_edge_fraction},
                     {"glyph_height_fraction", verdict.measured->glyph_height_fraction}};
  } else {
    j["measured"] = nullptr;
  }
  j["sans_serif_assumed"] = verdict.sans_serif_assumed;
  return j.dump(indent);
}

}  // namespace adlabel
