#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adlabel/compliance.hpp"
#include "adlabel/raster.hpp"

namespace adlabel {

enum class Scenario { kFullyCompliant, kNoncompliantSmall, kNoncompliantLow, kNoncompliantTinyFont, kAbsent };
inline constexpr std::array<Scenario, 5> kAllScenarios{Scenario::kFullyCompliant, Scenario::kNoncompliantSmall,
                                                       Scenario::kNoncompliantLow, Scenario::kNoncompliantTinyFont,
                                                       Scenario::kAbsent};

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

// The rule violations a scenario is built to exhibit.
ViolationSet intended_violations(Scenario s);

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct Labels {
  int vaping = 0;
  int compliant_label = 0;
  int noncompliant_label = 0;

  std::array<int, 3> as_array() const { return {vaping, compliant_label, noncompliant_label}; }
  bool operator==(const Labels&) const = default;
};

Labels labels_for(Scenario scenario, bool vaping);

// Status a record's labels imply: compliant -> FullyCompliant, noncompliant -> NonCompliant, else Absent.
ComplianceStatus status_from_labels(const Labels& labels);

inline constexpr std::string_view kWarningStatement =
    "WARNING: THIS PRODUCT CONTAINS NICOTINE. NICOTINE IS AN ADDICTIVE CHEMICAL.";

struct WarningGeometry {
  Box box;
  int glyph_height = 0;
  std::string text{kWarningStatement};

  WarningRegion region() const { return {box, static_cast<double>(glyph_height)}; }
  bool operator==(const WarningGeometry&) const = default;
};

struct ManifestRecord {
  std::string post_id;
  std::string image_path;  // relative to the manifest directory unless absolute
  int width = 0;
  int height = 0;
  Labels labels;
  std::optional<WarningGeometry> warning_geometry;
  Scenario scenario = Scenario::kAbsent;
  std::optional<Split> split;

  bool operator==(const ManifestRecord&) const = default;
};

std::string record_to_json_line(const ManifestRecord& record);
ManifestRecord record_from_json_line(std::string_view line);

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;

  std::filesystem::path image_file(const ManifestRecord& record) const;
  std::vector<const ManifestRecord*> select(Split split) const;
};

inline constexpr const char* kManifestFile = "manifest.jsonl";

// JSON Lines, one record per image. DataError names the file and line.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

}  // namespace adlabel
