#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adlabel/compliance.hpp"
#include "adlabel/manifest.hpp"
#include "adlabel/text_detect.hpp"

namespace adlabel {

enum class WarningSource { kGroundTruth, kDetected };
std::string_view source_name(WarningSource s);
WarningSource parse_source(std::string_view name);

struct AuditEntry {
  std::size_t record = 0;  // index into the manifest
  ComplianceStatus expected = ComplianceStatus::kAbsent;  // implied by the stored labels
  std::optional<ComplianceVerdict> verdict;
  std::string error;  // set when the record could not be audited

  bool agrees() const { return verdict && verdict->status == expected; }
};

struct AuditSummary {
  std::size_t records = 0;
  std::size_t fully_compliant = 0;
  std::size_t non_compliant = 0;
  std::size_t absent = 0;
  std::size_t errors = 0;
  std::size_t agreements = 0;  // verdict status equals the label-implied status
};

struct AuditReport {
  WarningSource source = WarningSource::kGroundTruth;
  std::vector<AuditEntry> entries;
  AuditSummary summary;
};

// Checks every record. Ground-truth mode uses the stored geometry; detected
// mode reads the image and locates the warning. Per-record failures (missing
// files, bad geometry) become error entries and the run continues.
AuditReport audit_corpus(const Manifest& manifest, WarningSource source, const ComplianceRuleSet& rules = {},
                         const DetectConfig& detect = {}, int threads = 0);

std::string audit_to_json(const Manifest& manifest, const AuditReport& report, int indent = 2);
std::string audit_summary_table(const AuditReport& report);

}  // namespace adlabel
