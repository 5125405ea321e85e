#include "adlabel/audit.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"
#include "adlabel/parallel.hpp"

namespace adlabel {

std::string_view source_name(WarningSource s) { return s == WarningSource::kGroundTruth ? "ground_truth" : "detected"; }

WarningSource parse_source(std::string_view name) {
  if (name == "ground_truth") return WarningSource::kGroundTruth;
  if (name == "detected") return WarningSource::kDetected;
  throw ConfigError("unknown source '" + std::string(name) + "' (expected ground_truth or detected)");
}

AuditReport audit_corpus(const Manifest& manifest, WarningSource source, const ComplianceRuleSet& rules,
                         const DetectConfig& detect, int threads) {
  rules.validate();
  detect.validate();
  AuditReport report;
  report.source = source;
  report.entries.resize(manifest.records.size());
  parallel_for(
      manifest.records.size(),
      [&](std::size_t i) {
        const auto& r = manifest.records[i];
        AuditEntry& e = report.entries[i];
        e.record = i;
        e.expected = status_from_labels(r.labels);
        try {
          if (source == WarningSource::kGroundTruth) {
            std::optional<WarningRegion> region;
            if (r.warning_geometry) region = r.warning_geometry->region();
            e.verdict = check({r.width, r.height}, region, rules);
          } else {
            const RgbImage img = read_ppm(manifest.image_file(r));
            const auto d = locate_warning(img, GlyphAtlas::builtin(), detect);
            e.verdict = check({img.width(), img.height()}, d.region, rules);
          }
        } catch (const Error& err) {
          e.verdict.reset();
          e.error = err.what();
        }
      },
      threads);

  auto& s = report.summary;
  s.records = report.entries.size();
  for (const auto& e : report.entries) {
    if (!e.verdict) {
      ++s.errors;
      continue;
    }
    switch (e.verdict->status) {
      case ComplianceStatus::kFullyCompliant: ++s.fully_compliant; break;
      case ComplianceStatus::kNonCompliant: ++s.non_compliant; break;
      case ComplianceStatus::kAbsent: ++s.absent; break;
    }
    if (e.agrees()) ++s.agreements;
  }
  return report;
}

std::string audit_to_json(const Manifest& manifest, const AuditReport& report, int indent) {
  nlohmann::ordered_json j;
  j["source"] = source_name(report.source);
  const auto& s = report.summary;
  j["summary"] = {{"records", s.records},         {"fully_compliant", s.fully_compliant},
                  {"non_compliant", s.non_compliant}, {"absent", s.absent},
                  {"errors", s.errors},           {"agreements", s.agreements}};
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    const auto& r = manifest.records[e.record];
    nlohmann::ordered_json row;
    row["post_id"] = r.post_id;
    row["image_path"] = r.image_path;
    row["expected_status"] = status_name(e.expected);
    if (e.verdict) {
      row["verdict"] = nlohmann::ordered_json::parse(verdict_to_json(*e.verdict));
      row["agrees"] = e.agrees();
    } else {
      row["verdict"] = nullptr;
      row["error"] = e.error;
    }
    j["records"].push_back(std::move(row));
  }
  return j.dump(indent);
}

std::string audit_summary_table(const AuditReport& report) {
  const auto& s = report.summary;
  const double n = s.records > 0 ? static_cast<double>(s.records) : 1.0;
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "source: %s, records: %zu\n", std::string(source_name(report.source)).c_str(), s.records);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s\n", "status", "count", "percent");
  out += buf;
  const std::pair<const char*, std::size_t> rows[] = {{"FullyCompliant", s.fully_compliant},
                                                      {"NonCompliant", s.non_compliant},
                                                      {"Absent", s.absent},
                                                      {"Error", s.errors}};
  for (const auto& [name, count] : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %8zu %7.1f%%\n", name, count, 100.0 * static_cast<double>(count) / n);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "agreement with labels: %zu/%zu (%.1f%%)\n", s.agreements, s.records,
                100.0 * static_cast<double>(s.agreements) / n);
  out += buf;
  return out;
}

}  // namespace adlabel
