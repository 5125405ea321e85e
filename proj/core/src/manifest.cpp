#include "adlabel/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"

namespace adlabel {

using ojson = nlohmann::ordered_json;

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kFullyCompliant: return "fully_compliant";
    case Scenario::kNoncompliantSmall: return "noncompliant_small";
    case Scenario::kNoncompliantLow: return "noncompliant_low";
    case Scenario::kNoncompliantTinyFont: return "noncompliant_tiny_font";
    case Scenario::kAbsent: return "absent";
  }
  return "?";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : kAllScenarios) {
    if (scenario_name(s) == name) return s;
  }
  throw DataError("unknown scenario '" + std::string(name) + "'");
}

ViolationSet intended_violations(Scenario s) {
  switch (s) {
    case Scenario::kNoncompliantSmall: return {Violation::kAreaTooSmall};
    case Scenario::kNoncompliantLow: return {Violation::kNotUpperPortion};
    case Scenario::kNoncompliantTinyFont: return {Violation::kFontTooSmall};
    default: return {};
  }
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

Labels labels_for(Scenario scenario, bool vaping) {
  Labels l;
  l.vaping = vaping ? 1 : 0;
  l.compliant_label = scenario == Scenario::kFullyCompliant ? 1 : 0;
  l.noncompliant_label = (scenario == Scenario::kNoncompliantSmall || scenario == Scenario::kNoncompliantLow ||
                          scenario == Scenario::kNoncompliantTinyFont)
                             ? 1
                             : 0;
  return l;
}

ComplianceStatus status_from_labels(const Labels& labels) {
  if (labels.compliant_label) return ComplianceStatus::kFullyCompliant;
  if (labels.noncompliant_label) return ComplianceStatus::kNonCompliant;
  return ComplianceStatus::kAbsent;
}

std::string record_to_json_line(const ManifestRecord& r) {
  ojson j;
  j["post_id"] = r.post_id;
  j["image_path"] = r.image_path;
  j["width"] = r.width;
  j["height"] = r.height;
  j["labels"] = {{"vaping", r.labels.vaping},
                 {"compliant_label", r.labels.compliant_label},
                 {"noncompliant_label", r.labels.noncompliant_label}};
  if (r.warning_geometry) {
    const auto& g = *r.warning_geometry;
    j["warning_geometry"] = {{"x", g.box.x},   {"y", g.box.y},
                             {"w", g.box.w},   {"h", g.box.h},
                             {"glyph_height", g.glyph_height}, {"text", g.text}};
  } else {
    j["warning_geometry"] = nullptr;
  }
  j["scenario"] = scenario_name(r.scenario);
  j["split"] = r.split ? ojson(split_name(*r.split)) : ojson(nullptr);
  return j.dump();
}

ManifestRecord record_from_json_line(std::string_view line) {
  ManifestRecord r;
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest JSON: ") + e.what());
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key != "post_id" && key != "image_path" && key != "width" && key != "height" && key != "labels" &&
          key != "warning_geometry" && key != "scenario" && key != "split") {
        throw DataError("unknown manifest field '" + key + "'");
      }
    }
    r.post_id = j.at("post_id").get<std::string>();
    r.image_path = j.at("image_path").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    const auto& l = j.at("labels");
    r.labels = {l.at("vaping").get<int>(), l.at("compliant_label").get<int>(), l.at("noncompliant_label").get<int>()};
    const auto& g = j.at("warning_geometry");
    if (!g.is_null()) {
      WarningGeometry w;
      w.box = {g.at("x").get<int>(), g.at("y").get<int>(), g.at("w").get<int>(), g.at("h").get<int>()};
      w.glyph_height = g.at("glyph_height").get<int>();
      w.text = g.at("text").get<std::string>();
      r.warning_geometry = w;
    }
    r.scenario = parse_scenario(j.at("scenario").get<std::string>());
    if (j.contains("split") && !j.at("split").is_null()) r.split = parse_split(j.at("split").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest record is missing or mistypes a field: ") + e.what());
  }
  for (int v : r.labels.as_array()) {
    if (v != 0 && v != 1) throw DataError("manifest labels must be 0 or 1");
  }
  if (r.labels.compliant_label && r.labels.noncompliant_label) {
    throw DataError("manifest record " + r.image_path + " has both compliant_label and noncompliant_label set");
  }
  return r;
}

std::filesystem::path Manifest::image_file(const ManifestRecord& record) const {
  std::filesystem::path p(record.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<const ManifestRecord*> Manifest::select(Split split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split && *r.split == split) out.push_back(&r);
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      m.records.push_back(record_from_json_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
  if (!out) throw DataError("failed writing manifest " + path.string());
}

}  // namespace adlabel
