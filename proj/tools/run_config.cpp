#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"

namespace adlabel::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Dispatches each key of `obj` to its handler; anything else is rejected.
void read_section(const json& obj, const std::string& section,
                  const std::map<std::string, std::function<void(const json&)>>& handlers) {
  if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + section + "." + key + "' has the wrong type: " + e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> into(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

}  // namespace

void RunConfig::validate() const {
  generation.validate();
  split.validate();
  model.validate();
  train.validate();
  rules.validate();
  detect.validate();
}

RunConfig run_config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  auto& g = c.generation;
  auto& t = c.train;
  auto& d = c.detect;
  read_section(root, "config", {
      {"generation", [&](const json& s) {
         read_section(s, "generation", {
             {"n_posts", into(g.n_posts)},
             {"extra_images_mean", into(g.extra_images_mean)},
             {"max_extra_images", into(g.max_extra_images)},
             {"width", into(g.image.width)},
             {"height", into(g.image.height)},
             {"noise", into(g.image.noise)},
             {"distractor_prob", into(g.image.distractor_prob)},
             {"seed", into(g.seed)},
             {"mix", [&](const json& m) {
                read_section(m, "generation.mix", {
                    {"fully_compliant", into(g.mix.fully_compliant)},
                    {"noncompliant_small", into(g.mix.noncompliant_small)},
                    {"noncompliant_low", into(g.mix.noncompliant_low)},
                    {"noncompliant_tiny_font", into(g.mix.noncompliant_tiny_font)},
                    {"absent", into(g.mix.absent)},
                    {"vaping", into(g.mix.vaping)},
                });
              }},
         });
       }},
      {"split", [&](const json& s) {
         read_section(s, "split", {
             {"train", into(c.split.train)},
             {"val", into(c.split.val)},
             {"test", into(c.split.test)},
             {"seed", into(c.split_seed)},
         });
       }},
      {"model", [&](const json& s) { c.model = model_config_from_json(s.dump()); }},
      {"train", [&](const json& s) {
         read_section(s, "train", {
             {"batch_size", into(t.batch_size)},
             {"max_epochs_per_stage", into(t.max_epochs_per_stage)},
             {"patience", into(t.patience)},
             {"learning_rates", into(t.learning_rates)},
             {"use_bias_init", into(t.use_bias_init)},
             {"use_progressive_unfreezing", into(t.use_progressive_unfreezing)},
             {"freeze_batchnorm", into(t.freeze_batchnorm)},
             {"seed", into(t.seed)},
         });
       }},
      {"rules", [&](const json& s) {
         read_section(s, "rules", {
             {"min_area_fraction", into(c.rules.min_area_fraction)},
             {"upper_region_fraction", into(c.rules.upper_region_fraction)},
             {"min_glyph_height_fraction", into(c.rules.min_glyph_height_fraction)},
         });
       }},
      {"detect", [&](const json& s) {
         read_section(s, "detect", {
             {"window_radius", into(d.window_radius)},
             {"contrast", into(d.contrast)},
             {"min_glyph_height", into(d.min_glyph_height)},
             {"max_glyph_height_fraction", into(d.max_glyph_height_fraction)},
             {"merge_gap_factor", into(d.merge_gap_factor)},
             {"min_cell_correlation", into(d.min_cell_correlation)},
             {"similarity_threshold", into(d.similarity_threshold)},
             {"min_line_confidence", into(d.min_line_confidence)},
             {"min_match_length", into(d.min_match_length)},
         });
       }},
      {"paths", [&](const json& s) {
         read_section(s, "paths", {
             {"corpus", into(c.paths.corpus)},
             {"model", into(c.paths.model)},
             {"out", into(c.paths.out)},
         });
       }},
  });
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return run_config_from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string run_config_to_json(const RunConfig& c, int indent) {
  const auto& g = c.generation;
  const auto& t = c.train;
  const auto& d = c.detect;
  ojson j;
  j["generation"] = {
      {"n_posts", g.n_posts},
      {"extra_images_mean", g.extra_images_mean},
      {"max_extra_images", g.max_extra_images},
      {"width", g.image.width},
      {"height", g.image.height},
      {"noise", g.image.noise},
      {"distractor_prob", g.image.distractor_prob},
      {"seed", g.seed},
      {"mix", {{"fully_compliant", g.mix.fully_compliant},
               {"noncompliant_small", g.mix.noncompliant_small},
               {"noncompliant_low", g.mix.noncompliant_low},
               {"noncompliant_tiny_font", g.mix.noncompliant_tiny_font},
               {"absent", g.mix.absent},
               {"vaping", g.mix.vaping}}},
  };
  j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}, {"seed", c.split_seed}};
  j["model"] = ojson::parse(model_config_to_json(c.model));
  j["train"] = {
      {"batch_size", t.batch_size},
      {"max_epochs_per_stage", t.max_epochs_per_stage},
      {"patience", t.patience},
      {"learning_rates", t.learning_rates},
      {"use_bias_init", t.use_bias_init},
      {"use_progressive_unfreezing", t.use_progressive_unfreezing},
      {"freeze_batchnorm", t.freeze_batchnorm},
      {"seed", t.seed},
  };
  j["rules"] = {{"min_area_fraction", c.rules.min_area_fraction},
                {"upper_region_fraction", c.rules.upper_region_fraction},
                {"min_glyph_height_fraction", c.rules.min_glyph_height_fraction}};
  j["detect"] = {
      {"window_radius", d.window_radius},
      {"contrast", d.contrast},
      {"min_glyph_height", d.min_glyph_height},
      {"max_glyph_height_fraction", d.max_glyph_height_fraction},
      {"merge_gap_factor", d.merge_gap_factor},
      {"min_cell_correlation", d.min_cell_correlation},
      {"similarity_threshold", d.similarity_threshold},
      {"min_line_confidence", d.min_line_confidence},
      {"min_match_length", d.min_match_length},
  };
  j["paths"] = {{"corpus", c.paths.corpus}, {"model", c.paths.model}, {"out", c.paths.out}};
  return j.dump(indent);
}

}  // namespace adlabel::cli
