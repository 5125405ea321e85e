#pragma once

#include <filesystem>
#include <string>

#include "adlabel/compliance.hpp"
#include "adlabel/model.hpp"
#include "adlabel/splitter.hpp"
#include "adlabel/synth.hpp"
#include "adlabel/text_detect.hpp"
#include "adlabel/trainer.hpp"

namespace adlabel::cli {

struct Paths {
  std::string corpus = "corpus";
  std::string model = "model";
  std::string out;
};

// Every module's settings in one document. Sections: generation, split,
// model, train, rules, detect, paths. Unknown keys are ConfigErrors.
struct RunConfig {
  CorpusConfig generation;
  SplitRatios split;
  std::uint64_t split_seed = 42;
  ModelConfig model;
  TrainConfig train;
  ComplianceRuleSet rules;
  DetectConfig detect;
  Paths paths;

  void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
// Fully resolved document, seeds included.
std::string run_config_to_json(const RunConfig& config, int indent = 2);

}  // namespace adlabel::cli
