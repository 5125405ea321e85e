#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adlabel/audit.hpp"
#include "adlabel/compliance.hpp"
#include "adlabel/dataset.hpp"
#include "adlabel/error.hpp"
#include "adlabel/manifest.hpp"
#include "adlabel/metrics.hpp"
#include "adlabel/model.hpp"
#include "adlabel/raster.hpp"
#include "adlabel/splitter.hpp"
#include "adlabel/synth.hpp"
#include "adlabel/text_detect.hpp"
#include "adlabel/trainer.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;

namespace adlabel::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string split = "test";
  std::string source = "ground_truth";
  std::string bias_init;
  std::string unfreeze;
  std::string corpus;
  std::string model;
  std::string image;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  if (!f) throw DataError("failed writing " + path.string());
}

fs::path require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path.string());
  return path;
}

// A directory holding manifest.jsonl, or the manifest file itself.
Manifest open_manifest(const std::string& where) {
  fs::path p = where;
  if (fs::is_directory(p)) p /= kManifestFile;
  return read_manifest(require_file(p, "manifest"));
}

fs::path model_dir(const std::string& where) {
  require_file(fs::path(where) / kCheckpointFile, "checkpoint");
  require_file(fs::path(where) / kModelConfigFile, "model config");
  return where;
}

bool on_off(const std::string& v) { return v == "on"; }

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  int dispatch(const std::string& cmd) {
    config_ = o_.config.empty() ? RunConfig{} : load_run_config(o_.config);
    if (!o_.bias_init.empty()) config_.train.use_bias_init = on_off(o_.bias_init);
    if (!o_.unfreeze.empty()) config_.train.use_progressive_unfreezing = on_off(o_.unfreeze);
    if (o_.seed) {
      if (cmd == "generate") config_.generation.seed = *o_.seed;
      if (cmd == "split") config_.split_seed = *o_.seed;
      if (cmd == "train") config_.train.seed = *o_.seed;
    }
    if (!o_.corpus.empty()) config_.paths.corpus = o_.corpus;
    if (!o_.model.empty()) config_.paths.model = o_.model;
    if (!o_.out.empty()) config_.paths.out = o_.out;
    config_.validate();
    err_ << run_config_to_json(config_) << '\n';

    if (cmd == "generate") return generate();
    if (cmd == "split") return split();
    if (cmd == "train") return train_cmd();
    if (cmd == "evaluate") return evaluate_cmd();
    if (cmd == "predict") return predict();
    if (cmd == "detect") return detect();
    if (cmd == "check") return check_cmd();
    if (cmd == "report") return report();
    throw ConfigError("unknown subcommand " + cmd);
  }

 private:
  fs::path out_dir(const std::string& fallback) const {
    return config_.paths.out.empty() ? fs::path(fallback) : fs::path(config_.paths.out);
  }

  void save_config(const fs::path& dir) const { write_text(dir / "config.json", run_config_to_json(config_)); }

  int generate() {
    const fs::path dir = out_dir(config_.paths.corpus);
    const Manifest m = generate_corpus(config_.generation, dir);
    save_config(dir);
    out_ << "wrote " << m.records.size() << " images to " << (dir / kManifestFile).string() << '\n';
    return kExitOk;
  }

  int split() {
    Manifest m = open_manifest(config_.paths.corpus);
    const fs::path dir = out_dir(config_.paths.corpus);
    fs::create_directories(dir);
    const auto assignment = split_posts(unique_post_ids(m.records), config_.split, config_.split_seed);
    std::vector<ManifestRecord> records = m.records;
    apply_split(records, assignment);
    // Keep image paths valid relative to the new manifest location.
    const fs::path target = fs::absolute(dir).lexically_normal();
    for (auto& r : records) {
      if (fs::path(r.image_path).is_absolute()) continue;
      r.image_path = fs::absolute(m.image_file(r)).lexically_normal().lexically_relative(target).generic_string();
    }
    write_manifest(dir / kManifestFile, records);
    write_text(dir / "split.json", split_to_json(assignment));
    save_config(dir);
    const auto c = assignment.counts();
    out_ << "posts train " << c[0] << " val " << c[1] << " test " << c[2] << '\n';
    return kExitOk;
  }

  int train_cmd() {
    const Manifest m = open_manifest(config_.paths.corpus);
    const int res = config_.model.input_resolution;
    const Dataset train_data = load_dataset(m, Split::kTrain, res, res);
    const Dataset val_data = load_dataset(m, Split::kVal, res, res);
    auto model = MultitaskCnn<float>::build(config_.model, config_.train.seed);
    const auto history = adlabel::train(model, train_data, val_data, config_.train,
                                        [&](const EpochRecord& r) { out_ << format_epoch(r) << std::endl; });
    const fs::path dir = out_dir(config_.paths.model);
    model.save(dir);
    write_text(dir / "history.json", history_to_json(history));
    save_config(dir);
    const auto& best = history.epochs.at(static_cast<std::size_t>(history.best_epoch));
    out_ << "best: stage " << best.stage << " epoch " << best.epoch << " val_loss " << best.val_loss << '\n';
    out_ << "checkpoint " << (dir / kCheckpointFile).string() << " digest " << file_digest(dir / kCheckpointFile)
         << '\n';
    return kExitOk;
  }

  int evaluate_cmd() {
    const Manifest m = open_manifest(config_.paths.corpus);
    const auto model = MultitaskCnn<float>::load(model_dir(config_.paths.model));
    const int res = model.config().input_resolution;
    const Split s = parse_split(o_.split);
    const Dataset data = load_dataset(m, s, res, res);
    const auto reports = adlabel::evaluate(model, data);
    const std::string text = report_to_text(reports);
    const fs::path dir = out_dir(config_.paths.model);
    write_text(dir / "report.json", report_to_json(reports, std::string(split_name(s))));
    write_text(dir / "report.txt", text);
    out_ << text;
    if (!text.empty() && text.back() != '\n') out_ << '\n';
    return kExitOk;
  }

  int predict() {
    const auto model = MultitaskCnn<float>::load(model_dir(config_.paths.model));
    const int res = model.config().input_resolution;
    ojson result = ojson::array();
    auto row = [&](const std::string& name, const float* p) {
      ojson j;
      j["image"] = name;
      for (std::size_t t = 0; t < kTaskCount; ++t) j[std::string(kTaskNames[t])] = p[t];
      result.push_back(j);
    };
    if (!o_.image.empty()) {
      const RgbImage img = read_ppm(require_file(o_.image, "image"));
      if (img.width() != res || img.height() != res) {
        throw DataError(o_.image + ": expected " + std::to_string(res) + "x" + std::to_string(res) + " image");
      }
      const auto probs = model.predict(image_tensor<float>(img));
      row(o_.image, probs.data().data());
    } else {
      const Manifest m = open_manifest(config_.paths.corpus);
      const Dataset data = load_dataset(m, parse_split(o_.split), res, res);
      const auto probs = predict_dataset(model, data);
      for (std::size_t i = 0; i < data.size(); ++i) row(data.records[i]->image_path, probs.data() + i * kTaskCount);
    }
    const std::string text = result.dump(2);
    if (!config_.paths.out.empty()) write_text(fs::path(config_.paths.out) / "predictions.json", text);
    out_ << text << '\n';
    return kExitOk;
  }

  WarningDetection locate(const RgbImage& img) const {
    return locate_warning(img, GlyphAtlas::builtin(), config_.detect);
  }

  int detect() {
    if (o_.image.empty()) throw ConfigError("detect requires --image");
    const RgbImage img = read_ppm(require_file(o_.image, "image"));
    const auto d = locate(img);
    const std::string text = detection_to_json(d);
    if (!config_.paths.out.empty()) {
      const fs::path dir = config_.paths.out;
      write_text(dir / "detection.json", text);
      write_ppm(dir / "annotated.ppm", annotate(img, d));
    }
    out_ << text << '\n';
    return kExitOk;
  }

  int check_cmd() {
    if (o_.image.empty()) throw ConfigError("check requires --image");
    const RgbImage img = read_ppm(require_file(o_.image, "image"));
    const auto d = locate(img);
    const auto verdict = check({img.width(), img.height()}, d.region, config_.rules);
    const std::string text = verdict_to_json(verdict, 2);
    if (!config_.paths.out.empty()) write_text(fs::path(config_.paths.out) / "verdict.json", text);
    out_ << text << '\n';
    return kExitOk;
  }

  int report() {
    const Manifest m = open_manifest(config_.paths.corpus);
    const auto source = parse_source(o_.source);
    const auto r = audit_corpus(m, source, config_.rules, config_.detect);
    const std::string table = audit_summary_table(r);
    const fs::path dir = out_dir(config_.paths.corpus);
    write_text(dir / "audit.json", audit_to_json(m, r));
    write_text(dir / "audit.txt", table);
    out_ << table;
    if (!table.empty() && table.back() != '\n') out_ << '\n';
    return kExitOk;
  }

  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  RunConfig config_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic ad-image warning-label pipeline", "adlabel"};
  app.require_subcommand(1, 1);
  Options o;

  const std::vector<std::string> splits{"train", "val", "test"};
  const std::vector<std::string> switches{"on", "off"};
  auto add_config = [&](CLI::App* s) {
    s->add_option("--config", o.config, "run config JSON")->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "output directory"); };
  auto add_corpus = [&](CLI::App* s) { s->add_option("--corpus", o.corpus, "corpus directory or manifest file"); };
  auto add_model = [&](CLI::App* s) { s->add_option("--model", o.model, "model directory"); };
  auto add_image = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--image", o.image, "PPM image");
    if (required) opt->required();
  };

  auto* gen = app.add_subcommand("generate", "render a synthetic corpus");
  add_config(gen);
  add_out(gen);
  gen->add_option("--seed", o.seed, "generation seed");

  auto* spl = app.add_subcommand("split", "assign posts to train/val/test");
  add_config(spl);
  add_out(spl);
  add_corpus(spl);
  spl->add_option("--seed", o.seed, "split seed");

  auto* trn = app.add_subcommand("train", "train the multi-task model");
  add_config(trn);
  add_out(trn);
  add_corpus(trn);
  trn->add_option("--seed", o.seed, "initialisation and shuffling seed");
  trn->add_option("--bias-init", o.bias_init, "output bias from label counts")->check(CLI::IsMember(switches));
  trn->add_option("--unfreeze", o.unfreeze, "progressive unfreezing")->check(CLI::IsMember(switches));

  auto* evl = app.add_subcommand("evaluate", "per-task AUC and accuracy on a split");
  add_config(evl);
  add_out(evl);
  add_corpus(evl);
  add_model(evl);
  evl->add_option("--split", o.split, "split to evaluate")->check(CLI::IsMember(splits));

  auto* prd = app.add_subcommand("predict", "probabilities for one image or a split");
  add_config(prd);
  add_out(prd);
  add_corpus(prd);
  add_model(prd);
  add_image(prd, false);
  prd->add_option("--split", o.split, "split to predict when no image is given")->check(CLI::IsMember(splits));

  auto* det = app.add_subcommand("detect", "locate the warning statement in an image");
  add_config(det);
  add_out(det);
  add_image(det, true);

  auto* chk = app.add_subcommand("check", "compliance verdict for an image");
  add_config(chk);
  add_out(chk);
  add_image(chk, true);

  auto* rep = app.add_subcommand("report", "audit every record of a corpus");
  add_config(rep);
  add_out(rep);
  add_corpus(rep);
  rep->add_option("--source", o.source, "warning geometry source")
      ->check(CLI::IsMember(std::vector<std::string>{"ground_truth", "detected"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (app.get_subcommands().empty()) err << "run with --help for usage\n";
    return kExitUsage;
  }
  for (auto* s : app.get_subcommands()) {
    // Help for the subcommand itself is handled by CLI11 above.
    try {
      Runner runner(o, out, err);
      return runner.dispatch(s->get_name());
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    }
  }
  return kExitUsage;
}

}  // namespace adlabel::cli
