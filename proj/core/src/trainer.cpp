#include "adlabel/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "adlabel/adam.hpp"
#include "adlabel/error.hpp"
#include "adlabel/metrics.hpp"
#include "adlabel/ops.hpp"
#include "adlabel/random.hpp"

namespace adlabel {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs_per_stage < 1) throw ConfigError("max_epochs_per_stage must be at least 1");
  for (int s = 0; s < kStageCount; ++s) {
    const auto i = static_cast<std::size_t>(s);
    if (patience[i] < 1 || patience[i] >= max_epochs_per_stage) {
      throw ConfigError("patience for stage " + std::to_string(s) + " must lie in [1, max_epochs_per_stage)");
    }
    if (!(learning_rates[i] > 0) || !std::isfinite(learning_rates[i])) throw ConfigError("learning rates must be positive");
    if (s > 0 && !(learning_rates[i] < learning_rates[i - 1])) {
      throw ConfigError("learning rates must decrease strictly across stages");
    }
  }
}

EarlyStopping::EarlyStopping(int patience, double baseline) : patience_(patience), best_loss_(baseline) {
  if (patience < 1) throw ConfigError("patience must be at least 1");
}

bool EarlyStopping::update(double loss) {
  ++epochs_;
  last_improved_ = loss < best_loss_;
  if (last_improved_) {
    best_loss_ = loss;
    best_epoch_ = epochs_;
    wait_ = 0;
  } else {
    ++wait_;
  }
  return wait_ >= patience_;
}

std::uint64_t epoch_seed(std::uint64_t seed, int stage, int epoch) {
  return derive_seed(seed, static_cast<std::uint64_t>(stage) + 1, static_cast<std::uint64_t>(epoch));
}

std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, int batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < n; i += bs) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + bs)));
  }
  return batches;
}

EpochRecord evaluate_epoch(const MultitaskCnn<float>& model, const Dataset& data) {
  EpochRecord r;
  const auto probs = predict_dataset(model, data);
  const auto reports = task_reports(probs, data.labels);
  double sum = 0;
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    r.val_auc[t] = reports[t].auc;
    sum += reports[t].cross_entropy;
  }
  r.val_loss = sum / kTaskCount;
  return r;
}

std::string format_epoch(const EpochRecord& r) {
  char buf[256];
  int n = std::snprintf(buf, sizeof buf, "stage %d epoch %2d  train_loss %.5f  val_loss %.5f  auc", r.stage, r.epoch,
                        r.train_loss, r.val_loss);
  std::string out(buf, static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    if (r.val_auc[t]) {
      n = std::snprintf(buf, sizeof buf, " %s=%.4f", std::string(kTaskNames[t]).c_str(), *r.val_auc[t]);
    } else {
      n = std::snprintf(buf, sizeof buf, " %s=n/a", std::string(kTaskNames[t]).c_str());
    }
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

std::string history_to_json(const TrainHistory& h, int indent) {
  nlohmann::ordered_json j;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    nlohmann::ordered_json r;
    r["stage"] = e.stage;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.train_loss;
    r["val_loss"] = e.val_loss;
    nlohmann::ordered_json auc = nlohmann::ordered_json::object();
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      auc[std::string(kTaskNames[t])] = e.val_auc[t] ? nlohmann::ordered_json(*e.val_auc[t]) : nlohmann::ordered_json(nullptr);
    }
    r["val_auc"] = std::move(auc);
    j["epochs"].push_back(std::move(r));
  }
  j["best_epoch"] = h.best_epoch;
  j["stage_best_epochs"] = h.stage_best_epochs;
  j["seconds"] = h.seconds;
  return j.dump(indent);
}

namespace {

double run_epoch(MultitaskCnn<float>& model, const Dataset& data, const TrainConfig& config, AdamState<float>& adam,
                 int stage, int epoch) {
  const std::uint64_t es = epoch_seed(config.seed, stage, epoch);
  const auto batches = shuffle_batches(data.size(), config.batch_size, es);
  Rng dropout_rng(splitmix64(es));
  ForwardOptions opts;
  opts.training = true;
  opts.dropout_rng = &dropout_rng;

  double weighted = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& idx = batches[b];
    Tape<float> tape;
    const Tensor<float> images = make_batch<float>(data, idx);
    const Tensor<float> labels = make_label_batch<float>(data, idx);
    Variable<float> probs;
    Variable<float> loss;
    try {
      probs = model.forward(tape, images, opts);
      loss = binary_cross_entropy(tape, probs, labels);
    } catch (const NumericError& e) {
      throw NumericError("non-finite values in stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) +
                         " batch " + std::to_string(b) + ": " + e.what());
    }
    const double value = loss.tensor()[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss in stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) +
                         " batch " + std::to_string(b));
    }
    tape.backward(loss);
    adam_step(model.parameters(), adam);
    model.zero_grad();
    weighted += value * static_cast<double>(idx.size());
  }
  return weighted / static_cast<double>(data.size());
}

}  // namespace

TrainHistory train(MultitaskCnn<float>& model, const Dataset& train_data, const Dataset& val_data,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_data.size() == 0) throw DataError("the train split is empty");
  if (val_data.size() == 0) throw DataError("the validation split is empty");
  const auto start = std::chrono::steady_clock::now();

  if (config.use_bias_init) model.init_output_bias(train_data.label_counts());
  model.set_freeze_batchnorm(config.freeze_batchnorm);

  TrainHistory history;
  std::vector<int> stages;
  if (config.use_progressive_unfreezing) {
    stages = {0, 1, 2};
  } else {
    stages = {-1};
  }
  double best_overall = std::numeric_limits<double>::infinity();

  for (int stage : stages) {
    const int lr_index = stage < 0 ? 1 : stage;
    const int stage_label = stage < 0 ? 0 : stage;
    model.set_stage_trainability(stage < 0 ? 2 : stage);
    model.set_freeze_batchnorm(config.freeze_batchnorm);

    AdamConfig ac;
    ac.learning_rate = config.learning_rates[static_cast<std::size_t>(lr_index)];
    AdamState<float> adam(ac);
    EarlyStopping stopper(config.patience[static_cast<std::size_t>(lr_index)], best_overall);
    auto best_state = model.state();
    int best_index = history.best_epoch;

    for (int epoch = 1; epoch <= config.max_epochs_per_stage; ++epoch) {
      const double train_loss = run_epoch(model, train_data, config, adam, stage_label, epoch);
      EpochRecord rec = evaluate_epoch(model, val_data);
      rec.stage = stage_label;
      rec.epoch = epoch;
      rec.train_loss = train_loss;
      history.epochs.push_back(rec);
      if (on_epoch) on_epoch(rec);

      const bool stop = stopper.update(rec.val_loss);
      if (stopper.last_improved()) {
        best_state = model.state();
        best_index = static_cast<int>(history.epochs.size()) - 1;
      }
      if (stop) break;
    }
    model.load_state(best_state);
    history.stage_best_epochs.push_back(best_index);
    history.best_epoch = best_index;
    if (best_index >= 0) best_overall = history.epochs[static_cast<std::size_t>(best_index)].val_loss;
  }
  history.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return history;
}

}  // namespace adlabel
