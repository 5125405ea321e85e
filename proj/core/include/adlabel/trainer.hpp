#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "adlabel/dataset.hpp"
#include "adlabel/model.hpp"

namespace adlabel {

inline constexpr int kStageCount = 3;

struct TrainConfig {
  int batch_size = 32;
  int max_epochs_per_stage = 30;
  std::array<int, kStageCount> patience{2, 3, 3};
  std::array<double, kStageCount> learning_rates{1e-3, 1e-4, 1e-5};
  bool use_bias_init = true;
  bool use_progressive_unfreezing = false;
  bool freeze_batchnorm = false;
  std::uint64_t seed = 42;

  // patience < max epochs; learning rates positive and strictly decreasing.
  void validate() const;
};

// Keras-style early stopping on a loss: an epoch improves only when its loss
// is strictly lower than the best so far; training stops once `patience`
// consecutive epochs fail to improve.
class EarlyStopping {
 public:
  // `baseline` is the loss an epoch must beat to count as an improvement.
  explicit EarlyStopping(int patience, double baseline = std::numeric_limits<double>::infinity());

  // Returns true when training should stop after this epoch.
  bool update(double loss);
  bool last_improved() const { return last_improved_; }
  // 1-based epoch with the best loss; 0 before any update.
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  int epochs_ = 0;
  int wait_ = 0;
  int best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  bool last_improved_ = false;
};

// Reshuffled index batches for one epoch; the last short batch is kept.
std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, int batch_size, std::uint64_t epoch_seed);

std::uint64_t epoch_seed(std::uint64_t seed, int stage, int epoch);

struct EpochRecord {
  int stage = 0;
  int epoch = 0;  // 1-based within the stage
  double train_loss = 0;
  double val_loss = 0;
  std::array<std::optional<double>, kTaskCount> val_auc{};
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // index into epochs of the lowest validation loss
  std::vector<int> stage_best_epochs;  // per stage, index into epochs
  double seconds = 0;
};

std::string history_to_json(const TrainHistory& history, int indent = 2);
std::string format_epoch(const EpochRecord& record);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains in place. With progressive unfreezing runs stages 0, 1, 2 at their
// learning rates and patience; otherwise one all-trainable stage at the
// stage-1 rate and patience. Each stage restores its best-validation weights
// and starts from fresh Adam moments. DataError on an empty split,
// NumericError (naming the batch) on a non-finite loss. Later stages only
// replace the restored weights when they beat the best loss seen so far, so
// the returned model always carries the lowest recorded validation loss.
TrainHistory train(MultitaskCnn<float>& model, const Dataset& train_data, const Dataset& val_data,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

// Validation loss and per-task AUC of the current weights.
EpochRecord evaluate_epoch(const MultitaskCnn<float>& model, const Dataset& data);

}  // namespace adlabel
