#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adlabel/autograd.hpp"
#include "adlabel/checkpoint.hpp"
#include "adlabel/ops.hpp"

namespace adlabel {

inline constexpr std::size_t kTaskCount = 3;
inline constexpr std::array<std::string_view, kTaskCount> kTaskNames{"vaping", "compliant_label",
                                                                     "noncompliant_label"};

struct ConvBlockSpec {
  int filters = 16;
  int kernel_size = 3;
  int stride = 2;

  bool operator==(const ConvBlockSpec&) const = default;
};

struct ModelConfig {
  int input_resolution = 64;
  int channels = 3;
  std::vector<ConvBlockSpec> backbone_blocks{{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
  double dropout_rate = 0.4;
  // Accept a dropout rate other than 0.4/0.5 (a warning is printed).
  bool allow_nonstandard_dropout = false;

  // ConfigError on anything that cannot be built.
  void validate() const;
  int cumulative_stride() const;
  int feature_dim() const { return backbone_blocks.empty() ? channels : backbone_blocks.back().filters; }

  bool operator==(const ModelConfig&) const = default;
};

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view json_text);

struct TaskCounts {
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};
using LabelCounts = std::array<TaskCounts, kTaskCount>;

enum class LayerKind { kConv, kBatchNorm, kRelu, kGlobalAveragePool, kDropout, kDense, kSigmoid };
std::string_view layer_kind_name(LayerKind kind);

struct LayerInfo {
  LayerKind kind;
  std::string name;
  bool backbone = false;
  std::vector<std::size_t> params;  // indices into parameters()
  int batch_norm_index = -1;
  int stride = 1;
  int padding = 0;

  bool parameterized() const { return !params.empty(); }
};

struct ForwardOptions {
  bool training = false;
  // When false, train-mode batch norm still uses batch statistics but leaves
  // the running statistics alone (used by finite-difference checks).
  bool update_statistics = true;
  Rng* dropout_rng = nullptr;  // required when training
};

// conv/batchnorm/relu blocks -> global average pool -> dropout -> dense(3) -> sigmoid.
template <typename T>
class MultitaskCnn {
 public:
  static MultitaskCnn build(const ModelConfig& config, std::uint64_t seed);

  // Copies are deep: parameters never alias between models.
  MultitaskCnn(const MultitaskCnn& other);
  MultitaskCnn& operator=(const MultitaskCnn& other);
  MultitaskCnn(MultitaskCnn&&) noexcept = default;
  MultitaskCnn& operator=(MultitaskCnn&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  std::span<Parameter<T>> parameters() { return params_; }
  std::span<const Parameter<T>> parameters() const { return params_; }
  Parameter<T>& parameter(std::string_view name);
  const std::vector<LayerInfo>& layers() const { return layers_; }
  std::span<const BatchNormState<T>> batch_norm_states() const { return bn_states_; }

  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;
  // Parameterized backbone layers (conv and batch norm); the unit of staged unfreezing.
  std::size_t backbone_layer_count() const;
  std::size_t trainable_backbone_layer_count() const;

  // Full forward pass on a [N,C,H,W] batch; returns [N,3] probabilities.
  Variable<T> forward(Tape<T>& tape, const Tensor<T>& images, const ForwardOptions& options);
  // Runs layers [begin, end) starting from `activation`.
  Variable<T> forward_range(Tape<T>& tape, const Variable<T>& activation, std::size_t begin, std::size_t end,
                            const ForwardOptions& options);
  // Eval-mode probabilities; never mutates the model.
  Tensor<T> predict(const Tensor<T>& images) const;

  // Sets each output bias to ln(positives/negatives). ConfigError when a count is zero.
  void init_output_bias(const LabelCounts& counts);
  // 0: backbone frozen; 1: head + last ceil(20% of L) backbone layers; 2: all.
  void set_stage_trainability(int stage);
  void set_freeze_batchnorm(bool frozen);
  bool freeze_batchnorm() const { return freeze_batchnorm_; }

  void zero_grad();

  // Parameters followed by batch-norm running statistics.
  std::vector<NamedTensor<T>> state() const;
  void load_state(const std::vector<NamedTensor<T>>& entries);

  void save(const std::filesystem::path& dir) const;
  static MultitaskCnn load(const std::filesystem::path& dir);

 private:
  MultitaskCnn() = default;
  void check_input(const Shape& shape) const;
  Variable<T> run_layer(std::size_t index, Tape<T>& tape, const Variable<T>& x, const ForwardOptions& options,
                        BatchNormState<T>* mutable_state) const;

  ModelConfig config_;
  std::vector<Parameter<T>> params_;
  std::vector<BatchNormState<T>> bn_states_;
  std::vector<LayerInfo> layers_;
  bool freeze_batchnorm_ = false;
};

inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kModelConfigFile = "model.json";

extern template class MultitaskCnn<float>;
extern template class MultitaskCnn<double>;

}  // namespace adlabel
