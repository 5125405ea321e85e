#include "adlabel/model.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"

namespace adlabel {

void ModelConfig::validate() const {
  if (input_resolution < 1) throw ConfigError("model: input_resolution must be positive");
  if (channels != 3) throw ConfigError("model: channels must be 3 (RGB)");
  if (backbone_blocks.empty()) throw ConfigError("model: backbone_blocks must not be empty");
  for (const auto& b : backbone_blocks) {
    if (b.filters < 1 || b.kernel_size < 1 || b.stride < 1) {
      throw ConfigError("model: backbone block values must be positive");
    }
    if (b.kernel_size % 2 == 0) throw ConfigError("model: backbone kernel sizes must be odd");
  }
  if (input_resolution % cumulative_stride() != 0) {
    throw ConfigError("model: input_resolution " + std::to_string(input_resolution) +
                      " is not divisible by the cumulative stride " + std::to_string(cumulative_stride()));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("model: dropout_rate must lie in [0, 1)");
  }
  if (dropout_rate != 0.4 && dropout_rate != 0.5) {
    if (!allow_nonstandard_dropout) {
      throw ConfigError("model: dropout_rate must be 0.4 or 0.5 (set allow_nonstandard_dropout to override)");
    }
    std::cerr << "warning: non-standard dropout rate " << dropout_rate << '\n';
  }
}

int ModelConfig::cumulative_stride() const {
  int s = 1;
  for (const auto& b : backbone_blocks) s *= b.stride;
  return s;
}

std::string model_config_to_json(const ModelConfig& config) {
  nlohmann::json j;
  j["input_resolution"] = config.input_resolution;
  j["channels"] = config.channels;
  j["backbone_blocks"] = nlohmann::json::array();
  for (const auto& b : config.backbone_blocks) {
    j["backbone_blocks"].push_back({{"filters", b.filters}, {"kernel_size", b.kernel_size}, {"stride", b.stride}});
  }
  j["dropout_rate"] = config.dropout_rate;
  j["allow_nonstandard_dropout"] = config.allow_nonstandard_dropout;
  j["head_tasks"] = kTaskNames;
  return j.dump(2);
}

ModelConfig model_config_from_json(std::string_view json_text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& [key, value] : j.items()) {
      if (key == "input_resolution") {
        c.input_resolution = value.get<int>();
      } else if (key == "channels") {
        c.channels = value.get<int>();
      } else if (key == "dropout_rate") {
        c.dropout_rate = value.get<double>();
      } else if (key == "allow_nonstandard_dropout") {
        c.allow_nonstandard_dropout = value.get<bool>();
      } else if (key == "backbone_blocks") {
        c.backbone_blocks.clear();
        for (const auto& b : value) {
          c.backbone_blocks.push_back({b.at("filters").get<int>(), b.at("kernel_size").get<int>(),
                                       b.at("stride").get<int>()});
        }
      } else if (key == "head_tasks") {
        if (value.get<std::vector<std::string>>() !=
            std::vector<std::string>(kTaskNames.begin(), kTaskNames.end())) {
          throw ConfigError("model: head_tasks must be [vaping, compliant_label, noncompliant_label]");
        }
      } else {
        throw ConfigError("model: unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kBatchNorm: return "batch_norm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kGlobalAveragePool: return "global_average_pool";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "?";
}

namespace {

LayerInfo make_layer(LayerKind kind, std::string name, bool backbone = false) {
  LayerInfo l{};
  l.kind = kind;
  l.name = std::move(name);
  l.backbone = backbone;
  return l;
}

}  // namespace

template <typename T>
MultitaskCnn<T> MultitaskCnn<T>::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  MultitaskCnn m;
  m.config_ = config;
  Rng rng(seed);

  auto he_normal = [&rng](Shape shape, std::int64_t fan_in) {
    Tensor<T> t(std::move(shape));
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
    return t;
  };

  std::int64_t in_channels = config.channels;
  for (std::size_t b = 0; b < config.backbone_blocks.size(); ++b) {
    const auto& spec = config.backbone_blocks[b];
    const std::string block = "backbone.block" + std::to_string(b + 1);
    const std::int64_t k = spec.kernel_size;

    LayerInfo conv = make_layer(LayerKind::kConv, block + ".conv", true);
    conv.stride = spec.stride;
    conv.padding = spec.kernel_size / 2;
    conv.params = {m.params_.size(), m.params_.size() + 1};
    m.params_.push_back(make_parameter<T>(block + ".conv.kernel",
                                          he_normal(Shape{spec.filters, in_channels, k, k}, in_channels * k * k)));
    m.params_.push_back(make_parameter<T>(block + ".conv.bias", Tensor<T>(Shape{spec.filters})));
    m.layers_.push_back(std::move(conv));

    LayerInfo bn = make_layer(LayerKind::kBatchNorm, block + ".bn", true);
    bn.batch_norm_index = static_cast<int>(m.bn_states_.size());
    bn.params = {m.params_.size(), m.params_.size() + 1};
    m.params_.push_back(make_parameter<T>(block + ".bn.scale", Tensor<T>(Shape{spec.filters}, T(1))));
    m.params_.push_back(make_parameter<T>(block + ".bn.shift", Tensor<T>(Shape{spec.filters})));
    m.bn_states_.emplace_back(spec.filters);
    m.layers_.push_back(std::move(bn));

    m.layers_.push_back(make_layer(LayerKind::kRelu, block + ".relu", true));
    in_channels = spec.filters;
  }

  m.layers_.push_back(make_layer(LayerKind::kGlobalAveragePool, "head.pool"));
  m.layers_.push_back(make_layer(LayerKind::kDropout, "head.dropout"));
  LayerInfo dense = make_layer(LayerKind::kDense, "head.dense");
  dense.params = {m.params_.size(), m.params_.size() + 1};
  m.params_.push_back(make_parameter<T>(
      "head.dense.kernel", he_normal(Shape{in_channels, static_cast<std::int64_t>(kTaskCount)}, in_channels)));
  m.params_.push_back(make_parameter<T>("head.dense.bias", Tensor<T>(Shape{static_cast<std::int64_t>(kTaskCount)})));
  m.layers_.push_back(std::move(dense));
  m.layers_.push_back(make_layer(LayerKind::kSigmoid, "head.sigmoid"));
  return m;
}

template <typename T>
MultitaskCnn<T>::MultitaskCnn(const MultitaskCnn& other)
    : config_(other.config_),
      bn_states_(other.bn_states_),
      layers_(other.layers_),
      freeze_batchnorm_(other.freeze_batchnorm_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(Parameter<T>{p.name, p.value.clone()});
}

template <typename T>
MultitaskCnn<T>& MultitaskCnn<T>::operator=(const MultitaskCnn& other) {
  if (this != &other) *this = MultitaskCnn(other);
  return *this;
}

template <typename T>
Parameter<T>& MultitaskCnn<T>::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error("model has no parameter named " + std::string(name));
}

template <typename T>
std::size_t MultitaskCnn<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.tensor().size();
  return n;
}

template <typename T>
std::size_t MultitaskCnn<T>::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable()) n += p.value.tensor().size();
  }
  return n;
}

template <typename T>
std::size_t MultitaskCnn<T>::backbone_layer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += (l.backbone && l.parameterized()) ? 1 : 0;
  return n;
}

template <typename T>
std::size_t MultitaskCnn<T>::trainable_backbone_layer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (l.backbone && l.parameterized() && params_[l.params.front()].trainable()) ++n;
  }
  return n;
}

template <typename T>
void MultitaskCnn<T>::check_input(const Shape& s) const {
  const std::int64_t r = config_.input_resolution;
  if (s.size() != 4 || s[1] != config_.channels || s[2] != r || s[3] != r) {
    throw ShapeError("model expects a [N," + std::to_string(config_.channels) + "," + std::to_string(r) + "," +
                     std::to_string(r) + "] batch, got " + shape_string(s));
  }
}

template <typename T>
Variable<T> MultitaskCnn<T>::run_layer(std::size_t index, Tape<T>& tape, const Variable<T>& x,
                                       const ForwardOptions& options, BatchNormState<T>* mutable_state) const {
  const LayerInfo& layer = layers_[index];
  auto param = [&](std::size_t k) -> const Variable<T>& { return params_[layer.params[k]].value; };
  switch (layer.kind) {
    case LayerKind::kConv:
      return conv2d(tape, x, param(0), param(1), layer.stride, layer.padding);
    case LayerKind::kBatchNorm: {
      const auto& state = bn_states_[static_cast<std::size_t>(layer.batch_norm_index)];
      const bool layer_trainable = params_[layer.params[0]].trainable();
      if (!options.training || freeze_batchnorm_ || !layer_trainable) {
        return batch_norm_inference(tape, x, param(0), param(1), state);
      }
      if (mutable_state != nullptr && options.update_statistics) {
        return batch_norm(tape, x, param(0), param(1), *mutable_state, BatchNormMode::kTrain);
      }
      BatchNormState<T> scratch = state;
      return batch_norm(tape, x, param(0), param(1), scratch, BatchNormMode::kTrain);
    }
    case LayerKind::kRelu:
      return relu(tape, x);
    case LayerKind::kGlobalAveragePool:
      return global_average_pool(tape, x);
    case LayerKind::kDropout: {
      if (!options.training) {
        Rng unused;
        return dropout(tape, x, config_.dropout_rate, DropoutMode::kEval, unused);
      }
      if (options.dropout_rng == nullptr) throw Error("training forward pass needs a dropout rng");
      return dropout(tape, x, config_.dropout_rate, DropoutMode::kTrain, *options.dropout_rng);
    }
    case LayerKind::kDense:
      return dense(tape, x, param(0), param(1));
    case LayerKind::kSigmoid:
      return sigmoid(tape, x);
  }
  throw Error("unknown layer kind");
}

template <typename T>
Variable<T> MultitaskCnn<T>::forward(Tape<T>& tape, const Tensor<T>& images, const ForwardOptions& options) {
  check_input(images.shape());
  return forward_range(tape, Variable<T>(images, false), 0, layers_.size(), options);
}

template <typename T>
Variable<T> MultitaskCnn<T>::forward_range(Tape<T>& tape, const Variable<T>& activation, std::size_t begin,
                                           std::size_t end, const ForwardOptions& options) {
  if (begin > end || end > layers_.size()) throw Error("forward_range: bad layer range");
  Variable<T> x = activation;
  for (std::size_t i = begin; i < end; ++i) {
    const int bn = layers_[i].batch_norm_index;
    x = run_layer(i, tape, x, options, bn >= 0 ? &bn_states_[static_cast<std::size_t>(bn)] : nullptr);
  }
  return x;
}

template <typename T>
Tensor<T> MultitaskCnn<T>::predict(const Tensor<T>& images) const {
  check_input(images.shape());
  Tape<T> tape(false);
  Variable<T> x(images, false);
  const ForwardOptions eval{};
  for (std::size_t i = 0; i < layers_.size(); ++i) x = run_layer(i, tape, x, eval, nullptr);
  return x.tensor();
}

template <typename T>
void MultitaskCnn<T>::init_output_bias(const LabelCounts& counts) {
  auto& bias = parameter("head.dense.bias").value.tensor();
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    if (counts[t].positives < 1 || counts[t].negatives < 1) {
      throw ConfigError("bias initialization needs at least one positive and one negative for task " +
                        std::string(kTaskNames[t]) + " (got " + std::to_string(counts[t].positives) + "/" +
                        std::to_string(counts[t].negatives) + "); disable bias init for this data");
    }
  }
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    bias[t] = static_cast<T>(
        std::log(static_cast<double>(counts[t].positives) / static_cast<double>(counts[t].negatives)));
  }
}

template <typename T>
void MultitaskCnn<T>::set_stage_trainability(int stage) {
  if (stage < 0 || stage > 2) throw ConfigError("training stage must be 0, 1 or 2");
  const std::size_t total = backbone_layer_count();
  const std::size_t unfrozen = stage == 0 ? 0 : stage == 1 ? (total * 20 + 99) / 100 : total;
  std::size_t seen = 0;
  for (const auto& layer : layers_) {
    if (!layer.parameterized()) continue;
    bool on = true;
    if (layer.backbone) {
      on = seen >= total - unfrozen;
      ++seen;
    }
    if (layer.kind == LayerKind::kBatchNorm && freeze_batchnorm_) on = false;
    for (auto idx : layer.params) params_[idx].set_trainable(on);
  }
}

template <typename T>
void MultitaskCnn<T>::set_freeze_batchnorm(bool frozen) {
  freeze_batchnorm_ = frozen;
  if (!frozen) return;
  for (const auto& layer : layers_) {
    if (layer.kind != LayerKind::kBatchNorm) continue;
    for (auto idx : layer.params) params_[idx].set_trainable(false);
  }
}

template <typename T>
void MultitaskCnn<T>::zero_grad() {
  for (auto& p : params_) p.value.tensor().clear_grad();
}

template <typename T>
std::vector<NamedTensor<T>> MultitaskCnn<T>::state() const {
  std::vector<NamedTensor<T>> out;
  for (const auto& p : params_) {
    Tensor<T> copy(p.value.shape(), std::vector<T>(p.value.tensor().data().begin(), p.value.tensor().data().end()));
    out.push_back({p.name, std::move(copy)});
  }
  for (const auto& layer : layers_) {
    if (layer.batch_norm_index < 0) continue;
    const auto& s = bn_states_[static_cast<std::size_t>(layer.batch_norm_index)];
    out.push_back({layer.name + ".running_mean", s.running_mean});
    out.push_back({layer.name + ".running_var", s.running_var});
  }
  return out;
}

template <typename T>
void MultitaskCnn<T>::load_state(const std::vector<NamedTensor<T>>& entries) {
  std::map<std::string, const Tensor<T>*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e.value;
  auto assign = [&](const std::string& name, Tensor<T>& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint is missing " + name);
    if (it->second->shape() != dst.shape()) {
      throw DataError("checkpoint entry " + name + " has shape " + shape_string(it->second->shape()) +
                      ", model expects " + shape_string(dst.shape()));
    }
    std::copy(it->second->data().begin(), it->second->data().end(), dst.data().begin());
  };
  for (auto& p : params_) assign(p.name, p.value.tensor());
  for (const auto& layer : layers_) {
    if (layer.batch_norm_index < 0) continue;
    auto& s = bn_states_[static_cast<std::size_t>(layer.batch_norm_index)];
    assign(layer.name + ".running_mean", s.running_mean);
    assign(layer.name + ".running_var", s.running_var);
  }
}

template <typename T>
void MultitaskCnn<T>::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_checkpoint<T>(dir / kCheckpointFile, state());
  std::ofstream out(dir / kModelConfigFile, std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / kModelConfigFile).string());
  out << model_config_to_json(config_) << '\n';
}

template <typename T>
MultitaskCnn<T> MultitaskCnn<T>::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / kModelConfigFile);
  if (!in) throw DataError("cannot read model config " + (dir / kModelConfigFile).string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto model = build(model_config_from_json(ss.str()), 0);
  model.load_state(load_checkpoint<T>(dir / kCheckpointFile));
  return model;
}

template class MultitaskCnn<float>;
template class MultitaskCnn<double>;

}  // namespace adlabel
