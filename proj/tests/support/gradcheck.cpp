#include "gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "adlabel/ops.hpp"

namespace adlabel::testing {

namespace {

using Var = Variable<double>;
using T = Tensor<double>;

T channel_of(const T& t, std::int64_t f) {
  const auto n = t.dim(0), c = t.dim(1), hw = t.dim(2) * t.dim(3);
  T out(Shape{n, 1, t.dim(2), t.dim(3)});
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(t.data().begin() + (i * c + f) * hw, hw, out.data().begin() + i * hw);
  }
  return out;
}

void set_channel(T& t, std::int64_t f, const T& slice) {
  const auto n = t.dim(0), c = t.dim(1), hw = t.dim(2) * t.dim(3);
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(slice.data().begin() + i * hw, hw, t.data().begin() + (i * c + f) * hw);
  }
}

// kernel [F,C,k,k] -> [1,C,k,k]
T filter_of(const T& kernel, std::int64_t f) {
  const auto per = kernel.dim(1) * kernel.dim(2) * kernel.dim(3);
  T out(Shape{1, kernel.dim(1), kernel.dim(2), kernel.dim(3)});
  std::copy_n(kernel.data().begin() + f * per, per, out.data().begin());
  return out;
}

// kernel [G,F,k,k] -> [G,1,k,k]
T input_slice_of(const T& kernel, std::int64_t f) {
  const auto g = kernel.dim(0), c = kernel.dim(1), kk = kernel.dim(2) * kernel.dim(3);
  T out(Shape{g, 1, kernel.dim(2), kernel.dim(3)});
  for (std::int64_t i = 0; i < g; ++i) {
    std::copy_n(kernel.data().begin() + (i * c + f) * kk, kk, out.data().begin() + i * kk);
  }
  return out;
}

T element(const T& t, std::int64_t i) { return T(Shape{1}, std::vector<double>{t[static_cast<std::size_t>(i)]}); }

class Checker {
 public:
  Checker(MultitaskCnn<double>& model, const T& images, const T& labels, std::uint64_t seed, bool hold)
      : model_(model), labels_(labels), seed_(seed), hold_(hold) {
    const auto& layers = model_.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t k = 0; k < layers[i].params.size(); ++k) {
        owner_.resize(std::max(owner_.size(), layers[i].params[k] + 1));
        owner_[layers[i].params[k]] = {i, k};
      }
    }
    Tape<double> tape(false);
    Rng rng(seed_);
    ForwardOptions opt = options(rng);
    Var x(images, false);
    input_ = images;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = model_.forward_range(tape, x, i, i + 1, opt);
      acts_.push_back(x.tensor());
    }
  }

  double loss_from(std::size_t begin, const T& activation) {
    Tape<double> tape(false);
    Rng rng(seed_);
    const ForwardOptions opt = options(rng);
    const auto& layers = model_.layers();
    Var x(activation, false);
    for (std::size_t i = begin; i < layers.size(); ++i) {
      x = layers[i].kind == LayerKind::kRelu ? Var(apply_relu(x.tensor(), acts_[i - 1]), false)
                                             : model_.forward_range(tape, x, i, i + 1, opt);
    }
    return binary_cross_entropy(tape, x, labels_).tensor()[0];
  }

  // ReLU of `pre`, noting sign changes against the unperturbed `base`.
  T apply_relu(const T& pre, const T& base) {
    T out = pre;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool on = base[i] > 0;
      if ((pre[i] > 0) != on) crossed_ = true;
      out[i] = hold_ ? (on ? pre[i] : 0.0) : std::max(pre[i], 0.0);
    }
    return out;
  }

  bool take_crossed() {
    const bool c = crossed_;
    crossed_ = false;
    return c;
  }

  const T& input_of(std::size_t layer) const { return layer == 0 ? input_ : acts_[layer - 1]; }

  double perturbed(std::size_t param, std::size_t entry, double delta) {
    auto& value = model_.parameters()[param].value.tensor();
    const double saved = value[entry];
    value[entry] = saved + delta;
    double loss = 0;
    try {
      loss = evaluate(param, entry);
    } catch (...) {
      value[entry] = saved;
      throw;
    }
    value[entry] = saved;
    return loss;
  }

 private:
  ForwardOptions options(Rng& rng) const {
    ForwardOptions o;
    o.training = true;
    o.update_statistics = false;
    o.dropout_rng = &rng;
    return o;
  }

  double evaluate(std::size_t param, std::size_t entry) {
    const auto& layers = model_.layers();
    const auto [li, slot] = owner_[param];
    const LayerInfo& layer = layers[li];
    if (!layer.backbone) return loss_from(li, input_of(li));

    // Backbone block: conv at c, batch norm at c+1, relu at c+2.
    const std::size_t c = layer.kind == LayerKind::kConv ? li : li - 1;
    const LayerInfo& conv = layers[c];
    const LayerInfo& bn = layers[c + 1];
    const auto params = model_.parameters();
    const T& kernel = params[conv.params[0]].value.tensor();
    const std::int64_t per_filter = kernel.dim(1) * kernel.dim(2) * kernel.dim(3);
    const std::int64_t f = (layer.kind == LayerKind::kConv && slot == 0) ? static_cast<std::int64_t>(entry) / per_filter
                                                                          : static_cast<std::int64_t>(entry);

    Tape<double> tape(false);
    const Var z = layer.kind == LayerKind::kConv
                      ? conv2d(tape, Var(input_of(c), false), Var(filter_of(kernel, f), false),
                               Var(element(params[conv.params[1]].value.tensor(), f), false), conv.stride, conv.padding)
                      : Var(channel_of(acts_[c], f), false);
    BatchNormState<double> scratch(1);
    const Var normed = batch_norm(tape, z, Var(element(params[bn.params[0]].value.tensor(), f), false),
                                  Var(element(params[bn.params[1]].value.tensor(), f), false), scratch,
                                  BatchNormMode::kTrain);
    const T activated = apply_relu(normed.tensor(), channel_of(acts_[c + 1], f));

    const std::size_t next = c + 3;
    if (next >= layers.size() || layers[next].kind != LayerKind::kConv) {
      T a = acts_[c + 2];
      set_channel(a, f, activated);
      return loss_from(next, a);
    }
    T diff = activated;
    const T base = channel_of(acts_[c + 2], f);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= base[i];
    const LayerInfo& nconv = layers[next];
    const T& nkernel = params[nconv.params[0]].value.tensor();
    const Var dz = conv2d(tape, Var(diff, false), Var(input_slice_of(nkernel, f), false),
                          Var(T(Shape{nkernel.dim(0)}), false), nconv.stride, nconv.padding);
    T z_next = acts_[next];
    for (std::size_t i = 0; i < z_next.size(); ++i) z_next[i] += dz.tensor()[i];
    return loss_from(next + 1, z_next);
  }

  MultitaskCnn<double>& model_;
  T labels_;
  std::uint64_t seed_;
  bool hold_;
  bool crossed_ = false;
  T input_;
  std::vector<T> acts_;
  std::vector<std::pair<std::size_t, std::size_t>> owner_;  // param -> (layer, slot)
};

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

double model_loss(MultitaskCnn<double>& model, const T& images, const T& labels, std::uint64_t dropout_seed) {
  Tape<double> tape(false);
  Rng rng(dropout_seed);
  ForwardOptions o;
  o.training = true;
  o.update_statistics = false;
  o.dropout_rng = &rng;
  const Var p = model.forward(tape, images, o);
  return binary_cross_entropy(tape, p, labels).tensor()[0];
}

double perturbed_loss(MultitaskCnn<double>& model, const T& images, const T& labels, std::size_t param_index,
                      std::size_t entry, double delta, std::uint64_t dropout_seed, bool hold_activation_pattern) {
  Checker checker(model, images, labels, dropout_seed, hold_activation_pattern);
  return checker.perturbed(param_index, entry, delta);
}

GradCheckReport check_model_gradients(MultitaskCnn<double>& model, const T& images, const T& labels,
                                      const GradCheckOptions& options, std::size_t stride) {
  const auto start = std::chrono::steady_clock::now();
  GradCheckReport report;

  model.zero_grad();
  {
    Tape<double> tape;
    Rng rng(options.dropout_seed);
    ForwardOptions o;
    o.training = true;
    o.update_statistics = false;
    o.dropout_rng = &rng;
    const Var p = model.forward(tape, images, o);
    tape.backward(binary_cross_entropy(tape, p, labels));
  }
  std::vector<std::vector<double>> analytic;
  for (auto& p : model.parameters()) {
    const auto& t = p.value.tensor();
    analytic.emplace_back(t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                                       : std::vector<double>(t.size(), 0.0));
  }
  model.zero_grad();

  Checker checker(model, images, labels, options.dropout_seed, options.hold_activation_pattern);
  const double h = options.step;
  for (std::size_t pi = 0; pi < model.parameters().size(); ++pi) {
    ParameterReport pr;
    pr.name = model.parameters()[pi].name;
    double diff2 = 0, a2 = 0, n2 = 0;
    const std::size_t n = model.parameters()[pi].value.tensor().size();
    for (std::size_t e = 0; e < n; e += std::max<std::size_t>(stride, 1)) {
      const double numeric = (checker.perturbed(pi, e, h) - checker.perturbed(pi, e, -h)) / (2 * h);
      if (checker.take_crossed()) ++pr.kink_crossings;
      const double a = analytic[pi][e];
      const double err = relative_error(a, numeric, options.scale_floor);
      ++pr.count;
      pr.max_abs_gradient = std::max(pr.max_abs_gradient, std::abs(a));
      if (!(err <= options.tolerance)) ++pr.failures;
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      if (err > pr.max_rel_error || std::isnan(err)) pr.max_rel_error = err;
    }
    pr.tensor_rel_error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), options.scale_floor});
    report.max_tensor_rel_error = std::max(report.max_tensor_rel_error, pr.tensor_rel_error);
    report.checked += pr.count;
    report.failures += pr.failures;
    report.kink_crossings += pr.kink_crossings;
    if (pr.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = pr.max_rel_error;
      report.worst = pr.name;
    }
    report.params.push_back(std::move(pr));
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace adlabel::testing
