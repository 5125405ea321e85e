#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "adlabel/error.hpp"
#include "adlabel/ops.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

namespace adlabel {
namespace {

using V = Variable<double>;
using T = Tensor<double>;
using testing::relative_error;

T random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  T t(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, -1, 1);
  return t;
}

// Checks d(loss)/d(input) for every entry of every variable in `inputs`
// against central differences of `loss`.
void expect_gradients(std::vector<V> inputs, const std::function<V(Tape<double>&)>& loss, double h = 1e-5,
                      double tol = 1e-6) {
  for (auto& v : inputs) {
    v.set_requires_grad(true);
    v.tensor().clear_grad();
  }
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  Tape<double> quiet(false);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    T& t = inputs[k].tensor();
    ASSERT_TRUE(t.has_grad()) << "input " << k;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = loss(quiet).tensor()[0];
      t[i] = saved - h;
      const double down = loss(quiet).tensor()[0];
      t[i] = saved;
      const double numeric = (up - down) / (2 * h);
      EXPECT_LE(relative_error(t.grad()[i], numeric, 1e-8), tol) << "input " << k << " entry " << i;
    }
  }
}

TEST(Backward, IdentityParameterGetsUnitGradient) {
  auto p = make_parameter<double>("w", T(Shape{1}, 3.0));
  Tape<double> tape;
  tape.backward(p.value);
  EXPECT_DOUBLE_EQ(p.value.tensor().grad()[0], 1.0);
}

TEST(Backward, SigmoidSlopeAtZero) {
  V x(T(Shape{1}, 0.0), true);
  Tape<double> tape;
  tape.backward(sigmoid(tape, x));
  EXPECT_DOUBLE_EQ(x.tensor().grad()[0], 0.25);
}

TEST(Backward, SecondCallWithoutForwardIsError) {
  V x(T(Shape{1}, 0.3), true);
  Tape<double> tape;
  const V y = sigmoid(tape, x);
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), Error);
  tape.reset();
  EXPECT_NO_THROW(tape.backward(sigmoid(tape, x)));
}

TEST(Backward, NonScalarLossIsShapeError) {
  V x(T(Shape{2}, 0.3), true);
  Tape<double> tape;
  EXPECT_THROW(tape.backward(sigmoid(tape, x)), ShapeError);
}

TEST(Backward, FrozenParameterReceivesNoGradient) {
  auto w = make_parameter<double>("w", random_tensor(Shape{3, 3}, 1), false);
  V x(random_tensor(Shape{2, 3}, 2), true);
  Tape<double> tape;
  const V p = sigmoid(tape, dense(tape, x, w.value, V(T(Shape{3}))));
  tape.backward(binary_cross_entropy(tape, p, T(Shape{2, 3}, 1.0)));
  EXPECT_FALSE(w.value.tensor().has_grad());
  EXPECT_TRUE(x.tensor().has_grad());
}

TEST(OpGradients, Conv2d) {
  const V x(random_tensor(Shape{2, 2, 5, 5}, 3)), k(random_tensor(Shape{3, 2, 3, 3}, 4)),
      b(random_tensor(Shape{3}, 5));
  const T y = random_tensor(Shape{2, 3}, 6);
  expect_gradients({x, k, b}, [&](Tape<double>& t) {
    return binary_cross_entropy(t, sigmoid(t, global_average_pool(t, conv2d(t, x, k, b, 2, 1))), y);
  });
}

TEST(OpGradients, BatchNormScaleShiftAndInput) {
  const V x(random_tensor(Shape{3, 2, 4, 4}, 7)), g(random_tensor(Shape{2}, 8)), s(random_tensor(Shape{2}, 9));
  const V k(random_tensor(Shape{2, 2, 1, 1}, 10));
  const T y = random_tensor(Shape{3, 2}, 11);
  expect_gradients({x, g, s}, [&](Tape<double>& t) {
    BatchNormState<double> state(2);
    // The 1x1 conv mixes channels so the loss is not invariant to the shift.
    const V z = batch_norm(t, conv2d(t, x, k, V(T(Shape{2})), 1, 0), g, s, state, BatchNormMode::kTrain);
    return binary_cross_entropy(t, sigmoid(t, global_average_pool(t, z)), y);
  });
}

TEST(OpGradients, BatchNormEvalMode) {
  const V x(random_tensor(Shape{2, 2, 3, 3}, 12)), g(random_tensor(Shape{2}, 13)), s(random_tensor(Shape{2}, 14));
  const T y = random_tensor(Shape{2, 2}, 15);
  BatchNormState<double> state(2);
  state.running_mean[1] = 0.4;
  state.running_var[0] = 1.7;
  expect_gradients({x, g, s}, [&](Tape<double>& t) {
    return binary_cross_entropy(
        t, sigmoid(t, global_average_pool(t, batch_norm(t, x, g, s, state, BatchNormMode::kEval))), y);
  });
}

TEST(OpGradients, DenseReluDropout) {
  const V x(random_tensor(Shape{4, 5}, 16)), k(random_tensor(Shape{5, 3}, 17)), b(random_tensor(Shape{3}, 18));
  const T y = random_tensor(Shape{4, 3}, 19);
  expect_gradients({x, k, b}, [&](Tape<double>& t) {
    Rng rng(3);  // same mask on every evaluation
    const V h = dropout(t, relu(t, x), 0.4, DropoutMode::kTrain, rng);
    return binary_cross_entropy(t, sigmoid(t, dense(t, h, k, b)), y);
  });
}

MultitaskCnn<double> two_block_model() {
  ModelConfig c;
  c.input_resolution = 16;
  c.backbone_blocks = {{4, 3, 2}, {6, 3, 2}};
  return MultitaskCnn<double>::build(c, 3);
}

testing::Batch<double> random_batch(std::uint64_t seed) {
  testing::Batch<double> b{random_tensor(Shape{4, 3, 16, 16}, seed), T(Shape{4, 3})};
  for (auto& v : b.images.data()) v = 0.5 + 0.5 * v;
  for (std::size_t i = 0; i < b.labels.size(); ++i) b.labels[i] = (i * 7 + seed) % 3 == 0 ? 1 : 0;
  return b;
}

TEST(ModelGradients, TwoBlockModelMatchesFiniteDifferences) {
  auto model = two_block_model();
  const auto batch = random_batch(9);
  const auto report = testing::check_model_gradients(model, batch.images, batch.labels);
  EXPECT_EQ(report.checked, model.parameter_count());
  for (const auto& p : report.params) EXPECT_LE(p.tensor_rel_error, 1e-4) << p.name;
}

TEST(ModelGradients, PlainDifferencesAgreeAtSmallStep) {
  // Without holding the ReLU pattern, a small enough step rarely crosses a
  // kink and the raw secant agrees entry by entry.
  auto model = MultitaskCnn<double>::build(ModelConfig{}, 42);
  const auto batch = testing::synthetic_batch<double>(4, 64, 11);
  testing::GradCheckOptions opt;
  opt.step = 1e-5;
  opt.hold_activation_pattern = false;
  const auto report = testing::check_model_gradients(model, batch.images, batch.labels, opt, 97);
  EXPECT_GT(report.checked, 900u);
  EXPECT_LE(report.max_tensor_rel_error, 1e-4) << report.worst;
}

TEST(ModelGradients, IncrementalLossMatchesFullForward) {
  auto model = two_block_model();
  const auto batch = random_batch(2);
  const double base = testing::model_loss(model, batch.images, batch.labels, 7);
  for (std::size_t pi = 0; pi < model.parameters().size(); ++pi) {
    const std::size_t entry = model.parameters()[pi].value.tensor().size() / 2;
    const double fast = testing::perturbed_loss(model, batch.images, batch.labels, pi, entry, 1e-3, 7);
    auto& t = model.parameters()[pi].value.tensor();
    t[entry] += 1e-3;
    const double full = testing::model_loss(model, batch.images, batch.labels, 7);
    t[entry] -= 1e-3;
    EXPECT_NEAR(fast, full, 1e-12 * std::max(1.0, std::abs(base))) << model.parameters()[pi].name;
  }
}

}  // namespace
}  // namespace adlabel
