#include "adlabel/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "adlabel/error.hpp"

namespace adlabel {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
bool wants_grad(const Tape<T>& tape, std::initializer_list<const Variable<T>*> inputs) {
  if (!tape.recording()) return false;
  for (const auto* v : inputs) {
    if (v->requires_grad()) return true;
  }
  return false;
}

void expect_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     shape_string(s));
  }
}

template <typename T>
Variable<T> make_output(Tensor<T> value, bool requires_grad, const char* op) {
  value.require_finite(op);
  return Variable<T>(std::move(value), requires_grad);
}

struct ConvGeometry {
  std::int64_t n, c, h, w, f, kh, kw, ho, wo;
  int stride, padding;
  std::int64_t patch() const { return c * kh * kw; }
  std::int64_t positions() const { return ho * wo; }
};

// Unrolls image `n` into a [C*kh*kw, Ho*Wo] column matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const std::int64_t positions = g.positions();
  for (std::int64_t c = 0; c < g.c; ++c) {
    const T* plane = image + c * g.h * g.w;
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * positions;
        for (std::int64_t oy = 0; oy < g.ho; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ki;
          T* out = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(out, out + g.wo, T(0));
            continue;
          }
          const T* src = plane + iy * g.w;
          for (std::int64_t ox = 0; ox < g.wo; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kj;
            out[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* image_grad) {
  const std::int64_t positions = g.positions();
  for (std::int64_t c = 0; c < g.c; ++c) {
    T* plane = image_grad + c * g.h * g.w;
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * positions;
        for (std::int64_t oy = 0; oy < g.ho; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ki;
          if (iy < 0 || iy >= g.h) continue;
          T* dst = plane + iy * g.w;
          const T* in = row + oy * g.wo;
          for (std::int64_t ox = 0; ox < g.wo; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void Tape<T>::backward(const Variable<T>& loss) {
  if (consumed_) throw Error("backward() called twice without a new forward pass");
  if (loss.tensor().size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  consumed_ = true;
  loss.tensor().ensure_grad()[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

template <typename T>
Variable<T> conv2d(Tape<T>& tape, const Variable<T>& input, const Variable<T>& kernel,
                   const Variable<T>& bias, int stride, int padding) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  expect_rank(xs, 4, "conv2d", "input");
  expect_rank(ks, 4, "conv2d", "kernel");
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  if (padding < 0) throw ShapeError("conv2d: padding must be non-negative");
  if (ks[1] != xs[1]) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(ks[1]) + " input channels, input " +
                     shape_string(xs) + " has " + std::to_string(xs[1]));
  }
  if (bias.shape() != Shape{ks[0]}) {
    throw ShapeError("conv2d: bias shape " + shape_string(bias.shape()) + " does not match " +
                     std::to_string(ks[0]) + " filters");
  }
  if (ks[2] > xs[2] + 2 * padding || ks[3] > xs[3] + 2 * padding) {
    throw ShapeError("conv2d: kernel " + shape_string(ks) + " larger than padded input " + shape_string(xs));
  }
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3], 0, 0, stride, padding};
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;

  const bool grad = wants_grad(tape, {&input, &kernel, &bias});
  const std::int64_t patch = g.patch();
  const std::int64_t positions = g.positions();

  Tensor<T> out(Shape{g.n, g.f, g.ho, g.wo});
  // Columns are kept for the kernel gradient; otherwise one scratch buffer.
  const bool keep_cols = grad && kernel.requires_grad();
  std::vector<T> cols(static_cast<std::size_t>((keep_cols ? g.n : 1) * patch * positions));

  ConstMatrixMap<T> k(kernel.tensor().data().data(), g.f, patch);
  const auto& b = bias.tensor();
  for (std::int64_t n = 0; n < g.n; ++n) {
    T* col = cols.data() + (keep_cols ? n * patch * positions : 0);
    im2col(input.tensor().data().data() + n * g.c * g.h * g.w, g, col);
    MatrixMap<T> o(out.data().data() + n * g.f * positions, g.f, positions);
    o.noalias() = k * ConstMatrixMap<T>(col, patch, positions);
    for (std::int64_t f = 0; f < g.f; ++f) o.row(f).array() += b[static_cast<std::size_t>(f)];
  }

  Variable<T> result = make_output(std::move(out), grad, "conv2d output");
  if (grad) {
    tape.record([input, kernel, bias, result, g, cols = std::move(cols)]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      const std::int64_t patch = g.patch();
      const std::int64_t positions = g.positions();
      const T* dy = y.grad().data();
      if (bias.requires_grad()) {
        auto db = bias.tensor().ensure_grad();
        for (std::int64_t n = 0; n < g.n; ++n) {
          for (std::int64_t f = 0; f < g.f; ++f) {
            const T* row = dy + (n * g.f + f) * positions;
            double s = 0;
            for (std::int64_t p = 0; p < positions; ++p) s += row[p];
            db[static_cast<std::size_t>(f)] += static_cast<T>(s);
          }
        }
      }
      if (kernel.requires_grad()) {
        MatrixMap<T> dk(kernel.tensor().ensure_grad().data(), g.f, patch);
        for (std::int64_t n = 0; n < g.n; ++n) {
          ConstMatrixMap<T> dyn(dy + n * g.f * positions, g.f, positions);
          ConstMatrixMap<T> col(cols.data() + n * patch * positions, patch, positions);
          dk.noalias() += dyn * col.transpose();
        }
      }
      if (input.requires_grad()) {
        auto dx = input.tensor().ensure_grad();
        ConstMatrixMap<T> k(kernel.tensor().data().data(), g.f, patch);
        RowMatrix<T> dcol(patch, positions);
        for (std::int64_t n = 0; n < g.n; ++n) {
          ConstMatrixMap<T> dyn(dy + n * g.f * positions, g.f, positions);
          dcol.noalias() = k.transpose() * dyn;
          col2im_add(dcol.data(), g, dx.data() + n * g.c * g.h * g.w);
        }
      }
    });
  }
  return result;
}

template <typename T>
Variable<T> relu(Tape<T>& tape, const Variable<T>& input) {
  const auto& x = input.tensor();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  const bool grad = wants_grad(tape, {&input});
  Variable<T> result = make_output(std::move(out), grad, "relu output");
  if (grad) {
    tape.record([input, result]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      const auto& x = input.tensor();
      auto dx = input.tensor().ensure_grad();
      auto dy = y.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (x[i] > T(0)) dx[i] += dy[i];
      }
    });
  }
  return result;
}

template <typename T>
Variable<T> sigmoid(Tape<T>& tape, const Variable<T>& input) {
  const auto& x = input.tensor();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  const bool grad = wants_grad(tape, {&input});
  Variable<T> result = make_output(std::move(out), grad, "sigmoid output");
  if (grad) {
    tape.record([input, result]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      auto dx = input.tensor().ensure_grad();
      auto dy = y.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
    });
  }
  return result;
}

template <typename T>
Variable<T> global_average_pool(Tape<T>& tape, const Variable<T>& input) {
  const Shape& s = input.shape();
  expect_rank(s, 4, "global_average_pool", "input");
  const std::int64_t nc = s[0] * s[1];
  const std::int64_t area = s[2] * s[3];
  const auto& x = input.tensor();
  Tensor<T> out(Shape{s[0], s[1]});
  for (std::int64_t i = 0; i < nc; ++i) {
    double sum = 0;
    const T* p = x.data().data() + i * area;
    for (std::int64_t j = 0; j < area; ++j) sum += p[j];
    out[static_cast<std::size_t>(i)] = static_cast<T>(sum / static_cast<double>(area));
  }
  const bool grad = wants_grad(tape, {&input});
  Variable<T> result = make_output(std::move(out), grad, "global_average_pool output");
  if (grad) {
    tape.record([input, result, nc, area]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      auto dx = input.tensor().ensure_grad();
      auto dy = y.grad();
      const T inv = T(1) / static_cast<T>(area);
      for (std::int64_t i = 0; i < nc; ++i) {
        const T g = dy[static_cast<std::size_t>(i)] * inv;
        T* p = dx.data() + i * area;
        for (std::int64_t j = 0; j < area; ++j) p[j] += g;
      }
    });
  }
  return result;
}

template <typename T>
Variable<T> dropout(Tape<T>& tape, const Variable<T>& input, double rate, DropoutMode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == DropoutMode::kEval || rate == 0.0) return input;

  const auto& x = input.tensor();
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = uniform01(rng) < rate ? T(0) : keep_scale;
    out[i] = x[i] * mask[i];
  }
  const bool grad = wants_grad(tape, {&input});
  Variable<T> result = make_output(std::move(out), grad, "dropout output");
  if (grad) {
    tape.record([input, result, mask = std::move(mask)]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      auto dx = input.tensor().ensure_grad();
      auto dy = y.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * mask[i];
    });
  }
  return result;
}

namespace {

void check_batch_norm_shapes(const Shape& xs, const Shape& scale, const Shape& shift, const Shape& stats) {
  expect_rank(xs, 4, "batch_norm", "input");
  const Shape channels{xs[1]};
  if (scale != channels || shift != channels || stats != channels) {
    throw ShapeError("batch_norm: scale/shift/statistics must have shape " + shape_string(channels));
  }
}

// Shared affine backward for running-statistics modes: y = scale*(x-mean)*inv_std + shift.
template <typename T>
Variable<T> normalize_with_running_stats(Tape<T>& tape, const Variable<T>& input, const Variable<T>& scale,
                                         const Variable<T>& shift, const BatchNormState<T>& state) {
  const Shape& s = input.shape();
  const std::int64_t n = s[0], c = s[1], area = s[2] * s[3];
  std::vector<T> inv_std(static_cast<std::size_t>(c));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    inv_std[static_cast<std::size_t>(ch)] = static_cast<T>(
        1.0 / std::sqrt(static_cast<double>(state.running_var[static_cast<std::size_t>(ch)]) + state.epsilon));
  }
  std::vector<T> mean(state.running_mean.data().begin(), state.running_mean.data().end());
  const auto& x = input.tensor();
  const auto& gamma = scale.tensor();
  const auto& beta = shift.tensor();
  Tensor<T> out(s);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const auto cs = static_cast<std::size_t>(ch);
      const T a = gamma[cs] * inv_std[cs];
      const T b = beta[cs] - a * mean[cs];
      const std::int64_t off = (i * c + ch) * area;
      for (std::int64_t j = 0; j < area; ++j) out[static_cast<std::size_t>(off + j)] = a * x[static_cast<std::size_t>(off + j)] + b;
    }
  }
  const bool grad = wants_grad(tape, {&input, &scale, &shift});
  Variable<T> result = make_output(std::move(out), grad, "batch_norm output");
  if (grad) {
    tape.record([input, scale, shift, result, inv_std = std::move(inv_std), mean = std::move(mean), n, c, area]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      auto dy = y.grad();
      const auto& x = input.tensor();
      const auto& gamma = scale.tensor();
      std::span<T> dx = input.requires_grad() ? input.tensor().ensure_grad() : std::span<T>{};
      std::span<T> dgamma = scale.requires_grad() ? scale.tensor().ensure_grad() : std::span<T>{};
      std::span<T> dbeta = shift.requires_grad() ? shift.tensor().ensure_grad() : std::span<T>{};
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const auto cs = static_cast<std::size_t>(ch);
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t off = (i * c + ch) * area;
          for (std::int64_t j = 0; j < area; ++j) {
            const auto idx = static_cast<std::size_t>(off + j);
            sum_dy += dy[idx];
            sum_dy_xhat += dy[idx] * (x[idx] - mean[cs]) * inv_std[cs];
            if (!dx.empty()) dx[idx] += dy[idx] * gamma[cs] * inv_std[cs];
          }
        }
        if (!dgamma.empty()) dgamma[cs] += static_cast<T>(sum_dy_xhat);
        if (!dbeta.empty()) dbeta[cs] += static_cast<T>(sum_dy);
      }
    });
  }
  return result;
}

}  // namespace

template <typename T>
Variable<T> batch_norm_inference(Tape<T>& tape, const Variable<T>& input, const Variable<T>& scale,
                                 const Variable<T>& shift, const BatchNormState<T>& state) {
  check_batch_norm_shapes(input.shape(), scale.shape(), shift.shape(), state.running_mean.shape());
  return normalize_with_running_stats(tape, input, scale, shift, state);
}

template <typename T>
Variable<T> batch_norm(Tape<T>& tape, const Variable<T>& input, const Variable<T>& scale,
                       const Variable<T>& shift, BatchNormState<T>& state, BatchNormMode mode) {
  check_batch_norm_shapes(input.shape(), scale.shape(), shift.shape(), state.running_mean.shape());
  if (mode == BatchNormMode::kFrozen) {
    scale.set_requires_grad(false);
    shift.set_requires_grad(false);
  }
  if (mode != BatchNormMode::kTrain) return normalize_with_running_stats(tape, input, scale, shift, state);

  const Shape& s = input.shape();
  const std::int64_t n = s[0], c = s[1], area = s[2] * s[3];
  const std::int64_t count = n * area;
  if (count < 2) throw ShapeError("batch_norm: train mode needs N*H*W >= 2, got " + shape_string(s));

  const auto& x = input.tensor();
  const auto& gamma = scale.tensor();
  const auto& beta = shift.tensor();
  Tensor<T> out(s);
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(static_cast<std::size_t>(c));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const auto cs = static_cast<std::size_t>(ch);
    double sum = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const T* p = x.data().data() + (i * c + ch) * area;
      for (std::int64_t j = 0; j < area; ++j) sum += p[j];
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const T* p = x.data().data() + (i * c + ch) * area;
      for (std::int64_t j = 0; j < area; ++j) {
        const double d = p[j] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(count);
    const double istd = 1.0 / std::sqrt(var + state.epsilon);
    inv_std[cs] = static_cast<T>(istd);
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t off = (i * c + ch) * area;
      for (std::int64_t j = 0; j < area; ++j) {
        const auto idx = static_cast<std::size_t>(off + j);
        xhat[idx] = static_cast<T>((x[idx] - mean) * istd);
        out[idx] = gamma[cs] * xhat[idx] + beta[cs];
      }
    }
    const double m = state.momentum;
    state.running_mean[cs] = static_cast<T>(m * state.running_mean[cs] + (1.0 - m) * mean);
    state.running_var[cs] = static_cast<T>(m * state.running_var[cs] + (1.0 - m) * var);
  }

  const bool grad = wants_grad(tape, {&input, &scale, &shift});
  Variable<T> result = make_output(std::move(out), grad, "batch_norm output");
  if (grad) {
    tape.record([input, scale, shift, result, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, area]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      auto dy = y.grad();
      const auto& gamma = scale.tensor();
      const double count = static_cast<double>(n * area);
      std::span<T> dx = input.requires_grad() ? input.tensor().ensure_grad() : std::span<T>{};
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const auto cs = static_cast<std::size_t>(ch);
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t off = (i * c + ch) * area;
          for (std::int64_t j = 0; j < area; ++j) {
            const auto idx = static_cast<std::size_t>(off + j);
            sum_dy += dy[idx];
            sum_dy_xhat += static_cast<double>(dy[idx]) * xhat[idx];
          }
        }
        if (scale.requires_grad()) scale.tensor().ensure_grad()[cs] += static_cast<T>(sum_dy_xhat);
        if (shift.requires_grad()) shift.tensor().ensure_grad()[cs] += static_cast<T>(sum_dy);
        if (dx.empty()) continue;
        // dx = gamma*inv_std/M * (M*dy - sum(dy) - xhat*sum(dy*xhat))
        const double k = static_cast<double>(gamma[cs]) * inv_std[cs] / count;
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t off = (i * c + ch) * area;
          for (std::int64_t j = 0; j < area; ++j) {
            const auto idx = static_cast<std::size_t>(off + j);
            dx[idx] += static_cast<T>(k * (count * dy[idx] - sum_dy - xhat[idx] * sum_dy_xhat));
          }
        }
      }
    });
  }
  return result;
}

template <typename T>
Variable<T> dense(Tape<T>& tape, const Variable<T>& input, const Variable<T>& kernel, const Variable<T>& bias) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  expect_rank(xs, 2, "dense", "input");
  expect_rank(ks, 2, "dense", "kernel");
  if (xs[1] != ks[0]) {
    throw ShapeError("dense: input " + shape_string(xs) + " incompatible with kernel " + shape_string(ks));
  }
  if (bias.shape() != Shape{ks[1]}) {
    throw ShapeError("dense: bias shape " + shape_string(bias.shape()) + " does not match " + std::to_string(ks[1]) +
                     " outputs");
  }
  const std::int64_t n = xs[0], d = xs[1], k = ks[1];
  Tensor<T> out(Shape{n, k});
  MatrixMap<T> y(out.data().data(), n, k);
  y.noalias() = ConstMatrixMap<T>(input.tensor().data().data(), n, d) *
                ConstMatrixMap<T>(kernel.tensor().data().data(), d, k);
  for (std::int64_t j = 0; j < k; ++j) y.col(j).array() += bias.tensor()[static_cast<std::size_t>(j)];

  const bool grad = wants_grad(tape, {&input, &kernel, &bias});
  Variable<T> result = make_output(std::move(out), grad, "dense output");
  if (grad) {
    tape.record([input, kernel, bias, result, n, d, k]() {
      auto& y = result.tensor();
      if (!y.has_grad()) return;
      ConstMatrixMap<T> dy(y.grad().data(), n, k);
      if (bias.requires_grad()) {
        auto db = bias.tensor().ensure_grad();
        for (std::int64_t j = 0; j < k; ++j) {
          double s = 0;
          for (std::int64_t i = 0; i < n; ++i) s += dy(i, j);
          db[static_cast<std::size_t>(j)] += static_cast<T>(s);
        }
      }
      if (kernel.requires_grad()) {
        MatrixMap<T> dk(kernel.tensor().ensure_grad().data(), d, k);
        dk.noalias() += ConstMatrixMap<T>(input.tensor().data().data(), n, d).transpose() * dy;
      }
      if (input.requires_grad()) {
        MatrixMap<T> dx(input.tensor().ensure_grad().data(), n, d);
        dx.noalias() += dy * ConstMatrixMap<T>(kernel.tensor().data().data(), d, k).transpose();
      }
    });
  }
  return result;
}

template <typename T>
Variable<T> binary_cross_entropy(Tape<T>& tape, const Variable<T>& probabilities, const Tensor<T>& labels) {
  const auto& p = probabilities.tensor();
  if (p.shape() != labels.shape()) {
    throw ShapeError("binary_cross_entropy: probabilities " + shape_string(p.shape()) + " vs labels " +
                     shape_string(labels.shape()));
  }
  const double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(static_cast<double>(p[i]), lo, hi);
    const double y = labels[i];
    sum -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
  }
  const double count = static_cast<double>(p.size());
  Tensor<T> out(Shape{1}, static_cast<T>(sum / count));
  const bool grad = wants_grad(tape, {&probabilities});
  Variable<T> result = make_output(std::move(out), grad, "binary_cross_entropy");
  if (grad) {
    tape.record([probabilities, result, labels, count, lo, hi]() {
      auto& l = result.tensor();
      if (!l.has_grad()) return;
      const double upstream = l.grad()[0];
      const auto& p = probabilities.tensor();
      auto dp = probabilities.tensor().ensure_grad();
      for (std::size_t i = 0; i < dp.size(); ++i) {
        const double q = p[i];
        if (q < lo || q > hi) continue;  // clamp is flat outside its range
        const double y = labels[i];
        dp[i] += static_cast<T>(upstream * (-y / q + (1.0 - y) / (1.0 - q)) / count);
      }
    });
  }
  return result;
}

#define ADLABEL_INSTANTIATE_OPS(T)                                                                               \
  template class Tape<T>;                                                                                        \
  template Variable<T> conv2d(Tape<T>&, const Variable<T>&, const Variable<T>&, const Variable<T>&, int, int);  \
  template Variable<T> relu(Tape<T>&, const Variable<T>&);                                                      \
  template Variable<T> sigmoid(Tape<T>&, const Variable<T>&);                                                   \
  template Variable<T> global_average_pool(Tape<T>&, const Variable<T>&);                                       \
  template Variable<T> dropout(Tape<T>&, const Variable<T>&, double, DropoutMode, Rng&);                        \
  template Variable<T> batch_norm(Tape<T>&, const Variable<T>&, const Variable<T>&, const Variable<T>&,         \
                                  BatchNormState<T>&, BatchNormMode);                                            \
  template Variable<T> batch_norm_inference(Tape<T>&, const Variable<T>&, const Variable<T>&,                   \
                                            const Variable<T>&, const BatchNormState<T>&);                      \
  template Variable<T> dense(Tape<T>&, const Variable<T>&, const Variable<T>&, const Variable<T>&);             \
  template Variable<T> binary_cross_entropy(Tape<T>&, const Variable<T>&, const Tensor<T>&);

ADLABEL_INSTANTIATE_OPS(float)
ADLABEL_INSTANTIATE_OPS(double)

#undef ADLABEL_INSTANTIATE_OPS

}  // namespace adlabel
