#include "adlabel/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "adlabel/error.hpp"
#include "adlabel/parallel.hpp"
#include "adlabel/raster.hpp"

namespace adlabel {

LabelCounts Dataset::label_counts() const {
  LabelCounts c{};
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      if (labels[i * kTaskCount + t] > 0.5f) {
        ++c[t].positives;
      } else {
        ++c[t].negatives;
      }
    }
  }
  return c;
}

Dataset load_dataset(const Manifest& manifest, std::optional<Split> split, int expected_width, int expected_height,
                     int threads) {
  Dataset d;
  d.width = expected_width;
  d.height = expected_height;
  for (const auto& r : manifest.records) {
    if (!split || (r.split && *r.split == *split)) d.records.push_back(&r);
  }
  const std::size_t stride = d.image_stride();
  const std::size_t plane = static_cast<std::size_t>(expected_width) * expected_height;
  d.pixels.resize(d.size() * stride);
  d.labels.resize(d.size() * kTaskCount);
  parallel_for(
      d.size(),
      [&](std::size_t i) {
        const auto& r = *d.records[i];
        const auto path = manifest.image_file(r);
        const RgbImage img = read_ppm(path);
        if (img.width() != expected_width || img.height() != expected_height) {
          throw DataError(path.string() + " is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                          ", expected " + std::to_string(expected_width) + "x" + std::to_string(expected_height));
        }
        const auto& src = img.bytes();
        std::uint8_t* dst = d.pixels.data() + i * stride;
        for (std::size_t p = 0; p < plane; ++p) {
          dst[p] = src[3 * p];
          dst[plane + p] = src[3 * p + 1];
          dst[2 * plane + p] = src[3 * p + 2];
        }
        const auto l = r.labels.as_array();
        for (std::size_t t = 0; t < kTaskCount; ++t) d.labels[i * kTaskCount + t] = static_cast<float>(l[t]);
      },
      threads);
  return d;
}

template <typename T>
Tensor<T> make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t stride = data.image_stride();
  Tensor<T> out(Shape{static_cast<std::int64_t>(indices.size()), 3, data.height, data.width});
  auto dst = out.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::uint8_t* src = data.pixels.data() + indices[b] * stride;
    for (std::size_t k = 0; k < stride; ++k) dst[b * stride + k] = static_cast<T>(src[k]) / T(255);
  }
  return out;
}

template <typename T>
Tensor<T> make_label_batch(const Dataset& data, std::span<const std::size_t> indices) {
  Tensor<T> out(Shape{static_cast<std::int64_t>(indices.size()), static_cast<std::int64_t>(kTaskCount)});
  auto dst = out.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    for (std::size_t t = 0; t < kTaskCount; ++t) dst[b * kTaskCount + t] = static_cast<T>(data.labels[indices[b] * kTaskCount + t]);
  }
  return out;
}

template <typename T>
Tensor<T> image_tensor(const RgbImage& image) {
  const std::size_t plane = static_cast<std::size_t>(image.width()) * image.height();
  Tensor<T> out(Shape{1, 3, image.height(), image.width()});
  auto dst = out.data();
  const auto& src = image.bytes();
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) dst[c * plane + p] = static_cast<T>(src[3 * p + c]) / T(255);
  }
  return out;
}

std::vector<float> predict_dataset(const MultitaskCnn<float>& model, const Dataset& data, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  std::vector<float> out(data.size() * kTaskCount);
  const std::size_t bs = static_cast<std::size_t>(batch_size);
  const std::size_t batches = (data.size() + bs - 1) / bs;
  // predict() is const, so batches can share the model.
  parallel_for(batches, [&](std::size_t b) {
    const std::size_t begin = b * bs, end = std::min(data.size(), begin + bs);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const auto probs = model.predict(make_batch<float>(data, idx));
    std::copy(probs.data().begin(), probs.data().end(), out.begin() + static_cast<std::ptrdiff_t>(begin * kTaskCount));
  });
  return out;
}

template Tensor<float> make_batch<float>(const Dataset&, std::span<const std::size_t>);
template Tensor<double> make_batch<double>(const Dataset&, std::span<const std::size_t>);
template Tensor<float> make_label_batch<float>(const Dataset&, std::span<const std::size_t>);
template Tensor<double> make_label_batch<double>(const Dataset&, std::span<const std::size_t>);
template Tensor<float> image_tensor<float>(const RgbImage&);
template Tensor<double> image_tensor<double>(const RgbImage&);

}  // namespace adlabel
