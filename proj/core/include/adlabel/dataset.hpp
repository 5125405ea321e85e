#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "adlabel/manifest.hpp"
#include "adlabel/model.hpp"
#include "adlabel/tensor.hpp"

namespace adlabel {

// Images of one split held in memory as 8-bit CHW planes, plus their labels.
struct Dataset {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // N x 3 x H x W
  std::vector<float> labels;         // N x 3, task order as in kTaskNames
  std::vector<const ManifestRecord*> records;

  std::size_t size() const { return records.size(); }
  std::size_t image_stride() const { return static_cast<std::size_t>(3) * width * height; }
  LabelCounts label_counts() const;
};

// Loads every record of `split` (all records when nullopt). Images must match
// the expected size; DataError names the offending file.
Dataset load_dataset(const Manifest& manifest, std::optional<Split> split, int expected_width, int expected_height,
                     int threads = 0);

// Batch tensor [n,3,H,W] with pixel values scaled to [0,1].
template <typename T>
Tensor<T> make_batch(const Dataset& data, std::span<const std::size_t> indices);

template <typename T>
Tensor<T> make_label_batch(const Dataset& data, std::span<const std::size_t> indices);

// Converts an interleaved RGB image into a [1,3,H,W] tensor in [0,1].
template <typename T>
Tensor<T> image_tensor(const RgbImage& image);

// Eval-mode probabilities for the whole dataset, N x 3 row-major.
std::vector<float> predict_dataset(const MultitaskCnn<float>& model, const Dataset& data, int batch_size = 64);

}  // namespace adlabel
