#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adlabel/tensor.hpp"

namespace adlabel {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

// Checkpoint layout: one line of compact JSON
//   {"format":"adlabel-checkpoint","version":1,"dtype":"f32"|"f64",
//    "entries":[{"name":..,"shape":[..],"offset":..,"nbytes":..},..]}
// terminated by '\n', then the raw little-endian payload. Offsets are
// relative to the first payload byte.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& entries);

// Throws DataError on malformed files or a dtype mismatch.
template <typename T>
std::vector<NamedTensor<T>> load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_dtype_name(std::size_t scalar_bytes);

// Hex FNV-1a digest of a file's bytes; used to compare checkpoints.
std::string file_digest(const std::filesystem::path& path);

}  // namespace adlabel
