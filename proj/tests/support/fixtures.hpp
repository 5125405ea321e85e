#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adlabel/dataset.hpp"
#include "adlabel/synth.hpp"

namespace adlabel::testing {

// n rendered images at `size` with their labels, as [n,3,size,size] / [n,3].
template <typename T>
struct Batch {
  Tensor<T> images;
  Tensor<T> labels;
};

template <typename T>
Batch<T> synthetic_batch(int n, int size, std::uint64_t seed);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

// O(n^2) Mann-Whitney concordance: pairs (positive, negative) score 1 when the
// positive ranks higher and 0.5 on ties.
double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Plain Levenshtein between `pattern` and every substring of `text`.
std::size_t brute_force_substring_distance(const std::string& pattern, const std::string& text);

}  // namespace adlabel::testing
