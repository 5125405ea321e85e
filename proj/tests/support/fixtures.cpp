#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unistd.h>

namespace adlabel::testing {

template <typename T>
Batch<T> synthetic_batch(int n, int size, std::uint64_t seed) {
  const std::int64_t plane = 3LL * size * size;
  Batch<T> b{Tensor<T>(Shape{n, 3, size, size}), Tensor<T>(Shape{n, 3})};
  Rng rng(seed);
  SpecOptions opt;
  opt.width = opt.height = size;
  for (int i = 0; i < n; ++i) {
    // Cycle through the scenarios so every label takes both values.
    const Scenario s = kAllScenarios[static_cast<std::size_t>(i) % kAllScenarios.size()];
    const ImageSpec spec = sample_spec(rng, s, i % 2 == 0, opt);
    const auto img = image_tensor<T>(render_image(spec));
    std::copy(img.data().begin(), img.data().end(), b.images.data().begin() + i * plane);
    const auto l = labels_for(spec.scenario, spec.motif == MotifKind::kVaping).as_array();
    for (int k = 0; k < 3; ++k) b.labels[static_cast<std::size_t>(i * 3 + k)] = static_cast<T>(l[k]);
  }
  return b;
}

template Batch<float> synthetic_batch<float>(int, int, std::uint64_t);
template Batch<double> synthetic_batch<double>(int, int, std::uint64_t);

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("adlabel_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double concordant = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  return concordant / static_cast<double>(pairs);
}

std::size_t brute_force_substring_distance(const std::string& pattern, const std::string& text) {
  auto levenshtein = [](const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
      }
      std::swap(prev, cur);
    }
    return prev[b.size()];
  };
  std::size_t best = pattern.size();
  for (std::size_t i = 0; i <= text.size(); ++i) {
    for (std::size_t len = 0; i + len <= text.size(); ++len) {
      best = std::min(best, levenshtein(pattern, text.substr(i, len)));
    }
  }
  return best;
}

}  // namespace adlabel::testing
