#include "adlabel/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"
#include "adlabel/random.hpp"

namespace adlabel {

void SplitRatios::validate() const {
  if (!(train > 0 && val > 0 && test > 0)) throw ConfigError("split ratios must all be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

std::array<std::size_t, 3> SplitAssignment::counts() const {
  std::array<std::size_t, 3> c{};
  for (const auto& [id, s] : posts) ++c[static_cast<std::size_t>(s)];
  return c;
}

SplitAssignment split_posts(std::vector<std::string> post_ids, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  std::sort(post_ids.begin(), post_ids.end());
  if (auto dup = std::adjacent_find(post_ids.begin(), post_ids.end()); dup != post_ids.end()) {
    throw DataError("duplicate post id '" + *dup + "'");
  }
  Rng rng(splitmix64(seed));
  shuffle(post_ids, rng);

  const auto n = static_cast<double>(post_ids.size());
  // The epsilon keeps products such as 0.6 * 5 from landing just below an integer.
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * n + 1e-9));
  const auto n_val_test = static_cast<std::size_t>(std::floor((ratios.val + ratios.test) * n + 1e-9));

  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  for (std::size_t i = 0; i < post_ids.size(); ++i) {
    const Split s = i < n_val ? Split::kVal : i < n_val_test ? Split::kTest : Split::kTrain;
    out.posts.emplace(post_ids[i], s);
  }
  return out;
}

std::vector<std::string> unique_post_ids(const std::vector<ManifestRecord>& records) {
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.post_id).second) ids.push_back(r.post_id);
  }
  return ids;
}

void apply_split(std::vector<ManifestRecord>& records, const SplitAssignment& assignment) {
  for (auto& r : records) {
    auto it = assignment.posts.find(r.post_id);
    if (it == assignment.posts.end()) throw DataError("post '" + r.post_id + "' has no split assignment");
    r.split = it->second;
  }
}

std::string split_to_json(const SplitAssignment& assignment, int indent) {
  nlohmann::ordered_json j;
  j["seed"] = assignment.seed;
  j["ratios"] = {{"train", assignment.ratios.train}, {"val", assignment.ratios.val}, {"test", assignment.ratios.test}};
  const auto c = assignment.counts();
  j["counts"] = {{"train", c[0]}, {"val", c[1]}, {"test", c[2]}};
  nlohmann::ordered_json posts = nlohmann::ordered_json::object();
  for (const auto& [id, s] : assignment.posts) posts[id] = split_name(s);
  j["posts"] = std::move(posts);
  return j.dump(indent);
}

}  // namespace adlabel
