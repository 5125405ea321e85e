#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adlabel/manifest.hpp"

namespace adlabel {

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;

  // Positive and summing to 1 within 1e-9.
  void validate() const;
};

struct SplitAssignment {
  std::map<std::string, Split> posts;
  SplitRatios ratios;
  std::uint64_t seed = 0;

  // Post counts indexed by Split (train, val, test).
  std::array<std::size_t, 3> counts() const;
};

// Sorts ids, shuffles them with the seed, then takes floor(val*n) posts for
// validation and floor((val+test)*n) - floor(val*n) for test; every remaining
// post goes to train. Throws DataError on duplicate ids.
SplitAssignment split_posts(std::vector<std::string> post_ids, const SplitRatios& ratios, std::uint64_t seed);

// Distinct post ids of a record list, in first-seen order.
std::vector<std::string> unique_post_ids(const std::vector<ManifestRecord>& records);

// Writes each record's split from its post. DataError if a post is unassigned.
void apply_split(std::vector<ManifestRecord>& records, const SplitAssignment& assignment);

std::string split_to_json(const SplitAssignment& assignment, int indent = 2);

}  // namespace adlabel
