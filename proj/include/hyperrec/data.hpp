// Copyright 2026 The hyperrec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dataset ingestion and indexing: rating-file parsers, trust-edge parsers,
// dense reindexing, leave-one-out and ratio splits, triplet samplers, and a
// canonical on-disk form (ratings.tsv / trust.tsv / idmap.tsv / split.tsv /
// stats.json) that round-trips exactly.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hyperrec/common.hpp"

namespace hyperrec::data {

enum class InteractionFormat { movielens_dat, tsv };
InteractionFormat parse_format(const std::string& name);
std::string to_string(InteractionFormat fmt);

// A line of an input file, external ids untouched.
struct RawInteraction {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct ParsedInteractions {
  std::vector<RawInteraction> interactions;
  std::int64_t malformed = 0;
};

// movielens_dat: "user::item::rating::timestamp". tsv: whitespace-separated
// "user item rating [timestamp]". Over 1% malformed lines is a hard error.
ParsedInteractions parse_interactions(const std::string& path, InteractionFormat fmt);

struct RawEdge {
  std::int64_t truster = 0;
  std::int64_t trustee = 0;
};

struct ParsedTrust {
  std::vector<RawEdge> edges;
  std::int64_t malformed = 0;
  std::int64_t self_loops = 0;  // dropped
};

// Whitespace-separated "truster trustee [weight]"; weights ignored.
ParsedTrust parse_trust(const std::string& path);

struct Interaction {
  int user = 0;
  int item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct InteractionDataset {
  int n_users = 0;
  int n_items = 0;
  std::vector<Interaction> interactions;
  // All interacted item ids per user, sorted, deduplicated. This is the
  // exclusion set for negative sampling and candidate construction.
  std::vector<std::vector<int>> items_by_user;
  // Sorted trustee lists per truster; empty vectors when no social data.
  std::vector<std::vector<int>> neighbors;
  std::int64_t n_social = 0;
  double min_rating_as_positive = 0.0;
  std::pair<double, double> rating_range{0.0, 0.0};
  // internal id -> external id
  std::vector<std::int64_t> user_ext;
  std::vector<std::int64_t> item_ext;
  std::int64_t duplicates_dropped = 0;
  std::int64_t social_dropped = 0;  // self-loops, duplicates, unknown users

  double density() const {
    return static_cast<double>(interactions.size()) /
           (static_cast<double>(n_users) * static_cast<double>(n_items));
  }
  bool has_social() const { return n_social > 0; }
  bool is_positive(double rating) const { return rating >= min_rating_as_positive; }
  bool user_has_item(int user, int item) const;
  bool user_trusts(int user, int other) const;
};

// Dense 0-based reindex (external ids sorted ascending), duplicate
// (user, item) pairs keep the latest timestamp (later line on ties), social
// edges deduplicated and restricted to users present in the interactions.
InteractionDataset build_dataset(const std::vector<RawInteraction>& interactions,
                                 const std::vector<RawEdge>& edges,
                                 double min_rating_as_positive);

enum class SplitMode { leave_one_out, ratio };
std::string to_string(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

inline constexpr std::uint8_t kTrain = 0;
inline constexpr std::uint8_t kVal = 1;
inline constexpr std::uint8_t kTest = 2;

struct DatasetSplit {
  SplitMode mode = SplitMode::leave_one_out;
  std::uint64_t seed = 0;  // ratio mode only
  std::vector<std::uint8_t> assignment;  // per interaction: kTrain/kVal/kTest

  // Caches derived from the assignment.
  std::vector<std::pair<int, int>> train_positives;     // (user, item), file order
  std::vector<std::vector<int>> train_items_by_user;    // any rating, sorted ids
  std::vector<std::vector<int>> train_pos_by_user;      // positives only, sorted ids
  std::vector<int> val_item;   // per user, -1 when absent (leave-one-out only)
  std::vector<int> test_item;  // per user, -1 when absent (leave-one-out only)
  std::int64_t excluded_users = 0;  // users with interactions but no test item
};

// Per user over positive interactions ordered by (timestamp, file order):
// last -> test, second-last -> validation, rest -> train. Users with fewer
// than 3 positives keep everything in train and are counted as excluded.
// Non-positive interactions always train.
DatasetSplit leave_one_out_split(const InteractionDataset& ds);

// Seeded uniform partition over interactions: 20% validation, 20% test
// (rounded), remainder train.
DatasetSplit ratio_split(const InteractionDataset& ds, std::uint64_t seed);

// Recompute the caches from mode + assignment (used after loading a split).
void rebuild_split_caches(const InteractionDataset& ds, DatasetSplit& split);

struct TrainingTriplet {
  int user = 0;
  int positive = 0;
  int negative = 0;
};

struct SocialPair {
  int positive_neighbor = 0;
  int negative_user = 0;
};

// Uniform over items the user never interacted with, by rejection.
int sample_negative_item(const InteractionDataset& ds, int user, std::mt19937_64& rng);

// Positive uniform from the user's train positives, negative via
// sample_negative_item. Requires at least one train positive.
TrainingTriplet sample_bpr_triplet(const InteractionDataset& ds, const DatasetSplit& split,
                                   int user, std::mt19937_64& rng);

// Positive neighbor uniform from the trust list, negative user uniform over
// non-neighbors (excluding the user). nullopt when the user has no
// neighbors; error when no negative exists.
std::optional<SocialPair> sample_social_pair(const InteractionDataset& ds, int user,
                                             std::mt19937_64& rng);

// Canonical on-disk form under a directory.
void write_canonical(const InteractionDataset& ds, const std::string& dir);
InteractionDataset load_canonical(const std::string& dir);

void write_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const std::string& path, const InteractionDataset& ds);

}  // namespace hyperrec::data
