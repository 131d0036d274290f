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

// Ranking and rating metrics plus the two evaluation protocols. Full
// ranking scores the held-out item against every item the user has not seen
// in train or validation; the sampled protocol ranks it against a fixed
// seeded draw of non-interacted negatives. Ties always break toward the
// lower item id, everywhere, so evaluation is deterministic.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperrec/data.hpp"
#include "hyperrec/models.hpp"
#include "hyperrec/spaces.hpp"

namespace hyperrec::eval {

inline const std::vector<int> kDefaultKs = {1, 5, 10, 15, 20};

enum class Protocol { full, sampled };

struct ProtocolSpec {
  Protocol kind = Protocol::full;
  int n_negatives = 999;   // sampled only
  std::uint64_t seed = 0;  // sampled only

  std::string name() const;  // "full" or "sampled:<n>"
};

// Accepts "full" or "sampled:<n>" with n >= 0.
ProtocolSpec parse_protocol(const std::string& text);

// ---------------------------------------------------------------------------
// Scalar metrics.
// ---------------------------------------------------------------------------

// 1 when held_out appears within the first k entries of ranked, else 0.
double hit_ratio_at_k(const std::vector<int>& ranked, int held_out, int k);

// DCG/IDCG with binary relevance; the ideal list puts every relevant item
// on top. Zero when nothing relevant lands in the top k.
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k);

double mae(const std::vector<double>& preds, const std::vector<double>& observed);
double rmse(const std::vector<double>& preds, const std::vector<double>& observed);

// ---------------------------------------------------------------------------
// Protocol evaluation.
// ---------------------------------------------------------------------------

struct MetricsReport {
  std::map<int, double> hr;    // k -> mean hit ratio
  std::map<int, double> ndcg;  // k -> mean NDCG
  std::optional<double> mae;   // rating models only
  std::optional<double> rmse;
  std::int64_t n_users_evaluated = 0;
  std::string protocol;
};

// Which held-out item each user is ranked on. Validation targets exclude
// only the user's train items from the candidates; test targets exclude
// train and validation items.
enum class RankTarget { test, val };

// Ranks every evaluable user's held-out item against all unseen items.
// Rating models additionally report MAE/RMSE over the target split, with
// predictions clamped to the dataset's rating range.
MetricsReport evaluate_full_ranking(models::ModelKind kind, const spaces::SpaceKind& space,
                                    const spaces::EmbeddingTable& users,
                                    const spaces::EmbeddingTable& items,
                                    const data::InteractionDataset& ds,
                                    const data::DatasetSplit& split,
                                    const std::vector<int>& ks = kDefaultKs,
                                    RankTarget target = RankTarget::test);

// Candidates are the held-out item plus n_negatives items the user never
// interacted with, drawn uniformly without replacement from a per-user
// stream seeded by mix_seed(seed, user). When the complement has at most
// n_negatives items every one of them is taken, which makes the result
// identical to full ranking.
MetricsReport evaluate_sampled(models::ModelKind kind, const spaces::SpaceKind& space,
                               const spaces::EmbeddingTable& users,
                               const spaces::EmbeddingTable& items,
                               const data::InteractionDataset& ds, const data::DatasetSplit& split,
                               int n_negatives, std::uint64_t seed,
                               const std::vector<int>& ks = kDefaultKs,
                               RankTarget target = RankTarget::test);

// MAE/RMSE without ranking, for rating models on splits that carry no
// per-user held-out item (ratio mode). protocol is "ratings".
MetricsReport evaluate_ratings_only(const spaces::SpaceKind& space,
                                    const spaces::EmbeddingTable& users,
                                    const spaces::EmbeddingTable& items,
                                    const data::InteractionDataset& ds,
                                    const data::DatasetSplit& split,
                                    RankTarget target = RankTarget::test);

MetricsReport evaluate(models::ModelKind kind, const spaces::SpaceKind& space,
                       const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                       const data::InteractionDataset& ds, const data::DatasetSplit& split,
                       const ProtocolSpec& protocol, const std::vector<int>& ks = kDefaultKs,
                       RankTarget target = RankTarget::test);

// Scalar used for best-checkpoint selection: HR@10 on the validation items
// for ranking models, negated MAE on the validation split for rating
// models. Higher is always better.
double validation_score(models::ModelKind kind, const spaces::SpaceKind& space,
                        const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                        const data::InteractionDataset& ds, const data::DatasetSplit& split);

// ---------------------------------------------------------------------------
// Embedding distortion.
// ---------------------------------------------------------------------------

// Mean over node pairs of exp(|log r_ij - mean log r|) where r_ij is the
// ratio of embedded to graph distance; the log-mean centering makes the
// measure invariant to a global rescaling of the embedding. 1 is perfect.
double mean_multiplicative_distortion(const Mat& graph_dist, const spaces::SpaceKind& space,
                                      const spaces::EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

// One row per metric value. k is 0 for metrics that have no cutoff (mae,
// rmse, n_users).
struct ReportRow {
  std::string dataset;
  std::string model;
  std::string space;
  int dim = 0;
  std::string metric;
  int k = 0;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string protocol;
};

std::vector<ReportRow> report_rows(const std::string& dataset, const std::string& model,
                                   const std::string& space, int dim, std::uint64_t seed,
                                   const MetricsReport& report);

// CSV with the fixed header
// dataset,model,space,dim,metric,k,value,seed,protocol. Values use the
// shortest round-trip decimal form, so rewriting a loaded report is
// byte-identical.
void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> load_report_csv(const std::string& path);

// JSON mirror: an array of objects with exactly the CSV's fields.
void write_report_json(const std::string& path, const std::vector<ReportRow>& rows);

}  // namespace hyperrec::eval
