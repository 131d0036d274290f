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

#include "hyperrec/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "hyperrec/geometry.hpp"

namespace hyperrec::eval {

namespace {

constexpr const char* kCsvHeader = "dataset,model,space,dim,metric,k,value,seed,protocol";

double clamp_rating(double pred, const std::pair<double, double>& range) {
  return std::min(std::max(pred, range.first), range.second);
}

// Sorted exclusion list for one user's candidate construction.
std::vector<int> exclusion_list(const data::DatasetSplit& split, int user, RankTarget target) {
  std::vector<int> out = split.train_items_by_user[user];
  if (target == RankTarget::test && split.val_item[user] >= 0) {
    out.push_back(split.val_item[user]);
    std::sort(out.begin(), out.end());
  }
  return out;
}

struct Scorer {
  bool by_distance = false;
  Vec scores;  // per item

  // Whether candidate j outranks the target item t.
  bool better(int j, int t) const {
    if (scores[j] == scores[t]) return j < t;
    return by_distance ? scores[j] < scores[t] : scores[j] > scores[t];
  }
};

Scorer score_all_items(models::ModelKind kind, const spaces::SpaceKind& space,
                       const spaces::EmbeddingTable& users, const Mat& item_points,
                       const Vec& item_biases, int user) {
  Scorer s;
  s.by_distance = models::is_distance_model(kind);
  const Vec pu = spaces::materialize(space, users, user);
  s.scores = s.by_distance
                 ? spaces::score_distance_batch(space, item_points, pu)
                 : spaces::score_projection_batch(space, item_points, pu, item_biases,
                                                  users.bias(user));
  return s;
}

struct RankAccumulator {
  const std::vector<int>& ks;
  std::map<int, double> hr_sum;
  std::map<int, double> ndcg_sum;
  std::int64_t n = 0;

  explicit RankAccumulator(const std::vector<int>& ks_in) : ks(ks_in) {
    for (int k : ks) {
      require(k >= 1, "k must be >= 1");
      hr_sum[k] = 0.0;
      ndcg_sum[k] = 0.0;
    }
  }

  void add(std::int64_t rank) {
    ++n;
    for (int k : ks) {
      if (rank <= k) {
        hr_sum[k] += 1.0;
        ndcg_sum[k] += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
      }
    }
  }

  MetricsReport finish(const std::string& protocol_name) const {
    require(n > 0, "no evaluable users");
    MetricsReport rep;
    for (int k : ks) {
      rep.hr[k] = hr_sum.at(k) / static_cast<double>(n);
      rep.ndcg[k] = ndcg_sum.at(k) / static_cast<double>(n);
    }
    rep.n_users_evaluated = n;
    rep.protocol = protocol_name;
    return rep;
  }
};

int held_out_item(const data::DatasetSplit& split, int user, RankTarget target) {
  return target == RankTarget::test ? split.test_item[user] : split.val_item[user];
}

void require_loo(const data::DatasetSplit& split) {
  require(split.mode == data::SplitMode::leave_one_out && !split.test_item.empty(),
          "ranking evaluation requires a leave-one-out split");
}

// MAE/RMSE over the interactions labeled with the target split, predictions
// clamped to the observed rating range.
void add_rating_metrics(MetricsReport& rep, const spaces::SpaceKind& space,
                        const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                        const data::InteractionDataset& ds, const data::DatasetSplit& split,
                        RankTarget target) {
  const std::uint8_t label = target == RankTarget::test ? data::kTest : data::kVal;
  std::vector<double> preds;
  std::vector<double> observed;
  for (size_t idx = 0; idx < ds.interactions.size(); ++idx) {
    if (split.assignment[idx] != label) continue;
    const auto& it = ds.interactions[idx];
    const Vec pu = spaces::materialize(space, users, it.user);
    const Vec pi = spaces::materialize(space, items, it.item);
    const double raw = spaces::score_projection(space, pu, pi, items.bias(it.item)) +
                       users.bias(it.user);
    preds.push_back(clamp_rating(raw, ds.rating_range));
    observed.push_back(it.rating);
  }
  if (preds.empty()) return;
  rep.mae = mae(preds, observed);
  rep.rmse = rmse(preds, observed);
}

void require_simple_field(const std::string& value, const char* what) {
  require(value.find(',') == std::string::npos && value.find('\n') == std::string::npos &&
              value.find('"') == std::string::npos,
          std::string(what) + " may not contain commas, quotes, or newlines: " + value);
}

}  // namespace

// ---------------------------------------------------------------------------
// Protocol parsing.
// ---------------------------------------------------------------------------

std::string ProtocolSpec::name() const {
  return kind == Protocol::full ? "full" : "sampled:" + std::to_string(n_negatives);
}

ProtocolSpec parse_protocol(const std::string& text) {
  ProtocolSpec spec;
  if (text == "full") return spec;
  const std::string prefix = "sampled:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string num = text.substr(prefix.size());
    try {
      size_t pos = 0;
      const int n = std::stoi(num, &pos);
      require(pos == num.size() && n >= 0, "negative count must be a nonnegative integer");
      spec.kind = Protocol::sampled;
      spec.n_negatives = n;
      return spec;
    } catch (const invalid_input_error&) {
      throw;
    } catch (const std::exception&) {
      throw invalid_input_error("bad protocol '" + text + "': expected full or sampled:<n>");
    }
  }
  throw invalid_input_error("bad protocol '" + text + "': expected full or sampled:<n>");
}

// ---------------------------------------------------------------------------
// Scalar metrics.
// ---------------------------------------------------------------------------

double hit_ratio_at_k(const std::vector<int>& ranked, int held_out, int k) {
  require(k >= 1, "k must be >= 1");
  const auto end = ranked.begin() + std::min<std::ptrdiff_t>(k, ranked.size());
  return std::find(ranked.begin(), end, held_out) != end ? 1.0 : 0.0;
}

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k) {
  require(k >= 1, "k must be >= 1");
  require(!relevant.empty(), "NDCG is undefined for an empty relevant set");
  const std::unordered_set<int> rel(relevant.begin(), relevant.end());
  double dcg = 0.0;
  for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(k); ++i) {
    if (rel.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  for (size_t i = 0; i < rel.size() && i < static_cast<size_t>(k); ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double mae(const std::vector<double>& preds, const std::vector<double>& observed) {
  require(preds.size() == observed.size(), "prediction and observation lengths differ");
  require(!preds.empty(), "MAE of an empty set");
  double sum = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) sum += std::abs(preds[i] - observed[i]);
  return sum / static_cast<double>(preds.size());
}

double rmse(const std::vector<double>& preds, const std::vector<double>& observed) {
  require(preds.size() == observed.size(), "prediction and observation lengths differ");
  require(!preds.empty(), "RMSE of an empty set");
  double sum = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - observed[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(preds.size()));
}

// ---------------------------------------------------------------------------
// Protocol evaluation.
// ---------------------------------------------------------------------------

MetricsReport evaluate_full_ranking(models::ModelKind kind, const spaces::SpaceKind& space,
                                    const spaces::EmbeddingTable& users,
                                    const spaces::EmbeddingTable& items,
                                    const data::InteractionDataset& ds,
                                    const data::DatasetSplit& split, const std::vector<int>& ks,
                                    RankTarget target) {
  require_loo(split);
  require(users.rows() == ds.n_users && items.rows() == ds.n_items,
          "embedding tables do not match the dataset");
  const Mat item_points = spaces::materialize_all(space, items);
  const Vec item_biases = items.has_biases() ? items.biases() : Vec::Zero(items.rows());

  RankAccumulator acc(ks);
  for (int u = 0; u < ds.n_users; ++u) {
    const int t = held_out_item(split, u, target);
    if (t < 0) continue;
    const auto excluded = exclusion_list(split, u, target);
    const Scorer scorer = score_all_items(kind, space, users, item_points, item_biases, u);
    std::int64_t rank = 1;
    for (int j = 0; j < ds.n_items; ++j) {
      if (j == t || std::binary_search(excluded.begin(), excluded.end(), j)) continue;
      if (scorer.better(j, t)) ++rank;
    }
    acc.add(rank);
  }
  MetricsReport rep = acc.finish(ProtocolSpec{Protocol::full}.name());
  if (kind == models::ModelKind::mf_rating)
    add_rating_metrics(rep, space, users, items, ds, split, target);
  return rep;
}

MetricsReport evaluate_sampled(models::ModelKind kind, const spaces::SpaceKind& space,
                               const spaces::EmbeddingTable& users,
                               const spaces::EmbeddingTable& items,
                               const data::InteractionDataset& ds, const data::DatasetSplit& split,
                               int n_negatives, std::uint64_t seed, const std::vector<int>& ks,
                               RankTarget target) {
  require_loo(split);
  require(n_negatives >= 0, "n_negatives must be >= 0");
  require(users.rows() == ds.n_users && items.rows() == ds.n_items,
          "embedding tables do not match the dataset");
  const Mat item_points = spaces::materialize_all(space, items);
  const Vec item_biases = items.has_biases() ? items.biases() : Vec::Zero(items.rows());

  RankAccumulator acc(ks);
  for (int u = 0; u < ds.n_users; ++u) {
    const int t = held_out_item(split, u, target);
    if (t < 0) continue;
    const auto& seen = ds.items_by_user[u];  // sorted

    // Negatives come from the never-interacted complement. When it is small
    // enough, take all of it; the ranking then matches the full protocol.
    std::vector<int> negatives;
    const auto complement = static_cast<std::int64_t>(ds.n_items) -
                            static_cast<std::int64_t>(seen.size());
    if (complement <= n_negatives) {
      for (int j = 0; j < ds.n_items; ++j)
        if (!std::binary_search(seen.begin(), seen.end(), j)) negatives.push_back(j);
    } else {
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(u)));
      std::uniform_int_distribution<int> pick(0, ds.n_items - 1);
      std::unordered_set<int> drawn;
      while (static_cast<int>(drawn.size()) < n_negatives) {
        const int j = pick(rng);
        if (std::binary_search(seen.begin(), seen.end(), j)) continue;
        if (drawn.insert(j).second) negatives.push_back(j);
      }
    }

    const Scorer scorer = score_all_items(kind, space, users, item_points, item_biases, u);
    std::int64_t rank = 1;
    for (int j : negatives)
      if (scorer.better(j, t)) ++rank;
    acc.add(rank);
  }
  MetricsReport rep =
      acc.finish(ProtocolSpec{Protocol::sampled, n_negatives, seed}.name());
  if (kind == models::ModelKind::mf_rating)
    add_rating_metrics(rep, space, users, items, ds, split, target);
  return rep;
}

MetricsReport evaluate_ratings_only(const spaces::SpaceKind& space,
                                    const spaces::EmbeddingTable& users,
                                    const spaces::EmbeddingTable& items,
                                    const data::InteractionDataset& ds,
                                    const data::DatasetSplit& split, RankTarget target) {
  require(users.rows() == ds.n_users && items.rows() == ds.n_items,
          "embedding tables do not match the dataset");
  MetricsReport rep;
  rep.protocol = "ratings";
  add_rating_metrics(rep, space, users, items, ds, split, target);
  require(rep.mae.has_value(), "no rated interactions in the target split");
  const std::uint8_t label = target == RankTarget::test ? data::kTest : data::kVal;
  std::unordered_set<int> users_seen;
  for (size_t idx = 0; idx < ds.interactions.size(); ++idx)
    if (split.assignment[idx] == label) users_seen.insert(ds.interactions[idx].user);
  rep.n_users_evaluated = static_cast<std::int64_t>(users_seen.size());
  return rep;
}

MetricsReport evaluate(models::ModelKind kind, const spaces::SpaceKind& space,
                       const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                       const data::InteractionDataset& ds, const data::DatasetSplit& split,
                       const ProtocolSpec& protocol, const std::vector<int>& ks,
                       RankTarget target) {
  if (protocol.kind == Protocol::full)
    return evaluate_full_ranking(kind, space, users, items, ds, split, ks, target);
  return evaluate_sampled(kind, space, users, items, ds, split, protocol.n_negatives,
                          protocol.seed, ks, target);
}

double validation_score(models::ModelKind kind, const spaces::SpaceKind& space,
                        const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                        const data::InteractionDataset& ds, const data::DatasetSplit& split) {
  if (kind == models::ModelKind::mf_rating) {
    MetricsReport rep;
    add_rating_metrics(rep, space, users, items, ds, split, RankTarget::val);
    require(rep.mae.has_value(), "no validation ratings to score");
    return -*rep.mae;
  }
  const auto rep =
      evaluate_full_ranking(kind, space, users, items, ds, split, {10}, RankTarget::val);
  return rep.hr.at(10);
}

// ---------------------------------------------------------------------------
// Embedding distortion.
// ---------------------------------------------------------------------------

double mean_multiplicative_distortion(const Mat& graph_dist, const spaces::SpaceKind& space,
                                      const spaces::EmbeddingTable& table) {
  const Index n = graph_dist.rows();
  require(n >= 2 && graph_dist.cols() == n, "graph distance matrix must be square with n >= 2");
  require(table.rows() == n, "embedding table does not match the graph");
  require(graph_dist.allFinite(), "graph distances must be finite");
  const Mat points = spaces::materialize_all(space, table);

  std::vector<double> log_ratios;
  log_ratios.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i) {
    require(graph_dist(i, i) == 0.0, "graph distance diagonal must be zero");
    for (Index j = i + 1; j < n; ++j) {
      require(graph_dist(i, j) > 0.0 && graph_dist(i, j) == graph_dist(j, i),
              "graph distances must be symmetric and positive off the diagonal");
      const double emb =
          space.hyperbolic()
              ? geometry::poincare_distance(points.row(i).transpose(),
                                            points.row(j).transpose(), space.curvature)
              : (points.row(i) - points.row(j)).norm();
      // A collapsed pair gets a floor instead of -inf so the mean stays
      // finite and harshly penalized.
      log_ratios.push_back(std::log(std::max(emb, 1e-300)) - std::log(graph_dist(i, j)));
    }
  }
  double mean_log = 0.0;
  for (double lr : log_ratios) mean_log += lr;
  mean_log /= static_cast<double>(log_ratios.size());
  double total = 0.0;
  for (double lr : log_ratios) total += std::exp(std::abs(lr - mean_log));
  return total / static_cast<double>(log_ratios.size());
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

std::vector<ReportRow> report_rows(const std::string& dataset, const std::string& model,
                                   const std::string& space, int dim, std::uint64_t seed,
                                   const MetricsReport& report) {
  std::vector<ReportRow> rows;
  const auto push = [&](const std::string& metric, int k, double value) {
    rows.push_back({dataset, model, space, dim, metric, k, value, seed, report.protocol});
  };
  for (const auto& [k, v] : report.hr) push("hr", k, v);
  for (const auto& [k, v] : report.ndcg) push("ndcg", k, v);
  if (report.mae) push("mae", 0, *report.mae);
  if (report.rmse) push("rmse", 0, *report.rmse);
  push("n_users", 0, static_cast<double>(report.n_users_evaluated));
  return rows;
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path + " for writing");
  out << kCsvHeader << "\n";
  for (const auto& r : rows) {
    require_simple_field(r.dataset, "dataset");
    require_simple_field(r.model, "model");
    require_simple_field(r.space, "space");
    require_simple_field(r.metric, "metric");
    require_simple_field(r.protocol, "protocol");
    out << r.dataset << ',' << r.model << ',' << r.space << ',' << r.dim << ',' << r.metric << ','
        << r.k << ',' << format_double(r.value) << ',' << r.seed << ',' << r.protocol << "\n";
  }
  require(out.good(), "write to " + path + " failed");
}

std::vector<ReportRow> load_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kCsvHeader,
          path + ": missing or unexpected report header");
  std::vector<ReportRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    require(fields.size() == 9,
            path + " line " + std::to_string(line_no) + ": expected 9 fields, got " +
                std::to_string(fields.size()));
    try {
      ReportRow r;
      r.dataset = fields[0];
      r.model = fields[1];
      r.space = fields[2];
      r.dim = std::stoi(fields[3]);
      r.metric = fields[4];
      r.k = std::stoi(fields[5]);
      r.value = std::stod(fields[6]);
      r.seed = std::stoull(fields[7]);
      r.protocol = fields[8];
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw invalid_input_error(path + " line " + std::to_string(line_no) +
                                ": malformed report row");
    }
  }
  return rows;
}

void write_report_json(const std::string& path, const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"dataset", r.dataset},
                   {"model", r.model},
                   {"space", r.space},
                   {"dim", r.dim},
                   {"metric", r.metric},
                   {"k", r.k},
                   {"value", r.value},
                   {"seed", r.seed},
                   {"protocol", r.protocol}});
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path + " for writing");
  out << arr.dump(2) << "\n";
  require(out.good(), "write to " + path + " failed");
}

}  // namespace hyperrec::eval
