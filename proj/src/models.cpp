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

#include "hyperrec/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace hyperrec::models {

ModelKind parse_model(const std::string& name) {
  if (name == "mf_bpr") return ModelKind::mf_bpr;
  if (name == "mf_rating") return ModelKind::mf_rating;
  if (name == "cml") return ModelKind::cml;
  if (name == "scml") return ModelKind::scml;
  throw invalid_input_error("unknown model: " + name +
                            " (expected mf_bpr, mf_rating, cml, or scml)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mf_bpr: return "mf_bpr";
    case ModelKind::mf_rating: return "mf_rating";
    case ModelKind::cml: return "cml";
    case ModelKind::scml: return "scml";
  }
  return "cml";
}

bool is_distance_model(ModelKind kind) {
  return kind == ModelKind::cml || kind == ModelKind::scml;
}

void ModelConfig::validate() const {
  require(dim >= 1, "dim must be >= 1");
  require(std::isfinite(lr) && lr > 0.0, "lr must be finite and positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 0, "epochs must be >= 0");
  require(margin_item >= 0.0 && margin_social >= 0.0, "margins must be >= 0");
  require(social_weight >= 0.0, "social_weight must be >= 0");
  require(negatives_per_positive >= 0, "negatives_per_positive must be >= 0");
  require(std::isfinite(init_scale) && init_scale > 0.0, "init_scale must be positive");
  require(grad_clip_norm >= 0.0, "grad_clip_norm must be >= 0");
}

double bpr_loss(double pos_score, double neg_score) {
  const double gap = pos_score - neg_score;
  // softplus(-gap) without overflow on either side
  return gap > 0.0 ? std::log1p(std::exp(-gap)) : -gap + std::log1p(std::exp(gap));
}

double hinge_triplet_loss(double d_pos, double d_neg, double margin) {
  return std::max(margin + d_pos * d_pos - d_neg * d_neg, 0.0);
}

double mf_rating_loss(double pred, double observed) {
  const double diff = pred - observed;
  return diff * diff;
}

BatchResult scml_loss(const std::vector<data::TrainingTriplet>& item_triplets,
                      const std::vector<SocialTriplet>& social_triplets, double lambda,
                      double margin_item, double margin_social, const spaces::SpaceKind& space,
                      const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                      const std::vector<double>* item_weights) {
  require(item_weights == nullptr || item_weights->size() == item_triplets.size(),
          "item weight count must match triplet count");
  BatchResult out;
  for (std::size_t n = 0; n < item_triplets.size(); ++n) {
    const auto& t = item_triplets[n];
    const double w = item_weights ? (*item_weights)[n] : 1.0;
    ++out.item_units;
    if (w == 0.0) continue;
    const auto pos = spaces::distance_sq_with_grad(space, users, t.user, items, t.positive);
    const auto neg = spaces::distance_sq_with_grad(space, users, t.user, items, t.negative);
    const double term = margin_item + pos.dist * pos.dist - neg.dist * neg.dist;
    if (term <= 0.0) continue;
    out.loss += w * term;
    out.user_grads.add_row(t.user, w * (pos.grad_a - neg.grad_a));
    out.item_grads.add_row(t.positive, w * pos.grad_b);
    out.item_grads.add_row(t.negative, -w * neg.grad_b);
  }
  for (const auto& s : social_triplets) {
    ++out.social_units;
    if (lambda == 0.0) continue;
    const auto pos = spaces::distance_sq_with_grad(space, users, s.user, users, s.positive_neighbor);
    const auto neg = spaces::distance_sq_with_grad(space, users, s.user, users, s.negative_user);
    const double term = margin_social + pos.dist * pos.dist - neg.dist * neg.dist;
    if (term <= 0.0) continue;
    out.loss += lambda * term;
    out.user_grads.add_row(s.user, lambda * (pos.grad_a - neg.grad_a));
    out.user_grads.add_row(s.positive_neighbor, lambda * pos.grad_b);
    out.user_grads.add_row(s.negative_user, -lambda * neg.grad_b);
  }
  return out;
}

BatchResult bpr_batch(const std::vector<data::TrainingTriplet>& triplets,
                      const spaces::SpaceKind& space, const spaces::EmbeddingTable& users,
                      const spaces::EmbeddingTable& items) {
  BatchResult out;
  for (const auto& t : triplets) {
    ++out.item_units;
    const auto pos = spaces::projection_with_grad(space, users, t.user, items, t.positive);
    const auto neg = spaces::projection_with_grad(space, users, t.user, items, t.negative);
    out.loss += bpr_loss(pos.score, neg.score);
    // d loss / d gap = -sigmoid(-gap)
    const double gap = pos.score - neg.score;
    const double dgap = -1.0 / (1.0 + std::exp(gap));
    out.user_grads.add_row(t.user, dgap * (pos.grad_a - neg.grad_a));
    out.item_grads.add_row(t.positive, dgap * pos.grad_b);
    out.item_grads.add_row(t.negative, -dgap * neg.grad_b);
    if (users.has_biases()) {
      // user bias cancels in the gap; item biases receive +/- dgap
      out.item_grads.add_bias(t.positive, dgap);
      out.item_grads.add_bias(t.negative, -dgap);
    }
  }
  return out;
}

BatchResult rating_batch(const std::vector<RatingExample>& examples,
                         const spaces::SpaceKind& space, const spaces::EmbeddingTable& users,
                         const spaces::EmbeddingTable& items) {
  BatchResult out;
  for (const auto& e : examples) {
    ++out.item_units;
    const auto pred = spaces::projection_with_grad(space, users, e.user, items, e.item);
    out.loss += mf_rating_loss(pred.score, e.rating);
    const double dpred = 2.0 * (pred.score - e.rating);
    out.user_grads.add_row(e.user, dpred * pred.grad_a);
    out.item_grads.add_row(e.item, dpred * pred.grad_b);
    if (users.has_biases()) out.user_grads.add_bias(e.user, dpred);
    if (items.has_biases()) out.item_grads.add_bias(e.item, dpred);
  }
  return out;
}

namespace {

std::vector<Index> touched_rows(const optim::SparseGrads& grads) {
  std::vector<Index> rows;
  rows.reserve(grads.rows.size());
  for (const auto& [row, g] : grads.rows) rows.push_back(row);
  return rows;
}

void apply_batch(const ModelConfig& cfg, BatchResult& batch, spaces::EmbeddingTable& users,
                 spaces::EmbeddingTable& items, optim::AdamState& user_opt,
                 optim::AdamState& item_opt) {
  user_opt.step(users, batch.user_grads);
  item_opt.step(items, batch.item_grads);
  optim::post_step_project(cfg.space, users, touched_rows(batch.user_grads));
  optim::post_step_project(cfg.space, items, touched_rows(batch.item_grads));
}

EpochStats run_rating_epoch(const ModelConfig& cfg, const data::InteractionDataset& ds,
                            const data::DatasetSplit& split, spaces::EmbeddingTable& users,
                            spaces::EmbeddingTable& items, optim::AdamState& user_opt,
                            optim::AdamState& item_opt, std::mt19937_64& rng) {
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < ds.interactions.size(); ++i) {
    if (split.assignment[i] == data::kTrain) train_idx.push_back(i);
  }
  require(!train_idx.empty(), "empty training set");
  std::shuffle(train_idx.begin(), train_idx.end(), rng);

  EpochStats stats;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
    const std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
    std::vector<RatingExample> batch;
    batch.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      const auto& r = ds.interactions[train_idx[i]];
      batch.push_back(RatingExample{r.user, r.item, r.rating});
    }
    BatchResult res = rating_batch(batch, cfg.space, users, items);
    loss_sum += res.loss;
    stats.units_seen += res.item_units;
    apply_batch(cfg, res, users, items, user_opt, item_opt);
  }
  stats.mean_loss = loss_sum / static_cast<double>(stats.units_seen);
  return stats;
}

EpochStats run_ranking_epoch(const ModelConfig& cfg, const data::InteractionDataset& ds,
                             const data::DatasetSplit& split, spaces::EmbeddingTable& users,
                             spaces::EmbeddingTable& items, optim::AdamState& user_opt,
                             optim::AdamState& item_opt, std::mt19937_64& rng) {
  require(!split.train_positives.empty(), "empty training set");
  std::vector<std::size_t> order(split.train_positives.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const int n_neg = cfg.resolved_negatives();
  const bool social = cfg.model == ModelKind::scml && ds.has_social();
  EpochStats stats;
  double loss_sum = 0.0;

  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
    std::vector<data::TrainingTriplet> triplets;
    std::vector<SocialTriplet> social_triplets;
    triplets.reserve((stop - start) * n_neg);
    for (std::size_t i = start; i < stop; ++i) {
      const auto& [user, item] = split.train_positives[order[i]];
      for (int t = 0; t < n_neg; ++t) {
        triplets.push_back(
            data::TrainingTriplet{user, item, data::sample_negative_item(ds, user, rng)});
      }
      if (social) {
        if (const auto pair = data::sample_social_pair(ds, user, rng)) {
          social_triplets.push_back(SocialTriplet{user, pair->positive_neighbor,
                                                  pair->negative_user});
        }
      }
    }

    BatchResult res;
    if (cfg.model == ModelKind::mf_bpr) {
      res = bpr_batch(triplets, cfg.space, users, items);
    } else if (cfg.rank_weight) {
      // Weight each positive's triplets by log(1 + estimated rank), where
      // the rank estimate scales the violating fraction of its negatives up
      // to the catalog size.
      std::vector<double> weights(triplets.size(), 1.0);
      for (std::size_t i = 0; i < triplets.size(); i += n_neg) {
        int violators = 0;
        for (int t = 0; t < n_neg; ++t) {
          const auto& trip = triplets[i + t];
          const auto pos =
              spaces::distance_sq_with_grad(cfg.space, users, trip.user, items, trip.positive);
          const auto neg =
              spaces::distance_sq_with_grad(cfg.space, users, trip.user, items, trip.negative);
          if (cfg.margin_item + pos.dist * pos.dist - neg.dist * neg.dist > 0.0) ++violators;
        }
        const double rank_est = std::floor(static_cast<double>(violators) * ds.n_items / n_neg);
        const double w = std::log1p(rank_est);
        for (int t = 0; t < n_neg; ++t) weights[i + t] = w;
      }
      res = scml_loss(triplets, social_triplets, cfg.social_weight, cfg.margin_item,
                      cfg.margin_social, cfg.space, users, items, &weights);
    } else {
      const double lambda = cfg.model == ModelKind::scml ? cfg.social_weight : 0.0;
      res = scml_loss(triplets, social_triplets, lambda, cfg.margin_item, cfg.margin_social,
                      cfg.space, users, items);
    }
    loss_sum += res.loss;
    stats.units_seen += res.item_units;
    apply_batch(cfg, res, users, items, user_opt, item_opt);
  }
  stats.mean_loss = loss_sum / static_cast<double>(stats.units_seen);
  return stats;
}

}  // namespace

EpochStats train_epoch(const ModelConfig& cfg, const data::InteractionDataset& ds,
                       const data::DatasetSplit& split, spaces::EmbeddingTable& users,
                       spaces::EmbeddingTable& items, optim::AdamState& user_opt,
                       optim::AdamState& item_opt, int epoch_index) {
  cfg.validate();
  require(users.rows() == ds.n_users && items.rows() == ds.n_items,
          "table shapes do not match the dataset");
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch_index), 0x45504f43ULL));

  EpochStats stats;
  if (cfg.model == ModelKind::mf_rating) {
    stats = run_rating_epoch(cfg, ds, split, users, items, user_opt, item_opt, rng);
  } else {
    stats = run_ranking_epoch(cfg, ds, split, users, items, user_opt, item_opt, rng);
  }
  require(std::isfinite(stats.mean_loss), "training diverged: non-finite epoch loss");
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

std::vector<int> recommend_topn(ModelKind kind, const spaces::SpaceKind& space,
                                const spaces::EmbeddingTable& users,
                                const spaces::EmbeddingTable& items, int user, int k,
                                const std::vector<int>& exclude_sorted) {
  require(user >= 0 && user < users.rows(), "unknown user id " + std::to_string(user));
  require(k >= 1, "k must be >= 1");
  const Vec u = spaces::materialize(space, users, user);
  const Mat pts = spaces::materialize_all(space, items);

  Vec scores;
  bool ascending;
  if (is_distance_model(kind)) {
    scores = spaces::score_distance_batch(space, pts, u);
    ascending = true;
  } else {
    scores = spaces::score_projection_batch(space, pts, u, items.biases(), users.bias(user));
    ascending = false;
  }

  std::vector<int> candidates;
  candidates.reserve(items.rows());
  for (int i = 0; i < items.rows(); ++i) {
    if (!std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), i)) {
      candidates.push_back(i);
    }
  }
  const auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return ascending ? scores[a] < scores[b] : scores[a] > scores[b];
    return a < b;
  };
  const std::size_t take = std::min<std::size_t>(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), better);
  candidates.resize(take);
  return candidates;
}

spaces::EmbeddingTable embed_graph(const Mat& graph_dist, const GraphEmbedConfig& cfg) {
  const Index n = graph_dist.rows();
  require(n >= 2 && graph_dist.cols() == n, "graph distance matrix must be square, n >= 2");
  require(graph_dist.allFinite(), "graph distances must be finite");
  require(cfg.dim >= 1 && cfg.lr > 0.0 && cfg.epochs >= 0 && cfg.target_scale > 0.0,
          "bad graph embedding config");
  for (Index i = 0; i < n; ++i) {
    require(graph_dist(i, i) == 0.0, "graph distance diagonal must be zero");
    for (Index j = i + 1; j < n; ++j) {
      require(graph_dist(i, j) > 0.0 && graph_dist(i, j) == graph_dist(j, i),
              "graph distances must be positive and symmetric off the diagonal");
    }
  }

  spaces::EmbeddingTable table = spaces::init_embeddings(n, cfg.dim, cfg.init_scale, cfg.seed);
  optim::AdamConfig adam;
  adam.lr = cfg.lr;
  optim::AdamState opt(n, cfg.dim, adam, false);
  std::vector<Index> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    optim::SparseGrads grads;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const auto g = spaces::distance_sq_with_grad(cfg.space, table, i, table, j);
        const double t2 = std::pow(cfg.target_scale * graph_dist(i, j), 2);
        const double resid = g.dist * g.dist / t2 - 1.0;
        const double coeff = 2.0 * resid / t2;
        grads.add_row(i, coeff * g.grad_a);
        grads.add_row(j, coeff * g.grad_b);
      }
    }
    opt.step(table, grads);
    optim::post_step_project(cfg.space, table, all_rows);
  }
  return table;
}

}  // namespace hyperrec::models
