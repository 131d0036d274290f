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

// The four recommendation models, each runnable in either space:
//   mf_bpr     projection score, pairwise log-sigmoid ranking loss
//   mf_rating  projection score, squared error against observed ratings
//   cml        distance score, squared-distance hinge over item triplets
//   scml       cml plus a socially regularized hinge over trusted users
// CML is exactly SCML with zero social weight and no social triplets; the
// two share one code path so the degenerate case is bitwise identical.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperrec/common.hpp"
#include "hyperrec/data.hpp"
#include "hyperrec/optim.hpp"
#include "hyperrec/spaces.hpp"

namespace hyperrec::models {

enum class ModelKind { mf_bpr, mf_rating, cml, scml };

ModelKind parse_model(const std::string& name);
std::string to_string(ModelKind kind);
bool is_distance_model(ModelKind kind);
inline bool is_projection_model(ModelKind kind) { return !is_distance_model(kind); }

struct ModelConfig {
  ModelKind model = ModelKind::cml;
  spaces::SpaceKind space;
  int dim = 10;
  double margin_item = 1.0;
  double margin_social = 1.0;
  double social_weight = 0.1;  // lambda
  double lr = 0.01;
  int batch_size = 5000;
  int epochs = 20;
  std::uint64_t seed = 42;
  int negatives_per_positive = 0;  // 0 = model default: 1 projection, 10 distance
  double init_scale = 0.01;
  double grad_clip_norm = 0.0;  // 0 disables
  // Weight item hinges by log(1 + estimated rank) as in the original metric
  // learning formulation; off by default, the plain hinge is the reference.
  bool rank_weight = false;

  int resolved_negatives() const {
    if (negatives_per_positive > 0) return negatives_per_positive;
    return is_distance_model(model) ? 10 : 1;
  }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Scalar losses.
// ---------------------------------------------------------------------------

// -ln sigmoid(pos - neg), evaluated via softplus so large gaps are stable.
double bpr_loss(double pos_score, double neg_score);

// max(margin + d_pos^2 - d_neg^2, 0). Inputs are raw (unsquared) distances.
double hinge_triplet_loss(double d_pos, double d_neg, double margin);

// (pred - observed)^2.
double mf_rating_loss(double pred, double observed);

// ---------------------------------------------------------------------------
// Batched losses with parameter-domain gradients.
// ---------------------------------------------------------------------------

struct SocialTriplet {
  int user = 0;
  int positive_neighbor = 0;
  int negative_user = 0;
};

struct BatchResult {
  double loss = 0.0;            // sum over the batch
  std::int64_t item_units = 0;  // triplets (ranking) or interactions (rating)
  std::int64_t social_units = 0;
  optim::SparseGrads user_grads;
  optim::SparseGrads item_grads;
};

// Item hinge sum plus lambda times the social hinge sum. item_weights, when
// given, scales each item triplet's loss and gradient (rank weighting).
BatchResult scml_loss(const std::vector<data::TrainingTriplet>& item_triplets,
                      const std::vector<SocialTriplet>& social_triplets, double lambda,
                      double margin_item, double margin_social, const spaces::SpaceKind& space,
                      const spaces::EmbeddingTable& users, const spaces::EmbeddingTable& items,
                      const std::vector<double>* item_weights = nullptr);

BatchResult bpr_batch(const std::vector<data::TrainingTriplet>& triplets,
                      const spaces::SpaceKind& space, const spaces::EmbeddingTable& users,
                      const spaces::EmbeddingTable& items);

struct RatingExample {
  int user = 0;
  int item = 0;
  double rating = 0.0;
};

BatchResult rating_batch(const std::vector<RatingExample>& examples,
                         const spaces::SpaceKind& space, const spaces::EmbeddingTable& users,
                         const spaces::EmbeddingTable& items);

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

struct EpochStats {
  double mean_loss = 0.0;       // batch-loss sum / item units
  std::int64_t units_seen = 0;  // item triplets or rating examples
  double wall_seconds = 0.0;
};

// One shuffled pass over the train split: sample negatives (and social
// triplets for scml), accumulate batch gradients, step both optimizers,
// project hyperbolic rows. Deterministic for a fixed (seed, epoch_index).
EpochStats train_epoch(const ModelConfig& cfg, const data::InteractionDataset& ds,
                       const data::DatasetSplit& split, spaces::EmbeddingTable& users,
                       spaces::EmbeddingTable& items, optim::AdamState& user_opt,
                       optim::AdamState& item_opt, int epoch_index);

// Top-k items for one user: ascending distance for distance models,
// descending projection score otherwise; excluded ids (sorted) are skipped;
// ties break toward the lower item id.
std::vector<int> recommend_topn(ModelKind kind, const spaces::SpaceKind& space,
                                const spaces::EmbeddingTable& users,
                                const spaces::EmbeddingTable& items, int user, int k,
                                const std::vector<int>& exclude_sorted);

// ---------------------------------------------------------------------------
// Graph embedding (distortion benchmarks).
// ---------------------------------------------------------------------------

struct GraphEmbedConfig {
  spaces::SpaceKind space;
  int dim = 2;
  double lr = 0.02;
  int epochs = 1000;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  // Graph distances are multiplied by this scale before fitting.
  double target_scale = 1.0;
};

// Fits points so pairwise space distances track scaled graph distances by
// minimizing sum over pairs of (d^2 / t^2 - 1)^2, full-batch Adam.
spaces::EmbeddingTable embed_graph(const Mat& graph_dist, const GraphEmbedConfig& cfg);

}  // namespace hyperrec::models
