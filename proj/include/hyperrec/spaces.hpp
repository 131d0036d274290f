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

// The Euclidean-vs-hyperbolic abstraction. Embeddings are stored in an
// unconstrained parameter domain: plain coordinates for Euclidean space,
// tangent vectors at the origin for the Poincare ball. materialize() turns a
// stored row into a point of the chosen space; the two scores (distance and
// biased inner product) and their parameter-domain gradients are defined on
// materialized points, so one optimizer serves both spaces.

#pragma once

#include <Eigen/Core>

#include <string>

#include "hyperrec/common.hpp"
#include "hyperrec/geometry.hpp"

namespace hyperrec::spaces {

enum class SpaceTag : int { euclidean = 0, poincare_ball = 1 };

struct SpaceKind {
  SpaceTag tag = SpaceTag::euclidean;
  geometry::Curvature curvature{1.0};   // poincare_ball only
  double max_hyp_norm = 6.0;            // poincare_ball only

  static SpaceKind euclidean() { return SpaceKind{}; }
  static SpaceKind poincare_ball(double c = 1.0, double max_hyp_norm = 6.0) {
    require(std::isfinite(max_hyp_norm) && max_hyp_norm > 0.0,
            "max_hyp_norm must be finite and positive");
    return SpaceKind{SpaceTag::poincare_ball, geometry::Curvature(c), max_hyp_norm};
  }

  bool hyperbolic() const { return tag == SpaceTag::poincare_ball; }
  std::string name() const { return hyperbolic() ? "poincare" : "euclidean"; }
};

SpaceKind parse_space(const std::string& name, double curvature, double max_hyp_norm);

// Per-entity parameter rows plus optional scalar biases (projection models
// only). Entries live in the unconstrained domain; nothing here knows about
// the ball until materialization.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(Index rows, Index dim, bool with_biases)
      : params_(Mat::Zero(rows, dim)), biases_(with_biases ? Vec::Zero(rows) : Vec()) {
    require(rows >= 1 && dim >= 1, "embedding table needs rows >= 1 and dim >= 1");
  }

  Index rows() const { return params_.rows(); }
  Index dim() const { return params_.cols(); }
  Mat& params() { return params_; }
  const Mat& params() const { return params_; }

  bool has_biases() const { return biases_.size() > 0; }
  Vec& biases() { return biases_; }
  const Vec& biases() const { return biases_; }
  double bias(Index row) const { return has_biases() ? biases_[row] : 0.0; }

  void check_row(Index row) const {
    require(row >= 0 && row < rows(),
            "row " + std::to_string(row) + " out of range [0, " + std::to_string(rows()) + ")");
  }

 private:
  Mat params_;
  Vec biases_;
};

// Uniform [-scale, scale] entries, deterministic per seed. Biases start at 0.
EmbeddingTable init_embeddings(Index rows, Index dim, double scale, std::uint64_t seed,
                               bool with_biases = false);

// Stored row -> point of the space. Euclidean is the identity; the ball path
// is exp map followed by the hyperbolic-norm cap, so the result satisfies
// the domain invariant for arbitrary stored parameters.
Vec materialize(const SpaceKind& space, const EmbeddingTable& table, Index row);

// All rows at once, one materialized point per row.
Mat materialize_all(const SpaceKind& space, const EmbeddingTable& table);

// Scores over materialized points.
double score_distance(const SpaceKind& space, const Vec& u, const Vec& v);
double score_projection(const SpaceKind& space, const Vec& u, const Vec& v, double bias);

// Batched scores of one point against many (points as rows). Row i of the
// result equals the scalar score against points.row(i) to 1e-12.
Vec score_distance_batch(const SpaceKind& space, const Mat& points, const Vec& u);
Vec score_projection_batch(const SpaceKind& space, const Mat& points, const Vec& u,
                           const Vec& point_biases, double u_bias);

// Squared distance between two stored rows with gradients in the parameter
// domain (chain rule through the exp map for the ball). `dist` is the
// unsquared distance; gradients are of the squared distance.
struct DistanceSqGrad {
  double dist = 0.0;
  Vec grad_a;
  Vec grad_b;
};
DistanceSqGrad distance_sq_with_grad(const SpaceKind& space, const EmbeddingTable& ta, Index ia,
                                     const EmbeddingTable& tb, Index ib);

// Projection score (inner product plus both biases) between two stored rows
// with parameter-domain gradients. Bias gradients are 1 wherever a bias is
// present, so only the vector parts are returned.
struct ProjectionGrad {
  double score = 0.0;
  Vec grad_a;
  Vec grad_b;
};
ProjectionGrad projection_with_grad(const SpaceKind& space, const EmbeddingTable& ta, Index ia,
                                    const EmbeddingTable& tb, Index ib);

// Binary checkpoint: header {magic "HREC1", space tag, c, rows, dim, bias
// flag} then row-major little-endian float64 parameters, then biases.
void save_table(const std::string& path, const SpaceKind& space, const EmbeddingTable& table);

struct LoadedTable {
  SpaceKind space;  // tag and curvature from the file; max_hyp_norm is the caller's default
  EmbeddingTable table;
};
LoadedTable load_table(const std::string& path);

}  // namespace hyperrec::spaces
