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

// Adam over the unconstrained parameter domain, sparse-lazy: moment
// accumulators advance only for rows a batch touched, while the global step
// count drives bias correction. Hyperbolic tables get a post-step tangent
// clip that caps the materialized hyperbolic norm.

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "hyperrec/common.hpp"
#include "hyperrec/spaces.hpp"

namespace hyperrec::optim {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global-norm gradient clip across the whole sparse batch; 0 disables.
  double clip_norm = 0.0;
};

// Row-indexed gradient accumulator for one table. Ordered map so iteration
// (and therefore the update) is deterministic.
struct SparseGrads {
  std::map<Index, Vec> rows;
  std::map<Index, double> biases;

  void add_row(Index row, const Vec& g) {
    auto [it, inserted] = rows.try_emplace(row, g);
    if (!inserted) it->second += g;
  }
  void add_bias(Index row, double g) { biases[row] += g; }
  bool empty() const { return rows.empty() && biases.empty(); }
  double squared_norm() const;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(Index rows, Index dim, AdamConfig cfg, bool with_biases);

  // One bias-corrected update over the touched rows. Rejects the whole batch
  // (no mutation) when any gradient is non-finite, naming the row.
  void step(spaces::EmbeddingTable& table, const SparseGrads& grads);

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  Mat m_, v_;
  Vec mb_, vb_;
  std::int64_t step_count_ = 0;
  AdamConfig cfg_;
};

// Tangent-norm clip for hyperbolic tables: the hyperbolic norm of
// exp_o(t) is 2||t|| for every curvature, so capping ||t|| at
// max_hyp_norm / 2 caps the materialized norm at max_hyp_norm. Euclidean
// tables pass through untouched.
void post_step_project(const spaces::SpaceKind& space, spaces::EmbeddingTable& table,
                       const std::vector<Index>& touched_rows);

}  // namespace hyperrec::optim
