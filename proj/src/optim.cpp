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

#include "hyperrec/optim.hpp"

#include <cmath>

namespace hyperrec::optim {

double SparseGrads::squared_norm() const {
  double total = 0.0;
  for (const auto& [row, g] : rows) total += g.squaredNorm();
  for (const auto& [row, g] : biases) total += g * g;
  return total;
}

AdamState::AdamState(Index rows, Index dim, AdamConfig cfg, bool with_biases)
    : m_(Mat::Zero(rows, dim)),
      v_(Mat::Zero(rows, dim)),
      mb_(with_biases ? Vec::Zero(rows) : Vec()),
      vb_(with_biases ? Vec::Zero(rows) : Vec()),
      cfg_(cfg) {
  require(rows >= 1 && dim >= 1, "optimizer state needs rows >= 1 and dim >= 1");
  require(cfg.lr > 0.0 && std::isfinite(cfg.lr), "learning rate must be finite and positive");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(cfg.eps > 0.0, "Adam eps must be positive");
  require(cfg.clip_norm >= 0.0, "clip_norm must be >= 0");
}

void AdamState::step(spaces::EmbeddingTable& table, const SparseGrads& grads) {
  require(m_.rows() == table.rows() && m_.cols() == table.dim(),
          "optimizer state shape does not match the table");
  require(mb_.size() == 0 || table.has_biases(),
          "optimizer tracks biases but the table has none");

  // Validate everything before mutating anything: a bad row rejects the batch.
  for (const auto& [row, g] : grads.rows) {
    table.check_row(row);
    require(g.size() == table.dim(), "gradient dim mismatch at row " + std::to_string(row));
    require(g.allFinite(), "non-finite gradient for row " + std::to_string(row));
  }
  for (const auto& [row, g] : grads.biases) {
    table.check_row(row);
    require(table.has_biases() && mb_.size() == table.rows(),
            "bias gradient but biases are not tracked");
    require(std::isfinite(g), "non-finite bias gradient for row " + std::to_string(row));
  }

  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

  for (const auto& [row, g_raw] : grads.rows) {
    const Vec g = scale * g_raw;
    m_.row(row) = cfg_.beta1 * m_.row(row) + (1.0 - cfg_.beta1) * g.transpose();
    v_.row(row) = cfg_.beta2 * v_.row(row).array().matrix() +
                  (1.0 - cfg_.beta2) * g.array().square().matrix().transpose();
    const Eigen::ArrayXd m_hat = m_.row(row).transpose().array() / bc1;
    const Eigen::ArrayXd v_hat = v_.row(row).transpose().array() / bc2;
    table.params().row(row) -= (cfg_.lr * m_hat / (v_hat.sqrt() + cfg_.eps)).matrix().transpose();
  }
  for (const auto& [row, g_raw] : grads.biases) {
    const double g = scale * g_raw;
    mb_[row] = cfg_.beta1 * mb_[row] + (1.0 - cfg_.beta1) * g;
    vb_[row] = cfg_.beta2 * vb_[row] + (1.0 - cfg_.beta2) * g * g;
    const double m_hat = mb_[row] / bc1;
    const double v_hat = vb_[row] / bc2;
    table.biases()[row] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
  }
}

void post_step_project(const spaces::SpaceKind& space, spaces::EmbeddingTable& table,
                       const std::vector<Index>& touched_rows) {
  if (!space.hyperbolic()) return;
  const double cap = space.max_hyp_norm / 2.0;
  for (Index row : touched_rows) {
    table.check_row(row);
    const double n = table.params().row(row).norm();
    if (n > cap) table.params().row(row) *= cap / n;
  }
}

}  // namespace hyperrec::optim
