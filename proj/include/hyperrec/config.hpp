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

// Experiment configuration as a flat key=value text file. Every key has a
// default except dataset; unknown keys are rejected so a typo cannot
// silently fall back to a default. Values layer as defaults, then file,
// then command-line flags.

#pragma once

#include <string>
#include <vector>

#include "hyperrec/models.hpp"
#include "hyperrec/spaces.hpp"

namespace hyperrec::config {

struct ExperimentConfig {
  // Dataset.
  std::string dataset;                      // canonical dataset directory (required)
  std::string split = "leave_one_out";      // leave_one_out | ratio
  std::uint64_t split_seed = 42;            // ratio split only

  // Model cell.
  std::string model = "cml";
  std::string space = "euclidean";          // euclidean | poincare
  double curvature = 1.0;
  double max_hyp_norm = 6.0;
  int dim = 10;
  double margin_item = 1.0;
  double margin_social = 1.0;
  // Squared hyperbolic distances live on a larger scale than Euclidean
  // ones, so hinge margins get their own hyperbolic values.
  double hyp_margin_item = 8.0;
  double hyp_margin_social = 8.0;
  double social_weight = 0.1;
  double lr = 0.01;
  int batch_size = 5000;
  int epochs = 20;
  int negatives_per_positive = 0;           // 0 = model default
  double init_scale = 0.01;
  double grad_clip_norm = 0.0;              // 0 disables
  bool rank_weight = false;

  // Experiment grid and outputs.
  std::vector<int> dims;                    // sweep dims; empty means {dim}
  std::vector<std::uint64_t> seeds = {42};
  std::string out_dir = "runs";
  std::string protocol = "full";            // full | sampled:<n>
  std::uint64_t eval_seed = 0;              // sampled-protocol negatives

  // The space this config names for single-cell commands.
  spaces::SpaceKind make_space() const;

  // One training cell: the margins follow the chosen space.
  models::ModelConfig to_model_config(const spaces::SpaceKind& cell_space, int cell_dim,
                                      std::uint64_t cell_seed) const;

  std::vector<int> sweep_dims() const { return dims.empty() ? std::vector<int>{dim} : dims; }

  void validate() const;
};

// All recognized keys, in serialization order. The CLI mirrors each as a
// --<key> flag.
const std::vector<std::string>& config_keys();

// Applies one key=value pair; unknown keys and unparsable values throw.
void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// key=value per line; blank lines and lines starting with # are skipped.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);

// Every key in a fixed order; parse_config_text(serialize(c)) reproduces c.
std::string serialize(const ExperimentConfig& cfg);

}  // namespace hyperrec::config
