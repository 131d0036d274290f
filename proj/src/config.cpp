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

#include "hyperrec/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hyperrec/eval.hpp"

namespace hyperrec::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <class T>
T parse_number(const std::string& value, const std::string& key,
               T (*convert)(const std::string&, size_t*)) {
  try {
    size_t pos = 0;
    const T out = convert(value, &pos);
    require(pos == value.size(), "trailing characters");
    return out;
  } catch (const std::exception&) {
    throw invalid_input_error("bad value '" + value + "' for key " + key);
  }
}

int parse_int(const std::string& value, const std::string& key) {
  return parse_number<int>(value, key,
                           [](const std::string& s, size_t* p) { return std::stoi(s, p); });
}

double parse_real(const std::string& value, const std::string& key) {
  return parse_number<double>(value, key,
                              [](const std::string& s, size_t* p) { return std::stod(s, p); });
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  require(!value.empty() && value[0] != '-', "bad value '" + value + "' for key " + key);
  return parse_number<std::uint64_t>(
      value, key, [](const std::string& s, size_t* p) -> std::uint64_t {
        return std::stoull(s, p);
      });
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw invalid_input_error("bad value '" + value + "' for key " + key +
                            ": expected true/false/1/0");
}

template <class T>
std::vector<T> parse_list(const std::string& value, const std::string& key,
                          T (*one)(const std::string&, const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    require(!part.empty(), "empty element in list for key " + key);
    out.push_back(one(part, key));
  }
  require(!out.empty(), "key " + key + " needs at least one element");
  return out;
}

template <class T>
std::string join_list(const std::vector<T>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset",        "split",          "split_seed",        "model",
      "space",          "curvature",      "max_hyp_norm",      "dim",
      "margin_item",    "margin_social",  "hyp_margin_item",   "hyp_margin_social",
      "social_weight",  "lr",             "batch_size",        "epochs",
      "negatives_per_positive",           "init_scale",        "grad_clip_norm",
      "rank_weight",    "dims",           "seeds",             "out_dir",
      "protocol",       "eval_seed",
  };
  return keys;
}

void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  static const std::map<std::string, std::function<void(ExperimentConfig&, const std::string&)>>
      setters = {
          {"dataset", [](ExperimentConfig& c, const std::string& v) { c.dataset = v; }},
          {"split", [](ExperimentConfig& c, const std::string& v) { c.split = v; }},
          {"split_seed",
           [](ExperimentConfig& c, const std::string& v) {
             c.split_seed = parse_u64(v, "split_seed");
           }},
          {"model", [](ExperimentConfig& c, const std::string& v) { c.model = v; }},
          {"space", [](ExperimentConfig& c, const std::string& v) { c.space = v; }},
          {"curvature",
           [](ExperimentConfig& c, const std::string& v) {
             c.curvature = parse_real(v, "curvature");
           }},
          {"max_hyp_norm",
           [](ExperimentConfig& c, const std::string& v) {
             c.max_hyp_norm = parse_real(v, "max_hyp_norm");
           }},
          {"dim", [](ExperimentConfig& c, const std::string& v) { c.dim = parse_int(v, "dim"); }},
          {"margin_item",
           [](ExperimentConfig& c, const std::string& v) {
             c.margin_item = parse_real(v, "margin_item");
           }},
          {"margin_social",
           [](ExperimentConfig& c, const std::string& v) {
             c.margin_social = parse_real(v, "margin_social");
           }},
          {"hyp_margin_item",
           [](ExperimentConfig& c, const std::string& v) {
             c.hyp_margin_item = parse_real(v, "hyp_margin_item");
           }},
          {"hyp_margin_social",
           [](ExperimentConfig& c, const std::string& v) {
             c.hyp_margin_social = parse_real(v, "hyp_margin_social");
           }},
          {"social_weight",
           [](ExperimentConfig& c, const std::string& v) {
             c.social_weight = parse_real(v, "social_weight");
           }},
          {"lr", [](ExperimentConfig& c, const std::string& v) { c.lr = parse_real(v, "lr"); }},
          {"batch_size",
           [](ExperimentConfig& c, const std::string& v) {
             c.batch_size = parse_int(v, "batch_size");
           }},
          {"epochs",
           [](ExperimentConfig& c, const std::string& v) { c.epochs = parse_int(v, "epochs"); }},
          {"negatives_per_positive",
           [](ExperimentConfig& c, const std::string& v) {
             c.negatives_per_positive = parse_int(v, "negatives_per_positive");
           }},
          {"init_scale",
           [](ExperimentConfig& c, const std::string& v) {
             c.init_scale = parse_real(v, "init_scale");
           }},
          {"grad_clip_norm",
           [](ExperimentConfig& c, const std::string& v) {
             c.grad_clip_norm = parse_real(v, "grad_clip_norm");
           }},
          {"rank_weight",
           [](ExperimentConfig& c, const std::string& v) {
             c.rank_weight = parse_bool(v, "rank_weight");
           }},
          {"dims",
           [](ExperimentConfig& c, const std::string& v) {
             c.dims = parse_list<int>(v, "dims", parse_int);
           }},
          {"seeds",
           [](ExperimentConfig& c, const std::string& v) {
             c.seeds = parse_list<std::uint64_t>(v, "seeds", parse_u64);
           }},
          {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
          {"protocol", [](ExperimentConfig& c, const std::string& v) { c.protocol = v; }},
          {"eval_seed",
           [](ExperimentConfig& c, const std::string& v) {
             c.eval_seed = parse_u64(v, "eval_seed");
           }},
      };
  const auto it = setters.find(key);
  if (it == setters.end()) throw invalid_input_error("unknown config key: " + key);
  it->second(cfg, value);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw invalid_input_error(source_name + " line " + std::to_string(line_no) +
                                ": expected key=value");
    try {
      apply_kv(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const invalid_input_error& e) {
      throw invalid_input_error(source_name + " line " + std::to_string(line_no) + ": " +
                                e.what());
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string serialize(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "dataset=" << cfg.dataset << "\n";
  out << "split=" << cfg.split << "\n";
  out << "split_seed=" << cfg.split_seed << "\n";
  out << "model=" << cfg.model << "\n";
  out << "space=" << cfg.space << "\n";
  out << "curvature=" << format_double(cfg.curvature) << "\n";
  out << "max_hyp_norm=" << format_double(cfg.max_hyp_norm) << "\n";
  out << "dim=" << cfg.dim << "\n";
  out << "margin_item=" << format_double(cfg.margin_item) << "\n";
  out << "margin_social=" << format_double(cfg.margin_social) << "\n";
  out << "hyp_margin_item=" << format_double(cfg.hyp_margin_item) << "\n";
  out << "hyp_margin_social=" << format_double(cfg.hyp_margin_social) << "\n";
  out << "social_weight=" << format_double(cfg.social_weight) << "\n";
  out << "lr=" << format_double(cfg.lr) << "\n";
  out << "batch_size=" << cfg.batch_size << "\n";
  out << "epochs=" << cfg.epochs << "\n";
  out << "negatives_per_positive=" << cfg.negatives_per_positive << "\n";
  out << "init_scale=" << format_double(cfg.init_scale) << "\n";
  out << "grad_clip_norm=" << format_double(cfg.grad_clip_norm) << "\n";
  out << "rank_weight=" << (cfg.rank_weight ? "true" : "false") << "\n";
  if (!cfg.dims.empty()) out << "dims=" << join_list(cfg.dims) << "\n";
  out << "seeds=" << join_list(cfg.seeds) << "\n";
  out << "out_dir=" << cfg.out_dir << "\n";
  out << "protocol=" << cfg.protocol << "\n";
  out << "eval_seed=" << cfg.eval_seed << "\n";
  return out.str();
}

spaces::SpaceKind ExperimentConfig::make_space() const {
  return spaces::parse_space(space, curvature, max_hyp_norm);
}

models::ModelConfig ExperimentConfig::to_model_config(const spaces::SpaceKind& cell_space,
                                                      int cell_dim,
                                                      std::uint64_t cell_seed) const {
  models::ModelConfig mc;
  mc.model = models::parse_model(model);
  mc.space = cell_space;
  mc.dim = cell_dim;
  mc.margin_item = cell_space.hyperbolic() ? hyp_margin_item : margin_item;
  mc.margin_social = cell_space.hyperbolic() ? hyp_margin_social : margin_social;
  mc.social_weight = social_weight;
  mc.lr = lr;
  mc.batch_size = batch_size;
  mc.epochs = epochs;
  mc.seed = cell_seed;
  mc.negatives_per_positive = negatives_per_positive;
  mc.init_scale = init_scale;
  mc.grad_clip_norm = grad_clip_norm;
  mc.rank_weight = rank_weight;
  mc.validate();
  return mc;
}

void ExperimentConfig::validate() const {
  require(!dataset.empty(), "config key dataset is required");
  data::parse_split_mode(split);
  models::parse_model(model);
  eval::parse_protocol(protocol);
  require(!seeds.empty(), "at least one seed is required");
  for (int d : sweep_dims()) require(d >= 1, "dims entries must be >= 1");
  // Builds the cell config for each space to surface range errors early.
  to_model_config(make_space(), sweep_dims().front(), seeds.front());
}

}  // namespace hyperrec::config
