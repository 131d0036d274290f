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

#include "hyperrec/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "hyperrec/config.hpp"
#include "hyperrec/data.hpp"
#include "hyperrec/eval.hpp"
#include "hyperrec/models.hpp"
#include "hyperrec/optim.hpp"
#include "hyperrec/spaces.hpp"

namespace fs = std::filesystem;

namespace hyperrec::cli {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path + " for writing");
  out << content;
  require(out.good(), "write to " + path + " failed");
}

int metric_rank(const std::string& m) {
  if (m == "hr") return 0;
  if (m == "ndcg") return 1;
  if (m == "mae") return 2;
  if (m == "rmse") return 3;
  if (m == "n_users") return 4;
  return 5;
}

// +1: higher is better; -1: lower is better; 0: informational.
int metric_direction(const std::string& m) {
  if (m == "hr" || m == "ndcg") return 1;
  if (m == "mae" || m == "rmse") return -1;
  return 0;
}

data::DatasetSplit make_split(const config::ExperimentConfig& cfg,
                              const data::InteractionDataset& ds) {
  return data::parse_split_mode(cfg.split) == data::SplitMode::leave_one_out
             ? data::leave_one_out_split(ds)
             : data::ratio_split(ds, cfg.split_seed);
}

bool has_validation_targets(models::ModelKind kind, const data::InteractionDataset& ds,
                            const data::DatasetSplit& split) {
  if (kind == models::ModelKind::mf_rating) {
    for (size_t i = 0; i < ds.interactions.size(); ++i)
      if (split.assignment[i] == data::kVal) return true;
    return false;
  }
  if (split.mode != data::SplitMode::leave_one_out) return false;
  for (int v : split.val_item)
    if (v >= 0) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Config plumbing: --config file plus one flag per key.
// ---------------------------------------------------------------------------

struct ConfigCli {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void attach_config_options(CLI::App* sub, ConfigCli& cc) {
  sub->add_option("--config", cc.config_path, "key=value experiment config file");
  for (const auto& key : config::config_keys()) {
    cc.options[key] =
        sub->add_option("--" + key, cc.values[key], "config key " + key + " override");
  }
}

config::ExperimentConfig resolve_config(const ConfigCli& cc) {
  config::ExperimentConfig cfg;
  if (!cc.config_path.empty()) cfg = config::parse_config_file(resolve_data_path(cc.config_path));
  for (const auto& key : config::config_keys()) {
    const auto it = cc.options.find(key);
    if (it != cc.options.end() && it->second->count() > 0)
      config::apply_kv(cfg, key, cc.values.at(key));
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Checkpoint metadata.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
  std::string model;
  std::string space;
  double curvature = 1.0;
  double max_hyp_norm = 6.0;
  int dim = 0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double val_score = kNan;  // nan when no validation targets existed
  int n_users = 0;
  int n_items = 0;
  std::string dataset;
};

void write_meta(const std::string& path, const CheckpointMeta& m,
                const models::ModelConfig& mc) {
  nlohmann::json j = {
      {"format", "hyperrec-meta-v1"},
      {"model", m.model},
      {"space", m.space},
      {"curvature", m.curvature},
      {"max_hyp_norm", m.max_hyp_norm},
      {"dim", m.dim},
      {"seed", m.seed},
      {"best_epoch", m.best_epoch},
      {"val_score", std::isnan(m.val_score) ? nlohmann::json() : nlohmann::json(m.val_score)},
      {"n_users", m.n_users},
      {"n_items", m.n_items},
      {"dataset", m.dataset},
      {"margin_item", mc.margin_item},
      {"margin_social", mc.margin_social},
      {"social_weight", mc.social_weight},
      {"lr", mc.lr},
      {"batch_size", mc.batch_size},
      {"epochs", mc.epochs},
      {"negatives_per_positive", mc.resolved_negatives()},
      {"init_scale", mc.init_scale},
      {"grad_clip_norm", mc.grad_clip_norm},
      {"rank_weight", mc.rank_weight},
  };
  write_text_file(path, j.dump(2) + "\n");
}

CheckpointMeta load_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint metadata " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw invalid_input_error(path + ": bad JSON: " + e.what());
  }
  const auto need = [&](const char* key) -> const nlohmann::json& {
    require(j.contains(key), path + ": missing field " + key);
    return j.at(key);
  };
  require(need("format") == "hyperrec-meta-v1", path + ": unknown metadata format");
  CheckpointMeta m;
  try {
    m.model = need("model").get<std::string>();
    m.space = need("space").get<std::string>();
    m.curvature = need("curvature").get<double>();
    m.max_hyp_norm = need("max_hyp_norm").get<double>();
    m.dim = need("dim").get<int>();
    m.seed = need("seed").get<std::uint64_t>();
    m.best_epoch = need("best_epoch").get<int>();
    m.val_score = need("val_score").is_null() ? kNan : need("val_score").get<double>();
    m.n_users = need("n_users").get<int>();
    m.n_items = need("n_items").get<int>();
    m.dataset = need("dataset").get<std::string>();
  } catch (const invalid_input_error&) {
    throw;
  } catch (const std::exception& e) {
    throw invalid_input_error(path + ": bad field type: " + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Training one cell.
// ---------------------------------------------------------------------------

struct CellResult {
  std::string base;  // path prefix of the cell's files
  int best_epoch = 0;
  double val_score = kNan;
  bool has_val = false;
};

CellResult train_cell(const config::ExperimentConfig& ecfg, const spaces::SpaceKind& space,
                      int dim, std::uint64_t seed, const data::InteractionDataset& ds,
                      const data::DatasetSplit& split, const std::string& out_dir,
                      const std::string& dataset_name) {
  const auto mc = ecfg.to_model_config(space, dim, seed);
  const bool biases = models::is_projection_model(mc.model);
  auto users = spaces::init_embeddings(ds.n_users, dim, mc.init_scale, mix_seed(seed, 1), biases);
  auto items = spaces::init_embeddings(ds.n_items, dim, mc.init_scale, mix_seed(seed, 2), biases);
  optim::AdamConfig adam;
  adam.lr = mc.lr;
  adam.clip_norm = mc.grad_clip_norm;
  optim::AdamState user_opt(users.rows(), dim, adam, biases);
  optim::AdamState item_opt(items.rows(), dim, adam, biases);

  CellResult res;
  res.has_val = has_validation_targets(mc.model, ds, split);
  res.base = (fs::path(out_dir) / cell_name(models::to_string(mc.model), space.name(), dim, seed))
                 .string();

  // The initialization is the first best-checkpoint candidate, so epochs=0
  // leaves the checkpoint equal to the init.
  spaces::EmbeddingTable best_users = users;
  spaces::EmbeddingTable best_items = items;
  if (res.has_val)
    res.val_score = eval::validation_score(mc.model, space, users, items, ds, split);

  std::ostringstream log;
  log << "epoch,mean_loss,val_score,wall_seconds\n";
  for (int e = 1; e <= mc.epochs; ++e) {
    const auto stats = models::train_epoch(mc, ds, split, users, items, user_opt, item_opt, e - 1);
    double val = kNan;
    bool snapshot = true;  // without validation the last epoch wins
    if (res.has_val) {
      val = eval::validation_score(mc.model, space, users, items, ds, split);
      snapshot = val > res.val_score;
    }
    log << e << ',' << format_double(stats.mean_loss) << ',' << format_double(val) << ','
        << format_double(stats.wall_seconds) << "\n";
    if (snapshot) {
      if (res.has_val) res.val_score = val;
      res.best_epoch = e;
      best_users = users;
      best_items = items;
    }
  }

  spaces::save_table(res.base + ".users.hrec", space, best_users);
  spaces::save_table(res.base + ".items.hrec", space, best_items);
  CheckpointMeta meta;
  meta.model = models::to_string(mc.model);
  meta.space = space.name();
  meta.curvature = space.curvature.value();
  meta.max_hyp_norm = space.max_hyp_norm;
  meta.dim = dim;
  meta.seed = seed;
  meta.best_epoch = res.best_epoch;
  meta.val_score = res.val_score;
  meta.n_users = ds.n_users;
  meta.n_items = ds.n_items;
  meta.dataset = dataset_name;
  write_meta(res.base + ".meta.json", meta, mc);
  write_text_file(res.base + ".log.csv", log.str());
  return res;
}

std::string dataset_basename(const std::string& dir) {
  fs::path p(dir);
  if (p.has_filename()) return p.filename().string();
  return p.parent_path().filename().string();  // trailing slash
}

// ---------------------------------------------------------------------------
// prep
// ---------------------------------------------------------------------------

struct PrepArgs {
  std::string input;
  std::string format = "tsv";
  std::string trust;
  double min_positive = 3.0;
  std::string split = "leave_one_out";
  std::uint64_t split_seed = 42;
  std::string out;
};

int cmd_prep(const PrepArgs& a) {
  const std::string input = resolve_data_path(a.input);
  require(fs::exists(input), "input file not found: " + a.input);
  const auto fmt = data::parse_format(a.format);
  const auto mode = data::parse_split_mode(a.split);

  const auto parsed = data::parse_interactions(input, fmt);
  std::vector<data::RawEdge> edges;
  if (!a.trust.empty()) {
    const std::string trust_path = resolve_data_path(a.trust);
    require(fs::exists(trust_path), "trust file not found: " + a.trust);
    edges = data::parse_trust(trust_path).edges;
  }
  const auto ds = data::build_dataset(parsed.interactions, edges, a.min_positive);
  const auto split = mode == data::SplitMode::leave_one_out
                         ? data::leave_one_out_split(ds)
                         : data::ratio_split(ds, a.split_seed);

  fs::create_directories(a.out);
  data::write_canonical(ds, a.out);
  data::write_split(split, (fs::path(a.out) / "split.tsv").string());

  char density[32];
  std::snprintf(density, sizeof density, "%.4f", ds.density() * 100.0);
  std::cout << "users=" << ds.n_users << " items=" << ds.n_items
            << " ratings=" << ds.interactions.size() << " density=" << density << "%"
            << " social=" << ds.n_social << " excluded_users=" << split.excluded_users << "\n"
            << "wrote " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const config::ExperimentConfig& cfg) {
  const std::string dir = resolve_data_path(cfg.dataset);
  const auto ds = data::load_canonical(dir);
  const auto split = make_split(cfg, ds);
  const auto space = cfg.make_space();
  fs::create_directories(cfg.out_dir);

  std::ostringstream summary;
  summary << "model,space,dim,seed,best_epoch,val_score\n";
  double epoch_sum = 0.0;
  double val_sum = 0.0;
  for (const std::uint64_t seed : cfg.seeds) {
    const auto res =
        train_cell(cfg, space, cfg.dim, seed, ds, split, cfg.out_dir, dataset_basename(dir));
    summary << cfg.model << ',' << space.name() << ',' << cfg.dim << ',' << seed << ','
            << res.best_epoch << ',' << format_double(res.val_score) << "\n";
    epoch_sum += res.best_epoch;
    val_sum += res.val_score;
    std::cout << fs::path(res.base).filename().string() << ": best_epoch=" << res.best_epoch
              << " val_score=" << format_double(res.val_score) << "\n";
  }
  const double n = static_cast<double>(cfg.seeds.size());
  summary << cfg.model << ',' << space.name() << ',' << cfg.dim << ",mean,"
          << format_double(epoch_sum / n) << ',' << format_double(val_sum / n) << "\n";
  const std::string summary_path = (fs::path(cfg.out_dir) / "summary.csv").string();
  write_text_file(summary_path, summary.str());
  std::cout << "wrote " << summary_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;  // path prefix: <base>.users.hrec etc.
  std::string dataset;
  std::string split = "leave_one_out";
  std::uint64_t split_seed = 42;
  std::string protocol = "full";
  std::uint64_t eval_seed = 0;
  std::string out;  // output prefix; default <checkpoint>.report
};

eval::MetricsReport evaluate_checkpoint(const EvalArgs& a, CheckpointMeta& meta_out,
                                        std::string& dataset_name) {
  const auto meta = load_meta(a.checkpoint + ".meta.json");
  const auto users_loaded = spaces::load_table(a.checkpoint + ".users.hrec");
  const auto items_loaded = spaces::load_table(a.checkpoint + ".items.hrec");

  require(users_loaded.table.dim() == items_loaded.table.dim(),
          "user table dim " + std::to_string(users_loaded.table.dim()) +
              " does not match item table dim " + std::to_string(items_loaded.table.dim()));
  require(meta.dim == users_loaded.table.dim(),
          "checkpoint metadata dim " + std::to_string(meta.dim) +
              " does not match table dim " + std::to_string(users_loaded.table.dim()));
  require(users_loaded.space.tag == items_loaded.space.tag &&
              users_loaded.space.curvature == items_loaded.space.curvature,
          "user and item tables disagree on the space");
  const auto space = spaces::parse_space(meta.space, meta.curvature, meta.max_hyp_norm);
  require(space.tag == users_loaded.space.tag && space.curvature == users_loaded.space.curvature,
          "checkpoint metadata space does not match the tables");

  const std::string dir = resolve_data_path(a.dataset);
  const auto ds = data::load_canonical(dir);
  dataset_name = dataset_basename(dir);
  require(users_loaded.table.rows() == ds.n_users,
          "checkpoint has " + std::to_string(users_loaded.table.rows()) +
              " user rows but the dataset has " + std::to_string(ds.n_users) + " users");
  require(items_loaded.table.rows() == ds.n_items,
          "checkpoint has " + std::to_string(items_loaded.table.rows()) +
              " item rows but the dataset has " + std::to_string(ds.n_items) + " items");

  config::ExperimentConfig split_cfg;
  split_cfg.split = a.split;
  split_cfg.split_seed = a.split_seed;
  const auto split = make_split(split_cfg, ds);

  const auto kind = models::parse_model(meta.model);
  auto protocol = eval::parse_protocol(a.protocol);
  protocol.seed = a.eval_seed;
  meta_out = meta;
  if (kind == models::ModelKind::mf_rating && split.mode == data::SplitMode::ratio)
    return eval::evaluate_ratings_only(space, users_loaded.table, items_loaded.table, ds, split);
  return eval::evaluate(kind, space, users_loaded.table, items_loaded.table, ds, split, protocol);
}

int cmd_eval(const EvalArgs& a) {
  CheckpointMeta meta;
  std::string dataset_name;
  const auto report = evaluate_checkpoint(a, meta, dataset_name);
  const std::string out = a.out.empty() ? a.checkpoint + ".report" : a.out;
  const auto rows =
      eval::report_rows(dataset_name, meta.model, meta.space, meta.dim, meta.seed, report);
  eval::write_report_csv(out + ".csv", rows);
  eval::write_report_json(out + ".json", rows);

  std::ostringstream line;
  if (!report.hr.empty() && report.hr.count(10))
    line << "hr@10=" << format_double(report.hr.at(10))
         << " ndcg@10=" << format_double(report.ndcg.at(10)) << " ";
  if (report.mae)
    line << "mae=" << format_double(*report.mae) << " rmse=" << format_double(*report.rmse)
         << " ";
  line << "users=" << report.n_users_evaluated;
  std::cout << line.str() << "\n" << "wrote " << out << ".csv and " << out << ".json\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

std::string cell_descriptor(const config::ExperimentConfig& cfg, const spaces::SpaceKind& space,
                            int dim, std::uint64_t seed, const data::InteractionDataset& ds) {
  const auto mc = cfg.to_model_config(space, dim, seed);
  std::ostringstream d;
  d << "model=" << models::to_string(mc.model) << "\nspace=" << space.name()
    << "\ncurvature=" << format_double(space.hyperbolic() ? space.curvature.value() : 0.0)
    << "\nmax_hyp_norm=" << format_double(space.max_hyp_norm) << "\ndim=" << dim
    << "\nseed=" << seed << "\nmargin_item=" << format_double(mc.margin_item)
    << "\nmargin_social=" << format_double(mc.margin_social)
    << "\nsocial_weight=" << format_double(mc.social_weight) << "\nlr=" << format_double(mc.lr)
    << "\nbatch_size=" << mc.batch_size << "\nepochs=" << mc.epochs
    << "\nnegatives=" << mc.resolved_negatives()
    << "\ninit_scale=" << format_double(mc.init_scale)
    << "\ngrad_clip_norm=" << format_double(mc.grad_clip_norm)
    << "\nrank_weight=" << (mc.rank_weight ? 1 : 0) << "\nsplit=" << cfg.split
    << "\nsplit_seed=" << cfg.split_seed << "\nprotocol=" << cfg.protocol
    << "\neval_seed=" << cfg.eval_seed << "\nusers=" << ds.n_users << "\nitems=" << ds.n_items
    << "\nratings=" << ds.interactions.size() << "\nsocial=" << ds.n_social
    << "\nmin_positive=" << format_double(ds.min_rating_as_positive) << "\n";
  return d.str();
}

int cmd_sweep(const config::ExperimentConfig& cfg) {
  const std::string dir = resolve_data_path(cfg.dataset);
  const auto ds = data::load_canonical(dir);
  const auto split = make_split(cfg, ds);
  const std::string dataset_name = dataset_basename(dir);
  const std::vector<spaces::SpaceKind> cell_spaces = {
      spaces::SpaceKind::euclidean(),
      spaces::parse_space("poincare", cfg.curvature, cfg.max_hyp_norm)};

  std::vector<std::string> failures;
  std::vector<eval::ReportRow> all_rows;
  int completed = 0;
  int skipped = 0;
  for (const int dim : cfg.sweep_dims()) {
    for (const auto& space : cell_spaces) {
      for (const std::uint64_t seed : cfg.seeds) {
        const std::string name = cell_name(cfg.model, space.name(), dim, seed);
        const fs::path cell_dir = fs::path(cfg.out_dir) / "cells" / name;
        const std::string report_base = (cell_dir / "report").string();
        const std::string marker =
            (cell_dir / ("done." + hex64(fnv1a64(cell_descriptor(cfg, space, dim, seed, ds)))))
                .string();
        try {
          if (fs::exists(marker) && fs::exists(report_base + ".csv")) {
            ++skipped;
          } else {
            fs::create_directories(cell_dir);
            const auto res =
                train_cell(cfg, space, dim, seed, ds, split, cell_dir.string(), dataset_name);
            EvalArgs ea;
            ea.checkpoint = res.base;
            ea.dataset = dir;
            ea.split = cfg.split;
            ea.split_seed = cfg.split_seed;
            ea.protocol = cfg.protocol;
            ea.eval_seed = cfg.eval_seed;
            CheckpointMeta meta;
            std::string ds_name;
            const auto report = evaluate_checkpoint(ea, meta, ds_name);
            const auto rows =
                eval::report_rows(ds_name, meta.model, meta.space, dim, seed, report);
            eval::write_report_csv(report_base + ".csv", rows);
            eval::write_report_json(report_base + ".json", rows);
            write_text_file(marker, "");
            ++completed;
            std::cout << name << ": done\n";
          }
          const auto rows = eval::load_report_csv(report_base + ".csv");
          all_rows.insert(all_rows.end(), rows.begin(), rows.end());
        } catch (const std::exception& e) {
          failures.push_back(name + ": " + e.what());
          std::cerr << "cell " << name << " failed: " << e.what() << "\n";
        }
      }
    }
  }

  // Curve over completed cells: mean and sample stddev across seeds.
  std::map<std::tuple<int, std::string, int, int>, std::vector<double>> groups;
  for (const auto& r : all_rows)
    groups[{r.dim, r.space, metric_rank(r.metric), r.k}].push_back(r.value);
  std::map<std::pair<int, int>, std::string> metric_names;
  for (const auto& r : all_rows) metric_names[{metric_rank(r.metric), r.k}] = r.metric;

  std::ostringstream curve;
  curve << "dim,space,metric,k,mean,stddev,n_seeds\n";
  for (const auto& [key, values] : groups) {
    const auto& [dim, space, mrank, k] = key;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double stddev =
        values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    curve << dim << ',' << space << ',' << metric_names.at({mrank, k}) << ',' << k << ','
          << format_double(mean) << ',' << format_double(stddev) << ',' << values.size() << "\n";
  }
  fs::create_directories(cfg.out_dir);
  const std::string curve_path = (fs::path(cfg.out_dir) / "curve.csv").string();
  write_text_file(curve_path, curve.str());

  const std::string failures_path = (fs::path(cfg.out_dir) / "failures.txt").string();
  if (!failures.empty()) {
    std::string body;
    for (const auto& f : failures) body += f + "\n";
    write_text_file(failures_path, body);
  } else if (fs::exists(failures_path)) {
    fs::remove(failures_path);
  }

  std::cout << "cells completed=" << completed << " resumed=" << skipped
            << " failed=" << failures.size() << "\n"
            << "wrote " << curve_path << "\n";
  return failures.empty() ? 0 : 2;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string a;
  std::string b;
  std::string out;
  std::string label_a = "A";
  std::string label_b = "B";
};

struct SideSummary {
  std::string dataset;
  std::string protocol;
  std::string space;
  // (model, dim, metric, k) -> mean value over seeds
  std::map<std::tuple<std::string, int, std::string, int>, double> cells;
};

SideSummary summarize_side(const std::string& path) {
  const auto rows = eval::load_report_csv(path);
  require(!rows.empty(), path + ": report is empty");
  SideSummary s;
  std::map<std::tuple<std::string, int, std::string, int>, std::vector<double>> acc;
  for (const auto& r : rows) {
    if (s.dataset.empty()) {
      s.dataset = r.dataset;
      s.protocol = r.protocol;
      s.space = r.space;
    }
    require(r.dataset == s.dataset, path + ": mixes datasets " + s.dataset + " and " + r.dataset);
    require(r.protocol == s.protocol,
            path + ": mixes protocols " + s.protocol + " and " + r.protocol);
    require(r.space == s.space, path + ": mixes spaces " + s.space + " and " + r.space);
    acc[{r.model, r.dim, r.metric, r.k}].push_back(r.value);
  }
  for (const auto& [key, values] : acc) {
    double mean = 0.0;
    for (double v : values) mean += v;
    s.cells[key] = mean / static_cast<double>(values.size());
  }
  return s;
}

int cmd_compare(const CompareArgs& a) {
  const auto side_a = summarize_side(a.a);
  const auto side_b = summarize_side(a.b);
  require(side_a.dataset == side_b.dataset,
          "reports cover different datasets: " + side_a.dataset + " vs " + side_b.dataset);
  require(side_a.protocol == side_b.protocol,
          "protocol mismatch: " + side_a.protocol + " vs " + side_b.protocol);

  // Join on (model, dim, metric, k); both sides must cover the same cells.
  for (const auto& [key, unused] : side_a.cells)
    require(side_b.cells.count(key), a.b + " lacks a row present in " + a.a);
  for (const auto& [key, unused] : side_b.cells)
    require(side_a.cells.count(key), a.a + " lacks a row present in " + a.b);

  // Order by (model, dim, metric rank, k).
  std::vector<std::tuple<std::string, int, std::string, int>> keys;
  for (const auto& [key, unused] : side_a.cells) keys.push_back(key);
  std::sort(keys.begin(), keys.end(), [](const auto& x, const auto& y) {
    return std::make_tuple(std::get<0>(x), std::get<1>(x), metric_rank(std::get<2>(x)),
                           std::get<3>(x)) < std::make_tuple(std::get<0>(y), std::get<1>(y),
                                                             metric_rank(std::get<2>(y)),
                                                             std::get<3>(y));
  });

  std::ostringstream csv;
  std::ostringstream md;
  csv << "model,dim,metric,k,value_a,value_b,delta,rel_delta,winner\n";
  md << "# Report comparison\n\n"
     << "- dataset: " << side_a.dataset << "\n"
     << "- protocol: " << side_a.protocol << "\n"
     << "- " << a.label_a << ": " << a.a << " (space " << side_a.space << ")\n"
     << "- " << a.label_b << ": " << a.b << " (space " << side_b.space << ")\n\n"
     << "| model | dim | metric | k | " << a.label_a << " | " << a.label_b
     << " | delta | rel | winner |\n"
     << "|---|---|---|---|---|---|---|---|---|\n";

  int wins_a = 0, wins_b = 0, ties = 0;
  for (const auto& key : keys) {
    const auto& [model, dim, metric, k] = key;
    const double va = side_a.cells.at(key);
    const double vb = side_b.cells.at(key);
    const double delta = vb - va;
    const bool has_rel = va != 0.0;
    const double rel = has_rel ? delta / std::abs(va) : 0.0;
    const int dir = metric_direction(metric);
    std::string winner = "-";
    if (dir != 0) {
      if (delta * dir > 0)
        winner = a.label_b, ++wins_b;
      else if (delta * dir < 0)
        winner = a.label_a, ++wins_a;
      else
        winner = "tie", ++ties;
    }
    csv << model << ',' << dim << ',' << metric << ',' << k << ',' << format_double(va) << ','
        << format_double(vb) << ',' << format_double(delta) << ','
        << (has_rel ? format_double(rel) : "") << ',' << winner << "\n";
    md << "| " << model << " | " << dim << " | " << metric << " | " << k << " | "
       << format_double(va) << " | " << format_double(vb) << " | " << format_double(delta)
       << " | " << (has_rel ? format_double(rel) : "n/a") << " | " << winner << " |\n";
  }
  md << "\n" << a.label_a << " wins " << wins_a << ", " << a.label_b << " wins " << wins_b
     << ", ties " << ties << ".\n";

  write_text_file(a.out + ".csv", csv.str());
  write_text_file(a.out + ".md", md.str());
  std::cout << a.label_a << " wins " << wins_a << ", " << a.label_b << " wins " << wins_b
            << ", ties " << ties << "\n"
            << "wrote " << a.out << ".csv and " << a.out << ".md\n";
  return 0;
}

}  // namespace

std::string resolve_data_path(const std::string& path) {
  if (fs::exists(path)) return path;
  const char* root = std::getenv("HYPERREC_DATA_DIR");
  if (root != nullptr && *root != '\0' && fs::path(path).is_relative()) {
    const fs::path joined = fs::path(root) / path;
    if (fs::exists(joined)) return joined.string();
  }
  return path;
}

std::string cell_name(const std::string& model, const std::string& space, int dim,
                      std::uint64_t seed) {
  return model + "_" + space + "_d" + std::to_string(dim) + "_seed" + std::to_string(seed);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Latent-space recommendation toolkit: Euclidean and hyperbolic embeddings"};
  app.require_subcommand(1);

  PrepArgs prep_args;
  auto* prep = app.add_subcommand("prep", "Parse raw interactions into a canonical dataset");
  prep->add_option("--input", prep_args.input, "raw interactions file")->required();
  prep->add_option("--format", prep_args.format, "movielens_dat | tsv (default tsv)");
  prep->add_option("--trust", prep_args.trust, "optional trust-edge file");
  prep->add_option("--min_positive", prep_args.min_positive,
                   "lowest rating counted as a positive (default 3)");
  prep->add_option("--split", prep_args.split, "leave_one_out | ratio (default leave_one_out)");
  prep->add_option("--split_seed", prep_args.split_seed, "ratio-split shuffle seed");
  prep->add_option("--out", prep_args.out, "output dataset directory")->required();

  ConfigCli train_cc;
  auto* train = app.add_subcommand("train", "Train one model cell per seed");
  attach_config_options(train, train_cc);

  EvalArgs eval_args;
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint");
  evalc->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path prefix")->required();
  evalc->add_option("--dataset", eval_args.dataset, "canonical dataset directory")->required();
  evalc->add_option("--split", eval_args.split, "leave_one_out | ratio");
  evalc->add_option("--split_seed", eval_args.split_seed, "ratio-split shuffle seed");
  evalc->add_option("--protocol", eval_args.protocol, "full | sampled:<n>");
  evalc->add_option("--eval_seed", eval_args.eval_seed, "sampled-protocol negatives seed");
  evalc->add_option("--out", eval_args.out, "report path prefix (default <checkpoint>.report)");

  ConfigCli sweep_cc;
  auto* sweep = app.add_subcommand(
      "sweep", "Train and evaluate the (dim x space x seed) grid, then aggregate a curve");
  attach_config_options(sweep, sweep_cc);

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Compare two report CSVs side by side");
  compare->add_option("--a", compare_args.a, "first report CSV")->required();
  compare->add_option("--b", compare_args.b, "second report CSV")->required();
  compare->add_option("--out", compare_args.out, "output path prefix")->required();
  compare->add_option("--label_a", compare_args.label_a, "display label for --a");
  compare->add_option("--label_b", compare_args.label_b, "display label for --b");

  try {
    app.parse(argc, argv);
    if (prep->parsed()) return cmd_prep(prep_args);
    if (train->parsed()) return cmd_train(resolve_config(train_cc));
    if (evalc->parsed()) return cmd_eval(eval_args);
    if (sweep->parsed()) return cmd_sweep(resolve_config(sweep_cc));
    if (compare->parsed()) return cmd_compare(compare_args);
    return 1;  // unreachable: require_subcommand(1)
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const invalid_input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"hyperrec"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hyperrec::cli
