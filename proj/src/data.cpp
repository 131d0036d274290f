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

#include "hyperrec/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace fs = std::filesystem;

namespace hyperrec::data {

namespace {

std::optional<std::int64_t> to_i64(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> to_f64(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_on(const std::string& line, const std::string& delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Shared line-walker: calls fn(line, line_number) for every non-empty line.
template <class Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  require(in.good(), "cannot open file: " + path);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

void enforce_malformed_budget(const std::string& path, std::int64_t malformed,
                              std::int64_t data_lines, std::int64_t first_bad_line) {
  if (malformed == 0) {
    if (data_lines == 0) std::fprintf(stderr, "warning: %s contains no data lines\n", path.c_str());
    return;
  }
  if (malformed * 100 > data_lines) {
    throw invalid_input_error(path + ": " + std::to_string(malformed) + " malformed lines out of " +
                              std::to_string(data_lines) + " (first at line " +
                              std::to_string(first_bad_line) + ")");
  }
  std::fprintf(stderr, "warning: %s: skipped %lld malformed lines (first at line %lld)\n",
               path.c_str(), static_cast<long long>(malformed),
               static_cast<long long>(first_bad_line));
}

}  // namespace

InteractionFormat parse_format(const std::string& name) {
  if (name == "movielens_dat") return InteractionFormat::movielens_dat;
  if (name == "tsv") return InteractionFormat::tsv;
  throw invalid_input_error("unknown interaction format: " + name +
                            " (expected movielens_dat or tsv)");
}

std::string to_string(InteractionFormat fmt) {
  return fmt == InteractionFormat::movielens_dat ? "movielens_dat" : "tsv";
}

ParsedInteractions parse_interactions(const std::string& path, InteractionFormat fmt) {
  ParsedInteractions out;
  std::int64_t data_lines = 0;
  std::int64_t first_bad_line = 0;
  for_each_line(path, [&](const std::string& line, std::int64_t line_no) {
    ++data_lines;
    const std::vector<std::string> fields = fmt == InteractionFormat::movielens_dat
                                                ? split_on(line, "::")
                                                : split_whitespace(line);
    const bool count_ok = fmt == InteractionFormat::movielens_dat
                              ? fields.size() == 4
                              : (fields.size() == 3 || fields.size() == 4);
    RawInteraction rec;
    bool ok = count_ok;
    if (ok) {
      const auto user = to_i64(fields[0]);
      const auto item = to_i64(fields[1]);
      const auto rating = to_f64(fields[2]);
      const auto ts = fields.size() == 4 ? to_i64(fields[3]) : std::optional<std::int64_t>(0);
      ok = user && item && rating && ts && *user >= 0 && *item >= 0;
      if (ok) rec = RawInteraction{*user, *item, *rating, *ts};
    }
    if (!ok) {
      if (out.malformed == 0) first_bad_line = line_no;
      ++out.malformed;
      return;
    }
    out.interactions.push_back(rec);
  });
  enforce_malformed_budget(path, out.malformed, data_lines, first_bad_line);
  return out;
}

ParsedTrust parse_trust(const std::string& path) {
  ParsedTrust out;
  std::int64_t data_lines = 0;
  std::int64_t first_bad_line = 0;
  for_each_line(path, [&](const std::string& line, std::int64_t line_no) {
    ++data_lines;
    const std::vector<std::string> fields = split_whitespace(line);
    bool ok = fields.size() == 2 || fields.size() == 3;
    RawEdge edge;
    if (ok) {
      const auto a = to_i64(fields[0]);
      const auto b = to_i64(fields[1]);
      ok = a && b && *a >= 0 && *b >= 0;
      if (ok) edge = RawEdge{*a, *b};
    }
    if (!ok) {
      if (out.malformed == 0) first_bad_line = line_no;
      ++out.malformed;
      return;
    }
    if (edge.truster == edge.trustee) {
      ++out.self_loops;
      return;
    }
    out.edges.push_back(edge);
  });
  enforce_malformed_budget(path, out.malformed, data_lines, first_bad_line);
  return out;
}

bool InteractionDataset::user_has_item(int user, int item) const {
  const auto& items = items_by_user[user];
  return std::binary_search(items.begin(), items.end(), item);
}

bool InteractionDataset::user_trusts(int user, int other) const {
  if (neighbors.empty()) return false;
  const auto& nb = neighbors[user];
  return std::binary_search(nb.begin(), nb.end(), other);
}

InteractionDataset build_dataset(const std::vector<RawInteraction>& interactions,
                                 const std::vector<RawEdge>& edges,
                                 double min_rating_as_positive) {
  require(!interactions.empty(), "cannot build a dataset from zero interactions");

  std::vector<std::int64_t> user_ext, item_ext;
  user_ext.reserve(interactions.size());
  item_ext.reserve(interactions.size());
  for (const auto& r : interactions) {
    user_ext.push_back(r.user);
    item_ext.push_back(r.item);
  }
  auto dedupe_sorted = [](std::vector<std::int64_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe_sorted(user_ext);
  dedupe_sorted(item_ext);

  std::unordered_map<std::int64_t, int> user_id, item_id;
  user_id.reserve(user_ext.size());
  item_id.reserve(item_ext.size());
  for (std::size_t i = 0; i < user_ext.size(); ++i) user_id[user_ext[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < item_ext.size(); ++i) item_id[item_ext[i]] = static_cast<int>(i);

  InteractionDataset ds;
  ds.n_users = static_cast<int>(user_ext.size());
  ds.n_items = static_cast<int>(item_ext.size());
  ds.user_ext = std::move(user_ext);
  ds.item_ext = std::move(item_ext);
  ds.min_rating_as_positive = min_rating_as_positive;

  // Deduplicate (user, item): keep the latest timestamp (later line wins
  // ties) at the position of the first occurrence.
  std::unordered_map<std::int64_t, std::size_t> seen;
  seen.reserve(interactions.size());
  ds.interactions.reserve(interactions.size());
  for (const auto& r : interactions) {
    const int u = user_id.at(r.user);
    const int i = item_id.at(r.item);
    const std::int64_t key = static_cast<std::int64_t>(u) * ds.n_items + i;
    const Interaction rec{u, i, r.rating, r.timestamp};
    const auto [it, inserted] = seen.try_emplace(key, ds.interactions.size());
    if (inserted) {
      ds.interactions.push_back(rec);
    } else {
      ++ds.duplicates_dropped;
      if (rec.timestamp >= ds.interactions[it->second].timestamp) ds.interactions[it->second] = rec;
    }
  }

  ds.items_by_user.assign(ds.n_users, {});
  double rmin = ds.interactions.front().rating, rmax = rmin;
  for (const auto& r : ds.interactions) {
    ds.items_by_user[r.user].push_back(r.item);
    rmin = std::min(rmin, r.rating);
    rmax = std::max(rmax, r.rating);
  }
  for (auto& items : ds.items_by_user) std::sort(items.begin(), items.end());
  ds.rating_range = {rmin, rmax};

  if (!edges.empty()) {
    ds.neighbors.assign(ds.n_users, {});
    std::set<std::pair<int, int>> kept;
    for (const auto& e : edges) {
      if (e.truster == e.trustee) {
        ++ds.social_dropped;
        continue;
      }
      const auto a = user_id.find(e.truster);
      const auto b = user_id.find(e.trustee);
      if (a == user_id.end() || b == user_id.end()) {
        ++ds.social_dropped;
        continue;
      }
      if (!kept.emplace(a->second, b->second).second) {
        ++ds.social_dropped;
        continue;
      }
    }
    for (const auto& [truster, trustee] : kept) ds.neighbors[truster].push_back(trustee);
    ds.n_social = static_cast<std::int64_t>(kept.size());
  }
  return ds;
}

std::string to_string(SplitMode mode) {
  return mode == SplitMode::leave_one_out ? "leave_one_out" : "ratio";
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "leave_one_out") return SplitMode::leave_one_out;
  if (name == "ratio") return SplitMode::ratio;
  throw invalid_input_error("unknown split mode: " + name + " (expected leave_one_out or ratio)");
}

void rebuild_split_caches(const InteractionDataset& ds, DatasetSplit& split) {
  require(split.assignment.size() == ds.interactions.size(),
          "split assignment length does not match the dataset");
  split.train_positives.clear();
  split.train_items_by_user.assign(ds.n_users, {});
  split.train_pos_by_user.assign(ds.n_users, {});
  split.val_item.assign(ds.n_users, -1);
  split.test_item.assign(ds.n_users, -1);
  split.excluded_users = 0;

  for (std::size_t idx = 0; idx < ds.interactions.size(); ++idx) {
    const Interaction& r = ds.interactions[idx];
    switch (split.assignment[idx]) {
      case kTrain:
        split.train_items_by_user[r.user].push_back(r.item);
        if (ds.is_positive(r.rating)) {
          split.train_pos_by_user[r.user].push_back(r.item);
          split.train_positives.emplace_back(r.user, r.item);
        }
        break;
      case kVal:
        if (split.mode == SplitMode::leave_one_out) split.val_item[r.user] = r.item;
        break;
      case kTest:
        if (split.mode == SplitMode::leave_one_out) split.test_item[r.user] = r.item;
        break;
      default:
        throw invalid_input_error("bad split label " + std::to_string(split.assignment[idx]));
    }
  }
  for (auto& items : split.train_items_by_user) std::sort(items.begin(), items.end());
  for (auto& items : split.train_pos_by_user) std::sort(items.begin(), items.end());
  if (split.mode == SplitMode::leave_one_out) {
    for (int u = 0; u < ds.n_users; ++u) {
      if (!ds.items_by_user[u].empty() && split.test_item[u] < 0) ++split.excluded_users;
    }
  }
}

DatasetSplit leave_one_out_split(const InteractionDataset& ds) {
  DatasetSplit split;
  split.mode = SplitMode::leave_one_out;
  split.assignment.assign(ds.interactions.size(), kTrain);

  std::vector<std::vector<std::size_t>> pos_by_user(ds.n_users);
  for (std::size_t idx = 0; idx < ds.interactions.size(); ++idx) {
    const Interaction& r = ds.interactions[idx];
    if (ds.is_positive(r.rating)) pos_by_user[r.user].push_back(idx);
  }
  for (auto& indices : pos_by_user) {
    if (indices.size() < 3) continue;
    // stable sort keeps file order for equal timestamps (later line = later)
    std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return ds.interactions[a].timestamp < ds.interactions[b].timestamp;
    });
    split.assignment[indices[indices.size() - 1]] = kTest;
    split.assignment[indices[indices.size() - 2]] = kVal;
  }
  rebuild_split_caches(ds, split);
  return split;
}

DatasetSplit ratio_split(const InteractionDataset& ds, std::uint64_t seed) {
  DatasetSplit split;
  split.mode = SplitMode::ratio;
  split.seed = seed;
  const std::size_t n = ds.interactions.size();
  split.assignment.assign(n, kTrain);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  for (std::size_t i = 0; i < n_val && i < n; ++i) split.assignment[order[i]] = kVal;
  for (std::size_t i = n_val; i < n_val + n_test && i < n; ++i) split.assignment[order[i]] = kTest;
  rebuild_split_caches(ds, split);
  return split;
}

int sample_negative_item(const InteractionDataset& ds, int user, std::mt19937_64& rng) {
  require(user >= 0 && user < ds.n_users, "user id out of range");
  const auto& seen = ds.items_by_user[user];
  require(static_cast<int>(seen.size()) < ds.n_items,
          "user " + std::to_string(user) + " has interacted with every item; no negative exists");
  std::uniform_int_distribution<int> pick(0, ds.n_items - 1);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const int candidate = pick(rng);
    if (!std::binary_search(seen.begin(), seen.end(), candidate)) return candidate;
  }
  throw std::runtime_error("negative sampling failed to terminate");
}

TrainingTriplet sample_bpr_triplet(const InteractionDataset& ds, const DatasetSplit& split,
                                   int user, std::mt19937_64& rng) {
  require(user >= 0 && user < ds.n_users, "user id out of range");
  const auto& pos = split.train_pos_by_user[user];
  require(!pos.empty(), "user " + std::to_string(user) + " has no train positives to sample");
  std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
  return TrainingTriplet{user, pos[pick(rng)], sample_negative_item(ds, user, rng)};
}

std::optional<SocialPair> sample_social_pair(const InteractionDataset& ds, int user,
                                             std::mt19937_64& rng) {
  require(user >= 0 && user < ds.n_users, "user id out of range");
  if (ds.neighbors.empty() || ds.neighbors[user].empty()) return std::nullopt;
  const auto& nb = ds.neighbors[user];
  require(static_cast<int>(nb.size()) + 1 < ds.n_users,
          "user " + std::to_string(user) + " trusts every other user; no negative exists");
  std::uniform_int_distribution<std::size_t> pick_pos(0, nb.size() - 1);
  std::uniform_int_distribution<int> pick_user(0, ds.n_users - 1);
  const int positive = nb[pick_pos(rng)];
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const int candidate = pick_user(rng);
    if (candidate == user) continue;
    if (!std::binary_search(nb.begin(), nb.end(), candidate)) {
      return SocialPair{positive, candidate};
    }
  }
  throw std::runtime_error("social sampling failed to terminate");
}

// ---------------------------------------------------------------------------
// Canonical on-disk form.
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kStatsFile = "stats.json";
constexpr const char* kRatingsFile = "ratings.tsv";
constexpr const char* kTrustFile = "trust.tsv";
constexpr const char* kIdmapFile = "idmap.tsv";

}  // namespace

void write_canonical(const InteractionDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / kRatingsFile);
    require(out.good(), "cannot write " + dir + "/" + kRatingsFile);
    for (const auto& r : ds.interactions) {
      out << r.user << '\t' << r.item << '\t' << format_double(r.rating) << '\t' << r.timestamp
          << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / kIdmapFile);
    require(out.good(), "cannot write " + dir + "/" + kIdmapFile);
    for (int u = 0; u < ds.n_users; ++u) out << "user\t" << u << '\t' << ds.user_ext[u] << '\n';
    for (int i = 0; i < ds.n_items; ++i) out << "item\t" << i << '\t' << ds.item_ext[i] << '\n';
  }
  if (ds.has_social()) {
    std::ofstream out(fs::path(dir) / kTrustFile);
    require(out.good(), "cannot write " + dir + "/" + kTrustFile);
    for (int u = 0; u < ds.n_users; ++u)
      for (int v : ds.neighbors[u]) out << u << '\t' << v << '\n';
  }
  {
    nlohmann::json stats;
    stats["format"] = "hyperrec-canonical-v1";
    stats["n_users"] = ds.n_users;
    stats["n_items"] = ds.n_items;
    stats["n_interactions"] = ds.interactions.size();
    stats["n_social"] = ds.n_social;
    stats["density"] = ds.density();
    stats["rating_min"] = ds.rating_range.first;
    stats["rating_max"] = ds.rating_range.second;
    stats["min_rating_as_positive"] = ds.min_rating_as_positive;
    stats["duplicates_dropped"] = ds.duplicates_dropped;
    stats["social_dropped"] = ds.social_dropped;
    std::ofstream out(fs::path(dir) / kStatsFile);
    require(out.good(), "cannot write " + dir + "/" + kStatsFile);
    out << stats.dump(2) << '\n';
  }
}

InteractionDataset load_canonical(const std::string& dir) {
  const fs::path base(dir);
  require(fs::exists(base / kStatsFile), "not a prepared dataset directory (missing " +
                                             std::string(kStatsFile) + "): " + dir);
  nlohmann::json stats;
  {
    std::ifstream in(base / kStatsFile);
    require(in.good(), "cannot read " + (base / kStatsFile).string());
    try {
      in >> stats;
    } catch (const nlohmann::json::exception& e) {
      throw invalid_input_error("bad stats.json in " + dir + ": " + e.what());
    }
  }
  require(stats.value("format", "") == "hyperrec-canonical-v1",
          "unrecognized dataset format in " + dir);

  const ParsedInteractions parsed =
      parse_interactions((base / kRatingsFile).string(), InteractionFormat::tsv);
  ParsedTrust trust;
  if (fs::exists(base / kTrustFile)) trust = parse_trust((base / kTrustFile).string());

  InteractionDataset ds =
      build_dataset(parsed.interactions, trust.edges, stats.at("min_rating_as_positive"));
  require(ds.n_users == stats.at("n_users").get<int>() &&
              ds.n_items == stats.at("n_items").get<int>() &&
              ds.interactions.size() == stats.at("n_interactions").get<std::size_t>() &&
              ds.n_social == stats.at("n_social").get<std::int64_t>(),
          "dataset in " + dir + " does not match its stats.json");

  // Restore the original external ids (the canonical files use internal ids).
  std::vector<std::int64_t> user_ext(ds.n_users), item_ext(ds.n_items);
  std::int64_t mapped = 0;
  for_each_line((base / kIdmapFile).string(), [&](const std::string& line, std::int64_t line_no) {
    const auto fields = split_whitespace(line);
    require(fields.size() == 3, "bad idmap line " + std::to_string(line_no) + " in " + dir);
    const auto internal = to_i64(fields[1]);
    const auto external = to_i64(fields[2]);
    require(internal && external, "bad idmap ids at line " + std::to_string(line_no));
    if (fields[0] == "user") {
      require(*internal >= 0 && *internal < ds.n_users, "idmap user out of range");
      user_ext[*internal] = *external;
    } else if (fields[0] == "item") {
      require(*internal >= 0 && *internal < ds.n_items, "idmap item out of range");
      item_ext[*internal] = *external;
    } else {
      throw invalid_input_error("bad idmap kind at line " + std::to_string(line_no));
    }
    ++mapped;
  });
  require(mapped == ds.n_users + ds.n_items, "idmap does not cover all entities in " + dir);
  ds.user_ext = std::move(user_ext);
  ds.item_ext = std::move(item_ext);
  ds.duplicates_dropped = stats.value("duplicates_dropped", 0);
  ds.social_dropped = stats.value("social_dropped", 0);
  return ds;
}

void write_split(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write split file: " + path);
  out << "mode\t" << to_string(split.mode) << '\t' << split.seed << '\n';
  for (std::size_t idx = 0; idx < split.assignment.size(); ++idx) {
    out << idx << '\t' << static_cast<int>(split.assignment[idx]) << '\n';
  }
  require(out.good(), "write failed for split file: " + path);
}

DatasetSplit load_split(const std::string& path, const InteractionDataset& ds) {
  DatasetSplit split;
  bool have_header = false;
  split.assignment.assign(ds.interactions.size(), kTrain);
  std::vector<bool> seen(ds.interactions.size(), false);
  for_each_line(path, [&](const std::string& line, std::int64_t line_no) {
    const auto fields = split_whitespace(line);
    if (!have_header) {
      require(fields.size() == 3 && fields[0] == "mode", "bad split header in " + path);
      split.mode = parse_split_mode(fields[1]);
      const auto seed = to_i64(fields[2]);
      require(seed.has_value() && *seed >= 0, "bad split seed in " + path);
      split.seed = static_cast<std::uint64_t>(*seed);
      have_header = true;
      return;
    }
    require(fields.size() == 2, "bad split line " + std::to_string(line_no) + " in " + path);
    const auto idx = to_i64(fields[0]);
    const auto label = to_i64(fields[1]);
    require(idx && label && *idx >= 0 &&
                *idx < static_cast<std::int64_t>(split.assignment.size()) && *label >= 0 &&
                *label <= 2,
            "bad split entry at line " + std::to_string(line_no) + " in " + path);
    require(!seen[*idx], "duplicate split entry for interaction " + std::to_string(*idx));
    seen[*idx] = true;
    split.assignment[*idx] = static_cast<std::uint8_t>(*label);
  });
  require(have_header, "split file has no header: " + path);
  require(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }),
          "split file does not cover every interaction: " + path);
  rebuild_split_caches(ds, split);
  return split;
}

}  // namespace hyperrec::data
