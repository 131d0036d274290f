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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperrec/data.hpp"

using namespace hyperrec;
using namespace hyperrec::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& content) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << content;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RawInteraction> raw(std::initializer_list<RawInteraction> list) { return list; }

}  // namespace

TEST_CASE("format names") {
  CHECK(parse_format("tsv") == InteractionFormat::tsv);
  CHECK(parse_format("movielens_dat") == InteractionFormat::movielens_dat);
  CHECK(to_string(InteractionFormat::tsv) == "tsv");
  CHECK_THROWS_AS(parse_format("csv"), invalid_input_error);
  CHECK(parse_split_mode("ratio") == SplitMode::ratio);
  CHECK_THROWS_AS(parse_split_mode("loo"), invalid_input_error);
}

TEST_CASE("parse movielens_dat") {
  TempDir tmp("hyperrec_parse_ml");
  const auto p = write_file(tmp.path, "r.dat", "1::31::2.5::1260759144\n2::10::4::3\n");
  const auto parsed = parse_interactions(p.string(), InteractionFormat::movielens_dat);
  REQUIRE(parsed.interactions.size() == 2);
  CHECK(parsed.interactions[0].user == 1);
  CHECK(parsed.interactions[0].item == 31);
  CHECK(parsed.interactions[0].rating == 2.5);
  CHECK(parsed.interactions[0].timestamp == 1260759144);
  CHECK(parsed.malformed == 0);
}

TEST_CASE("parse tsv with and without timestamps") {
  TempDir tmp("hyperrec_parse_tsv");
  const auto p = write_file(tmp.path, "r.tsv", "7\t3\t5.0\t100\n8 4 2.5\n");
  const auto parsed = parse_interactions(p.string(), InteractionFormat::tsv);
  REQUIRE(parsed.interactions.size() == 2);
  CHECK(parsed.interactions[0].timestamp == 100);
  CHECK(parsed.interactions[1].timestamp == 0);
  CHECK(parsed.interactions[1].rating == 2.5);
}

TEST_CASE("malformed line budget") {
  TempDir tmp("hyperrec_malformed");

  // 1 bad line out of 2 data lines: way over 1%, hard error naming the line
  const auto bad = write_file(tmp.path, "bad.tsv", "1 2 3\nnot a line\n");
  CHECK_THROWS_WITH_AS(parse_interactions(bad.string(), InteractionFormat::tsv),
                       doctest::Contains("line 2"), invalid_input_error);

  // 1 bad line out of 200: tolerated with a count
  std::ostringstream many;
  for (int i = 0; i < 199; ++i) many << i << ' ' << i << " 1.0\n";
  many << "oops\n";
  const auto ok = write_file(tmp.path, "ok.tsv", many.str());
  const auto parsed = parse_interactions(ok.string(), InteractionFormat::tsv);
  CHECK(parsed.interactions.size() == 199);
  CHECK(parsed.malformed == 1);

  // empty file: empty list, no error
  const auto empty = write_file(tmp.path, "empty.tsv", "");
  CHECK(parse_interactions(empty.string(), InteractionFormat::tsv).interactions.empty());

  CHECK_THROWS_AS(parse_interactions((tmp.path / "missing.tsv").string(), InteractionFormat::tsv),
                  invalid_input_error);

  // negative ids are malformed
  const auto neg = write_file(tmp.path, "neg.tsv", "-1 2 3\n");
  CHECK_THROWS_AS(parse_interactions(neg.string(), InteractionFormat::tsv), invalid_input_error);
}

TEST_CASE("parse trust") {
  TempDir tmp("hyperrec_trust");
  const auto p = write_file(tmp.path, "t.txt", "12 45\n7 7\n3 4 1.0\n");
  const auto parsed = parse_trust(p.string());
  REQUIRE(parsed.edges.size() == 2);
  CHECK(parsed.edges[0].truster == 12);
  CHECK(parsed.edges[0].trustee == 45);
  CHECK(parsed.edges[1].truster == 3);  // weight column ignored
  CHECK(parsed.self_loops == 1);
}

TEST_CASE("build_dataset reindexes densely") {
  const auto ds = build_dataset(raw({{9, 100, 5.0, 10}, {5, 100, 3.0, 11}, {9, 7, 1.0, 12}}), {}, 0.0);
  CHECK(ds.n_users == 2);
  CHECK(ds.n_items == 2);
  // external ids sorted ascending: user 5 -> 0, user 9 -> 1; item 7 -> 0, item 100 -> 1
  CHECK(ds.user_ext == std::vector<std::int64_t>{5, 9});
  CHECK(ds.item_ext == std::vector<std::int64_t>{7, 100});
  CHECK(ds.interactions[0].user == 1);
  CHECK(ds.interactions[0].item == 1);
  CHECK(ds.density() == doctest::Approx(3.0 / 4.0));
  CHECK(ds.rating_range.first == 1.0);
  CHECK(ds.rating_range.second == 5.0);
  CHECK(ds.user_has_item(1, 0));
  CHECK_FALSE(ds.user_has_item(0, 0));
  CHECK_THROWS_AS(build_dataset({}, {}, 0.0), invalid_input_error);
}

TEST_CASE("duplicate interactions keep the latest timestamp") {
  const auto ds = build_dataset(
      raw({{1, 1, 2.0, 50}, {1, 1, 4.0, 80}, {1, 2, 3.0, 60}, {1, 2, 1.0, 60}}), {}, 0.0);
  CHECK(ds.interactions.size() == 2);
  CHECK(ds.duplicates_dropped == 2);
  CHECK(ds.interactions[0].rating == 4.0);  // later timestamp wins
  CHECK(ds.interactions[1].rating == 1.0);  // equal timestamps: later line wins
}

TEST_CASE("social edges filtered and indexed") {
  const std::vector<RawEdge> edges = {{9, 5}, {9, 5}, {5, 9}, {9, 77}, {42, 5}};
  const auto ds = build_dataset(raw({{5, 1, 1.0, 0}, {9, 1, 1.0, 0}}), edges, 0.0);
  // duplicate (9,5) and both unknown-user edges dropped
  CHECK(ds.n_social == 2);
  CHECK(ds.social_dropped == 3);
  CHECK(ds.user_trusts(1, 0));  // 9 trusts 5
  CHECK(ds.user_trusts(0, 1));  // 5 trusts 9
  CHECK_FALSE(ds.user_trusts(1, 1));
}

TEST_CASE("leave-one-out split") {
  // user 0: three positives at t=1,2,3; user 1: two positives only
  const auto ds = build_dataset(raw({{0, 10, 1.0, 1},
                                     {0, 11, 1.0, 3},
                                     {0, 12, 1.0, 2},
                                     {1, 10, 1.0, 1},
                                     {1, 11, 1.0, 2}}),
                                {}, 0.0);
  const auto split = leave_one_out_split(ds);
  CHECK(split.mode == SplitMode::leave_one_out);
  CHECK(split.assignment[0] == kTrain);  // t=1
  CHECK(split.assignment[1] == kTest);   // t=3, latest
  CHECK(split.assignment[2] == kVal);    // t=2
  CHECK(split.assignment[3] == kTrain);
  CHECK(split.assignment[4] == kTrain);
  CHECK(split.excluded_users == 1);
  CHECK(split.test_item[0] == 1);  // internal id of item 11
  CHECK(split.val_item[0] == 2);   // internal id of item 12
  CHECK(split.test_item[1] == -1);
  CHECK(split.train_pos_by_user[1] == std::vector<int>{0, 1});
}

TEST_CASE("leave-one-out ties break by file order") {
  const auto ds = build_dataset(
      raw({{0, 1, 1.0, 7}, {0, 2, 1.0, 7}, {0, 3, 1.0, 7}, {0, 4, 1.0, 7}}), {}, 0.0);
  const auto split = leave_one_out_split(ds);
  CHECK(split.assignment[3] == kTest);  // last line
  CHECK(split.assignment[2] == kVal);   // second-to-last line
  CHECK(split.assignment[0] == kTrain);
  CHECK(split.assignment[1] == kTrain);
}

TEST_CASE("leave-one-out keeps non-positives in train") {
  const auto ds = build_dataset(raw({{0, 1, 5.0, 1},
                                     {0, 2, 1.0, 2},  // below threshold
                                     {0, 3, 5.0, 3},
                                     {0, 4, 5.0, 4},
                                     {0, 5, 5.0, 5}}),
                                {}, 3.0);
  const auto split = leave_one_out_split(ds);
  CHECK(split.assignment[1] == kTrain);
  CHECK(split.assignment[4] == kTest);
  CHECK(split.assignment[3] == kVal);
  CHECK(split.train_items_by_user[0].size() == 3);  // positives 1 and 3, non-positive 2
  CHECK(split.train_pos_by_user[0].size() == 2);
}

TEST_CASE("ratio split proportions and determinism") {
  std::vector<RawInteraction> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({i / 5, i, 1.0, i});
  const auto ds = build_dataset(rows, {}, 0.0);
  const auto a = ratio_split(ds, 13);
  const auto b = ratio_split(ds, 13);
  CHECK(a.assignment == b.assignment);
  CHECK(std::count(a.assignment.begin(), a.assignment.end(), kTrain) == 6);
  CHECK(std::count(a.assignment.begin(), a.assignment.end(), kVal) == 2);
  CHECK(std::count(a.assignment.begin(), a.assignment.end(), kTest) == 2);
  CHECK(ratio_split(ds, 14).assignment != a.assignment);
}

TEST_CASE("splits partition the interactions") {
  std::vector<RawInteraction> rows;
  for (int u = 0; u < 8; ++u)
    for (int i = 0; i < 6; ++i) rows.push_back({u, (u + i) % 12, 1.0 + (i % 5), i});
  const auto ds = build_dataset(rows, {}, 0.0);
  for (const auto& split : {leave_one_out_split(ds), ratio_split(ds, 1)}) {
    CHECK(split.assignment.size() == ds.interactions.size());
    // every interaction carries exactly one label; train/val/test counts add up
    const auto n_train = std::count(split.assignment.begin(), split.assignment.end(), kTrain);
    const auto n_val = std::count(split.assignment.begin(), split.assignment.end(), kVal);
    const auto n_test = std::count(split.assignment.begin(), split.assignment.end(), kTest);
    CHECK(n_train + n_val + n_test == static_cast<std::int64_t>(ds.interactions.size()));
    CHECK(split.train_positives.size() == static_cast<std::size_t>(n_train));
  }
}

TEST_CASE("negative sampling avoids interacted items") {
  std::vector<RawInteraction> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({1, i, 1.0, 0});  // user 1 fills the item space
  rows.push_back({0, 42, 1.0, 0});
  const auto ds = build_dataset(rows, {}, 0.0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10000; ++k) CHECK(sample_negative_item(ds, 0, rng) != 42);
  CHECK_THROWS_AS(sample_negative_item(ds, 1, rng), invalid_input_error);
}

TEST_CASE("negative sampling is uniform over the complement") {
  std::vector<RawInteraction> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({1, i, 1.0, 0});
  rows.push_back({0, 3, 1.0, 0});
  const auto ds = build_dataset(rows, {}, 0.0);

  std::mt19937_64 rng(99);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) ++counts[sample_negative_item(ds, 0, rng)];
  CHECK(counts[3] == 0);

  // chi-squared over the 9 complement items, dof 8, 1% critical value 20.090
  const double expected = draws / 9.0;
  double stat = 0.0;
  for (int i = 0; i < 10; ++i) {
    if (i == 3) continue;
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  CHECK(stat < 20.090);
}

TEST_CASE("bpr triplet sampling") {
  std::vector<RawInteraction> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({0, i, 1.0, i});
  rows.push_back({1, 0, 1.0, 0});
  rows.push_back({1, 25, 1.0, 1});  // keeps the item universe larger than user 0's history
  for (int i = 0; i < 20; ++i) rows.push_back({2, i % 5, 1.0, i});
  const auto ds = build_dataset(rows, {}, 0.0);
  const auto split = leave_one_out_split(ds);

  std::mt19937_64 rng(7);
  for (int k = 0; k < 2000; ++k) {
    const auto t = sample_bpr_triplet(ds, split, 0, rng);
    CHECK(t.user == 0);
    // positive comes from the train positives, never val/test
    CHECK(std::binary_search(split.train_pos_by_user[0].begin(),
                             split.train_pos_by_user[0].end(), t.positive));
    // negative was never interacted with at all
    CHECK_FALSE(ds.user_has_item(0, t.negative));
  }
  // user 1 has one interaction, all of it train, so sampling works
  CHECK_NOTHROW(sample_bpr_triplet(ds, split, 1, rng));
}

TEST_CASE("social pair sampling") {
  std::vector<RawInteraction> rows;
  for (int u = 0; u < 6; ++u) rows.push_back({u, u, 1.0, 0});
  const std::vector<RawEdge> edges = {{0, 1}, {0, 2}, {5, 0}, {5, 1}, {5, 2}, {5, 3}, {5, 4}};
  const auto ds = build_dataset(rows, edges, 0.0);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 2000; ++k) {
    const auto pair = sample_social_pair(ds, 0, rng);
    REQUIRE(pair.has_value());
    CHECK(ds.user_trusts(0, pair->positive_neighbor));
    CHECK_FALSE(ds.user_trusts(0, pair->negative_user));
    CHECK(pair->negative_user != 0);
  }
  CHECK_FALSE(sample_social_pair(ds, 3, rng).has_value());  // no neighbors: skipped
  CHECK_THROWS_AS(sample_social_pair(ds, 5, rng), invalid_input_error);  // trusts everyone
}

TEST_CASE("canonical round trip is exact") {
  std::vector<RawInteraction> rows = {
      {9, 100, 5.0, 10}, {5, 100, 3.25, 11}, {9, 7, 1.0, 12}, {5, 7, 4.0, 13}, {77, 100, 2.0, 9}};
  const std::vector<RawEdge> edges = {{9, 5}, {5, 77}};
  const auto ds = build_dataset(rows, edges, 2.0);

  TempDir tmp("hyperrec_canonical");
  const std::string dir = (tmp.path / "ds").string();
  write_canonical(ds, dir);
  const auto back = load_canonical(dir);

  CHECK(back.n_users == ds.n_users);
  CHECK(back.n_items == ds.n_items);
  CHECK(back.n_social == ds.n_social);
  CHECK(back.min_rating_as_positive == ds.min_rating_as_positive);
  CHECK(back.rating_range == ds.rating_range);
  CHECK(back.user_ext == ds.user_ext);
  CHECK(back.item_ext == ds.item_ext);
  REQUIRE(back.interactions.size() == ds.interactions.size());
  for (std::size_t i = 0; i < ds.interactions.size(); ++i) {
    CHECK(back.interactions[i].user == ds.interactions[i].user);
    CHECK(back.interactions[i].item == ds.interactions[i].item);
    CHECK(back.interactions[i].rating == ds.interactions[i].rating);
    CHECK(back.interactions[i].timestamp == ds.interactions[i].timestamp);
  }
  CHECK(back.items_by_user == ds.items_by_user);
  CHECK(back.neighbors == ds.neighbors);

  // re-export is byte-identical
  const std::string dir2 = (tmp.path / "ds2").string();
  write_canonical(back, dir2);
  for (const char* name : {"ratings.tsv", "idmap.tsv", "trust.tsv", "stats.json"}) {
    CHECK(read_file(fs::path(dir) / name) == read_file(fs::path(dir2) / name));
  }

  CHECK_THROWS_AS(load_canonical((tmp.path / "nope").string()), invalid_input_error);
}

TEST_CASE("split file round trip") {
  std::vector<RawInteraction> rows;
  for (int u = 0; u < 5; ++u)
    for (int i = 0; i < 4; ++i) rows.push_back({u, i, 1.0, u * 4 + i});
  const auto ds = build_dataset(rows, {}, 0.0);
  const auto split = leave_one_out_split(ds);

  TempDir tmp("hyperrec_split");
  const std::string path = (tmp.path / "split.tsv").string();
  write_split(split, path);
  const auto back = load_split(path, ds);
  CHECK(back.mode == split.mode);
  CHECK(back.assignment == split.assignment);
  CHECK(back.train_positives == split.train_positives);
  CHECK(back.val_item == split.val_item);
  CHECK(back.test_item == split.test_item);
  CHECK(back.excluded_users == split.excluded_users);

  const auto r = ratio_split(ds, 21);
  write_split(r, path);
  const auto back_r = load_split(path, ds);
  CHECK(back_r.mode == SplitMode::ratio);
  CHECK(back_r.seed == 21);
  CHECK(back_r.assignment == r.assignment);

  write_file(tmp.path, "trunc.tsv", "mode\tleave_one_out\t0\n0\t1\n");
  CHECK_THROWS_AS(load_split((tmp.path / "trunc.tsv").string(), ds), invalid_input_error);
  write_file(tmp.path, "badlabel.tsv", "mode\tleave_one_out\t0\n0\t7\n");
  CHECK_THROWS_AS(load_split((tmp.path / "badlabel.tsv").string(), ds), invalid_input_error);
}
