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

#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hyperrec/cli.hpp"
#include "hyperrec/common.hpp"
#include "hyperrec/data.hpp"
#include "hyperrec/eval.hpp"
#include "hyperrec/models.hpp"
#include "hyperrec/spaces.hpp"

using namespace hyperrec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("hyperrec_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Captures std::cout and std::cerr for in-process run_cli calls.
struct CaptureOutput {
  std::ostringstream out_buf, err_buf;
  std::streambuf* old_out;
  std::streambuf* old_err;
  CaptureOutput()
      : old_out(std::cout.rdbuf(out_buf.rdbuf())), old_err(std::cerr.rdbuf(err_buf.rdbuf())) {}
  ~CaptureOutput() {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
  }
  std::string out() const { return out_buf.str(); }
  std::string err() const { return err_buf.str(); }
};

int run(const std::vector<std::string>& args) { return cli::run_cli(args); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 20 users x 25 items, 6 positives and one low rating per user; a trust ring.
void write_fixture(const TempDir& tmp) {
  std::ofstream ratings(tmp.file("raw_ratings.tsv"));
  for (int u = 0; u < 20; ++u) {
    for (int j = 0; j < 6; ++j)
      ratings << (u + 100) << '\t' << ((u + j * 3) % 25 + 500) << '\t' << (4.0 + (j % 2)) << '\t'
              << j << "\n";
    ratings << (u + 100) << '\t' << ((u * 2 + 1) % 25 + 500) << '\t' << 2.0 << '\t' << 9 << "\n";
  }
  std::ofstream trust(tmp.file("raw_trust.tsv"));
  for (int u = 0; u < 20; ++u) trust << (u + 100) << '\t' << ((u + 1) % 20 + 100) << "\n";
}

int prep_fixture(const TempDir& tmp, const std::string& out) {
  return run({"prep", "--input", tmp.file("raw_ratings.tsv"), "--trust",
              tmp.file("raw_trust.tsv"), "--out", tmp.file(out)});
}

}  // namespace

TEST_CASE("prep writes a canonical dataset and reruns byte-identically") {
  TempDir tmp;
  write_fixture(tmp);

  CaptureOutput cap;
  CHECK(prep_fixture(tmp, "ds1") == 0);
  CHECK(cap.out().find("users=20 items=25") != std::string::npos);
  CHECK(cap.out().find("density=") != std::string::npos);
  CHECK(cap.out().find("social=20") != std::string::npos);

  CHECK(prep_fixture(tmp, "ds2") == 0);
  for (const char* name : {"ratings.tsv", "trust.tsv", "idmap.tsv", "split.tsv", "stats.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(tmp.file("ds1")) / name));
    CHECK(read_file((fs::path(tmp.file("ds1")) / name).string()) ==
          read_file((fs::path(tmp.file("ds2")) / name).string()));
  }
}

TEST_CASE("prep reports a missing input by its path") {
  TempDir tmp;
  CaptureOutput cap;
  CHECK(run({"prep", "--input", tmp.file("nope.tsv"), "--out", tmp.file("ds")}) == 1);
  CHECK(cap.err().find("nope.tsv") != std::string::npos);
}

TEST_CASE("train with zero epochs checkpoints the untouched initialization") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);

  CaptureOutput cap;
  CHECK(run({"train", "--dataset", tmp.file("ds"), "--model", "cml", "--dim", "4", "--epochs",
             "0", "--seeds", "5", "--out_dir", tmp.file("run")}) == 0);

  const auto users = spaces::load_table(tmp.file("run/cml_euclidean_d4_seed5.users.hrec"));
  const auto items = spaces::load_table(tmp.file("run/cml_euclidean_d4_seed5.items.hrec"));
  const auto init_users = spaces::init_embeddings(20, 4, 0.01, mix_seed(5, 1), false);
  const auto init_items = spaces::init_embeddings(25, 4, 0.01, mix_seed(5, 2), false);
  CHECK(users.table.params() == init_users.params());
  CHECK(items.table.params() == init_items.params());

  const auto meta = nlohmann::json::parse(read_file(tmp.file("run/cml_euclidean_d4_seed5.meta.json")));
  CHECK(meta.at("best_epoch") == 0);
  CHECK(meta.at("model") == "cml");
  // No epochs ran, so the log holds only its header.
  CHECK(read_file(tmp.file("run/cml_euclidean_d4_seed5.log.csv")) ==
        "epoch,mean_loss,val_score,wall_seconds\n");
}

TEST_CASE("train writes one checkpoint per seed plus an averaged summary row") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);

  CaptureOutput cap;
  CHECK(run({"train", "--dataset", tmp.file("ds"), "--model", "mf_bpr", "--dim", "3", "--epochs",
             "1", "--seeds", "1,2,3", "--out_dir", tmp.file("run")}) == 0);

  for (const char* seed : {"1", "2", "3"}) {
    CAPTURE(seed);
    const std::string base = tmp.file(std::string("run/mf_bpr_euclidean_d3_seed") + seed);
    CHECK(fs::exists(base + ".users.hrec"));
    CHECK(fs::exists(base + ".items.hrec"));
    CHECK(fs::exists(base + ".meta.json"));
    CHECK(fs::exists(base + ".log.csv"));
  }
  const std::string summary = read_file(tmp.file("run/summary.csv"));
  CHECK(summary.find("model,space,dim,seed,best_epoch,val_score\n") == 0);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);  // header + 3 seeds + mean
  CHECK(summary.find(",mean,") != std::string::npos);
}

TEST_CASE("command-line flags override config file values") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);
  {
    std::ofstream cfg(tmp.file("exp.cfg"));
    cfg << "dataset=" << tmp.file("ds") << "\nmodel=cml\ndim=3\nepochs=1\nseeds=9\n"
        << "out_dir=" << tmp.file("rc") << "\n";
  }

  CaptureOutput cap;
  CHECK(run({"train", "--config", tmp.file("exp.cfg"), "--dim", "5"}) == 0);
  const auto users = spaces::load_table(tmp.file("rc/cml_euclidean_d5_seed9.users.hrec"));
  CHECK(users.table.dim() == 5);  // flag beat the file
  const std::string log = read_file(tmp.file("rc/cml_euclidean_d5_seed9.log.csv"));
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);  // header + the file's single epoch
}

TEST_CASE("an unknown key in a config file fails cleanly") {
  TempDir tmp;
  {
    std::ofstream cfg(tmp.file("bad.cfg"));
    cfg << "dataset=d\nlearning_rate=0.1\n";
  }
  CaptureOutput cap;
  CHECK(run({"train", "--config", tmp.file("bad.cfg")}) == 1);
  CHECK(cap.err().find("unknown config key") != std::string::npos);
  CHECK(cap.err().find("line 2") != std::string::npos);
}

TEST_CASE("eval reproduces the library evaluator exactly") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);
  CaptureOutput cap;
  REQUIRE(run({"train", "--dataset", tmp.file("ds"), "--model", "cml", "--dim", "4", "--epochs",
               "2", "--lr", "0.05", "--seeds", "7", "--out_dir", tmp.file("run")}) == 0);
  const std::string base = tmp.file("run/cml_euclidean_d4_seed7");
  REQUIRE(run({"eval", "--checkpoint", base, "--dataset", tmp.file("ds")}) == 0);

  // The same evaluation through the library, bypassing the CLI.
  const auto ds = data::load_canonical(tmp.file("ds"));
  const auto split = data::leave_one_out_split(ds);
  const auto users = spaces::load_table(base + ".users.hrec");
  const auto items = spaces::load_table(base + ".items.hrec");
  const auto report =
      eval::evaluate_full_ranking(models::ModelKind::cml, spaces::SpaceKind::euclidean(),
                                  users.table, items.table, ds, split);
  const auto expected = eval::report_rows("ds", "cml", "euclidean", 4, 7, report);

  const auto got = eval::load_report_csv(base + ".report.csv");
  REQUIRE(got.size() == expected.size());
  for (size_t i = 0; i < got.size(); ++i) {
    CAPTURE(i);
    CHECK(got[i].dataset == expected[i].dataset);
    CHECK(got[i].metric == expected[i].metric);
    CHECK(got[i].k == expected[i].k);
    CHECK(got[i].value == expected[i].value);
    CHECK(got[i].seed == expected[i].seed);
    CHECK(got[i].protocol == expected[i].protocol);
  }
  // The JSON mirror parses and matches row for row.
  const auto j = nlohmann::json::parse(read_file(base + ".report.json"));
  REQUIRE(j.size() == got.size());
  CHECK(j.at(0).at("metric") == got[0].metric);
}

TEST_CASE("eval protocols: sampled tags its rows and take-all matches full") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);
  CaptureOutput cap;
  REQUIRE(run({"train", "--dataset", tmp.file("ds"), "--model", "cml", "--dim", "4", "--epochs",
               "1", "--seeds", "7", "--out_dir", tmp.file("run")}) == 0);
  const std::string base = tmp.file("run/cml_euclidean_d4_seed7");

  REQUIRE(run({"eval", "--checkpoint", base, "--dataset", tmp.file("ds"), "--out",
               tmp.file("full_rep")}) == 0);
  // 25 negatives cover every user's complement, so ranks match full ranking.
  REQUIRE(run({"eval", "--checkpoint", base, "--dataset", tmp.file("ds"), "--protocol",
               "sampled:25", "--eval_seed", "3", "--out", tmp.file("samp_rep")}) == 0);

  const auto full = eval::load_report_csv(tmp.file("full_rep.csv"));
  const auto samp = eval::load_report_csv(tmp.file("samp_rep.csv"));
  REQUIRE(full.size() == samp.size());
  for (size_t i = 0; i < full.size(); ++i) {
    CAPTURE(i);
    CHECK(samp[i].protocol == "sampled:25");
    CHECK(full[i].protocol == "full");
    CHECK(samp[i].value == full[i].value);
  }
}

TEST_CASE("eval rejects mismatched inputs with messages naming both sides") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);
  CaptureOutput cap;
  REQUIRE(run({"train", "--dataset", tmp.file("ds"), "--model", "cml", "--dim", "4", "--epochs",
               "0", "--seeds", "7", "--out_dir", tmp.file("run")}) == 0);
  const std::string base = tmp.file("run/cml_euclidean_d4_seed7");

  SUBCASE("user and item table dims differ") {
    const auto d6 = spaces::init_embeddings(25, 6, 0.01, 1, false);
    spaces::save_table(base + ".items.hrec", spaces::SpaceKind::euclidean(), d6);
    CHECK(run({"eval", "--checkpoint", base, "--dataset", tmp.file("ds")}) == 1);
    CHECK(cap.err().find("dim 4") != std::string::npos);
    CHECK(cap.err().find("dim 6") != std::string::npos);
  }
  SUBCASE("checkpoint size does not fit the dataset") {
    // A second dataset with fewer users.
    {
      std::ofstream ratings(tmp.file("small.tsv"));
      for (int u = 0; u < 5; ++u)
        for (int j = 0; j < 4; ++j)
          ratings << u << '\t' << ((u + j) % 8) << '\t' << 5.0 << '\t' << j << "\n";
    }
    REQUIRE(run({"prep", "--input", tmp.file("small.tsv"), "--out", tmp.file("ds_small")}) == 0);
    CHECK(run({"eval", "--checkpoint", base, "--dataset", tmp.file("ds_small")}) == 1);
    CHECK(cap.err().find("20") != std::string::npos);
    CHECK(cap.err().find("5") != std::string::npos);
  }
  SUBCASE("metadata and table space must agree") {
    const auto loaded = spaces::load_table(base + ".users.hrec");
    spaces::save_table(base + ".users.hrec", spaces::SpaceKind::poincare_ball(1.0, 6.0),
                       loaded.table);
    CHECK(run({"eval", "--checkpoint", base, "--dataset", tmp.file("ds")}) == 1);
    CHECK(cap.err().find("space") != std::string::npos);
  }
}

TEST_CASE("sweep resumes finished cells and retrains when the recipe changes") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);

  const std::vector<std::string> sweep_args = {
      "sweep", "--dataset", tmp.file("ds"), "--model", "cml",   "--dims",    "2",
      "--epochs", "1",       "--seeds",      "1,2",    "--out_dir", tmp.file("sw")};
  {
    CaptureOutput cap;
    CHECK(run(sweep_args) == 0);
    CHECK(cap.out().find("completed=4") != std::string::npos);  // 1 dim x 2 spaces x 2 seeds
    CHECK(fs::exists(tmp.file("sw/curve.csv")));
  }
  const std::string curve_before = read_file(tmp.file("sw/curve.csv"));
  const std::string cell_report =
      tmp.file("sw/cells/cml_euclidean_d2_seed1/report.csv");
  const std::string report_before = read_file(cell_report);

  {
    CaptureOutput cap;
    CHECK(run(sweep_args) == 0);
    CHECK(cap.out().find("resumed=4") != std::string::npos);
    CHECK(cap.out().find("completed=0") != std::string::npos);
  }
  CHECK(read_file(tmp.file("sw/curve.csv")) == curve_before);
  CHECK(read_file(cell_report) == report_before);

  // A different recipe hashes to a different marker, so cells retrain.
  {
    CaptureOutput cap;
    auto changed = sweep_args;
    REQUIRE(changed[8] == "1");
    changed[8] = "2";  // epochs value
    CHECK(run(changed) == 0);
    CHECK(cap.out().find("completed=4") != std::string::npos);
  }

  // The curve aggregates across seeds: one mean/stddev row per metric point.
  const auto curve = read_file(tmp.file("sw/curve.csv"));
  CHECK(curve.find("dim,space,metric,k,mean,stddev,n_seeds") == 0);
  CHECK(curve.find("2,euclidean,hr,10,") != std::string::npos);
  CHECK(curve.find("2,poincare,hr,10,") != std::string::npos);
}

TEST_CASE("sweep isolates a failing cell and signals partial failure") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);

  // A plain file where one cell's directory belongs makes just that cell fail.
  const std::string victim = cli::cell_name("cml", "euclidean", 2, 1);
  fs::create_directories(tmp.file("sw/cells"));
  { std::ofstream block(tmp.file("sw/cells/" + victim)); }

  const std::vector<std::string> sweep_args = {
      "sweep", "--dataset", tmp.file("ds"), "--model", "cml",   "--dims",    "2",
      "--epochs", "1",       "--seeds",      "1,2",    "--out_dir", tmp.file("sw")};
  {
    CaptureOutput cap;
    CHECK(run(sweep_args) == 2);
    CHECK(cap.out().find("failed=1") != std::string::npos);
    CHECK(cap.err().find(victim) != std::string::npos);
  }
  CHECK(fs::exists(tmp.file("sw/failures.txt")));
  CHECK(read_file(tmp.file("sw/failures.txt")).find(victim) != std::string::npos);
  // The other three cells still produced reports and the curve exists.
  CHECK(fs::exists(tmp.file("sw/cells/cml_poincare_d2_seed1/report.csv")));
  CHECK(fs::exists(tmp.file("sw/curve.csv")));

  // Unblocking the cell and rerunning completes it and clears the failures.
  fs::remove(tmp.file("sw/cells/" + victim));
  {
    CaptureOutput cap;
    CHECK(run(sweep_args) == 0);
    CHECK(cap.out().find("completed=1") != std::string::npos);
    CHECK(cap.out().find("resumed=3") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(tmp.file("sw/failures.txt")));
}

TEST_CASE("compare ties on identical reports and flags a dominant side") {
  TempDir tmp;
  using eval::ReportRow;
  const auto rows_a = std::vector<ReportRow>{
      {"ds", "cml", "euclidean", 8, "hr", 10, 0.20, 1, "full"},
      {"ds", "cml", "euclidean", 8, "hr", 10, 0.30, 2, "full"},
      {"ds", "cml", "euclidean", 8, "ndcg", 10, 0.10, 1, "full"},
      {"ds", "cml", "euclidean", 8, "ndcg", 10, 0.20, 2, "full"},
      {"ds", "cml", "euclidean", 8, "n_users", 0, 20.0, 1, "full"},
      {"ds", "cml", "euclidean", 8, "n_users", 0, 20.0, 2, "full"},
  };
  auto rows_b = rows_a;
  eval::write_report_csv(tmp.file("a.csv"), rows_a);

  SUBCASE("identical reports tie everywhere") {
    eval::write_report_csv(tmp.file("b.csv"), rows_b);
    CaptureOutput cap;
    CHECK(run({"compare", "--a", tmp.file("a.csv"), "--b", tmp.file("b.csv"), "--out",
               tmp.file("cmp")}) == 0);
    CHECK(cap.out().find("A wins 0, B wins 1") == std::string::npos);
    CHECK(cap.out().find("ties 2") != std::string::npos);  // hr@10 and ndcg@10
    const auto csv = read_file(tmp.file("cmp.csv"));
    CHECK(csv.find("cml,8,hr,10,0.25,0.25,0,0,tie") != std::string::npos);
    CHECK(csv.find("n_users") != std::string::npos);  // informational row kept, winner "-"
  }

  SUBCASE("a dominant side wins every decided cell") {
    for (auto& r : rows_b)
      if (r.metric != "n_users") { r.space = "poincare"; r.value += 0.05; }
      else r.space = "poincare";
    eval::write_report_csv(tmp.file("b.csv"), rows_b);
    CaptureOutput cap;
    CHECK(run({"compare", "--a", tmp.file("a.csv"), "--b", tmp.file("b.csv"), "--out",
               tmp.file("cmp"), "--label_a", "euc", "--label_b", "hyp"}) == 0);
    CHECK(cap.out().find("euc wins 0, hyp wins 2, ties 0") != std::string::npos);
    const auto md = read_file(tmp.file("cmp.md"));
    CHECK(md.find("| hyp |") != std::string::npos);
    CHECK(md.find("space euclidean") != std::string::npos);
    CHECK(md.find("space poincare") != std::string::npos);
  }

  SUBCASE("mismatched protocols are rejected") {
    for (auto& r : rows_b) r.protocol = "sampled:99";
    eval::write_report_csv(tmp.file("b.csv"), rows_b);
    CaptureOutput cap;
    CHECK(run({"compare", "--a", tmp.file("a.csv"), "--b", tmp.file("b.csv"), "--out",
               tmp.file("cmp")}) == 1);
    CHECK(cap.err().find("protocol mismatch") != std::string::npos);
  }

  SUBCASE("mismatched datasets are rejected") {
    for (auto& r : rows_b) r.dataset = "other";
    eval::write_report_csv(tmp.file("b.csv"), rows_b);
    CaptureOutput cap;
    CHECK(run({"compare", "--a", tmp.file("a.csv"), "--b", tmp.file("b.csv"), "--out",
               tmp.file("cmp")}) == 1);
    CHECK(cap.err().find("ds") != std::string::npos);
    CHECK(cap.err().find("other") != std::string::npos);
  }
}

TEST_CASE("the installed binary reports the documented exit codes") {
  const std::string bin = HYPERREC_BIN;
  REQUIRE(fs::exists(bin));
  const auto exit_code = [&](const std::string& args) {
    const int rc = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
  };
  CHECK(exit_code("--help") == 0);
  CHECK(exit_code("prep --help") == 0);
  CHECK(exit_code("") == 1);                   // a subcommand is required
  CHECK(exit_code("frobnicate") == 1);         // unknown subcommand
  CHECK(exit_code("train --bogus_flag 1") == 1);
  CHECK(exit_code("prep --input /definitely/missing.tsv --out /tmp/x") == 1);
  CHECK(exit_code("eval --checkpoint /missing/base --dataset /missing/ds") == 1);
}

TEST_CASE("relative dataset paths fall back to HYPERREC_DATA_DIR") {
  TempDir tmp;
  write_fixture(tmp);
  REQUIRE(prep_fixture(tmp, "ds") == 0);

  // resolve_data_path prefers an existing local path, then the env root.
  REQUIRE(setenv("HYPERREC_DATA_DIR", tmp.path.string().c_str(), 1) == 0);
  CHECK(cli::resolve_data_path("ds") == (tmp.path / "ds").string());
  CHECK(cli::resolve_data_path(tmp.file("ds")) == tmp.file("ds"));
  CHECK(cli::resolve_data_path("missing_thing") == "missing_thing");
  REQUIRE(unsetenv("HYPERREC_DATA_DIR") == 0);
  CHECK(cli::resolve_data_path("ds") == "ds");
}
