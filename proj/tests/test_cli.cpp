#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fiberstrat/cli.hpp"
#include "fiberstrat/flow.hpp"
#include "fiberstrat/io.hpp"
#include "testutil.hpp"

using namespace fiberstrat;
using testutil::pentagon_vertex;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// scratch directory shared by the file-based cases, removed at process exit
struct Scratch {
  std::filesystem::path dir;
  Scratch() {
    dir = std::filesystem::temp_directory_path() /
          ("fiberstrat-cli-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
  }
  ~Scratch() { std::filesystem::remove_all(dir); }
  std::string file(const std::string& name, const std::string& content) const {
    const std::string path = (dir / name).string();
    io::write_file(path, content);
    return path;
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Scratch& scratch() {
  static Scratch s;
  return s;
}

bool has(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("dag subcommand: formats, determinism, --out") {
  const RunResult json1 = run_cli({"dag", "--d", "1,1,1,1", "--rank", "0", "--format", "json"});
  REQUIRE(json1.code == cli::exit_ok);
  const StratumDag parsed = io::dag_from_json(json1.out);
  CHECK(parsed.vertices.size() == 7);
  CHECK(parsed.edges.size() == 9);
  CHECK(parsed.W_rank == 0);
  CHECK(parsed.shape == testutil::chain_shape());
  CHECK(parsed == build_dag(testutil::chain_shape(), 0));

  const RunResult json2 = run_cli({"dag", "--d", "1,1,1,1", "--rank", "0", "--format", "json"});
  CHECK(json1.out == json2.out);  // byte-identical reruns

  const RunResult table = run_cli({"dag", "--d", "4,6,5", "--rank", "1"});
  REQUIRE(table.code == cli::exit_ok);
  CHECK(has(table.out, "d=(4,6,5)  rk W=1"));
  CHECK(has(table.out, "vertices: 17   edges: 25"));
  CHECK(has(table.out, "S3,2,1 [30/38/8]"));
  CHECK(has(table.out, "S1,1,1 [11/46/35]"));

  const RunResult dot = run_cli({"dag", "--d", "2,1,1", "--rank", "0", "--format", "dot"});
  REQUIRE(dot.code == cli::exit_ok);
  CHECK(has(dot.out, "digraph fiberstrat {"));
  CHECK(has(dot.out, "rankdir=BT"));
  CHECK(has(dot.out, "->"));
  // the two covering moves: raise r(1,0), raise r(2,1)
  CHECK(has(dot.out, "(1,0,1,0)"));
  CHECK(has(dot.out, "(2,1,2,1)"));

  const std::string out_path = scratch().path("dag.json");
  const RunResult to_file = run_cli(
      {"dag", "--d", "1,1,1,1", "--rank", "0", "--format", "json", "--out", out_path});
  REQUIRE(to_file.code == cli::exit_ok);
  CHECK(to_file.out.empty());
  CHECK(io::read_file(out_path) == json1.out);
}

TEST_CASE("dag subcommand: domain and usage failures") {
  const RunResult empty = run_cli({"dag", "--d", "3,1,3", "--rank", "2"});
  CHECK(empty.code == cli::exit_domain_error);
  CHECK(has(empty.err, "empty fiber: rk W exceeds min layer size"));

  CHECK(run_cli({"dag", "--d", "4,6,5", "--rank", "-1"}).code == cli::exit_domain_error);

  CHECK(run_cli({"dag", "--d", "4,0,5", "--rank", "1"}).code == cli::exit_usage);
  CHECK(run_cli({"dag", "--d", "4,6,5"}).code == cli::exit_usage);  // missing --rank
  CHECK(run_cli({"dag", "--d", "4,6,5", "--rank", "1", "--format", "yaml"}).code ==
        cli::exit_usage);
  CHECK(run_cli({"frobnicate"}).code == cli::exit_usage);
  CHECK(run_cli({}).code == cli::exit_usage);
}

TEST_CASE("help exits cleanly at every level") {
  const RunResult top = run_cli({"--help"});
  CHECK(top.code == cli::exit_ok);
  CHECK(has(top.out, "fiberstrat"));
  const RunResult sub = run_cli({"dag", "--help"});
  CHECK(sub.code == cli::exit_ok);
  CHECK(has(sub.out, "--format"));
  CHECK(run_cli({"--help-all"}).code == cli::exit_ok);
}

TEST_CASE("moves subcommand plans a replayable chain") {
  const std::string from = scratch().file("s11.json", io::ranklist_to_json(pentagon_vertex(1, 1)));
  const std::string to = scratch().file("s32.json", io::ranklist_to_json(pentagon_vertex(3, 2)));

  const RunResult plan = run_cli({"moves", "--from", from, "--to", to});
  REQUIRE(plan.code == cli::exit_ok);
  // three single-cell raises separate S_11 from S_32
  CHECK(has(plan.out, "\"kind\""));
  CHECK(has(plan.out, "connecting"));
  CHECK(has(plan.out, "result_ranks"));

  // the same chain computed in-process round-trips through the JSON shape
  const auto chain = find_all_moves(pentagon_vertex(1, 1), pentagon_vertex(3, 2));
  CHECK(chain.size() == 3);
  CHECK(plan.out == io::moves_to_json(chain));

  const RunResult noop = run_cli({"moves", "--from", from, "--to", from});
  CHECK(noop.code == cli::exit_ok);
  CHECK(noop.out == "[]\n");

  // unreachable target: strictly lower in the order
  const RunResult down = run_cli({"moves", "--from", to, "--to", from});
  CHECK(down.code == cli::exit_domain_error);
  CHECK(has(down.err, "error:"));

  // shape mismatch between the two lists
  const std::string other = scratch().file(
      "chain0.json", io::ranklist_to_json(minimal_ranklist(testutil::chain_shape(), 0)));
  CHECK(run_cli({"moves", "--from", from, "--to", other}).code == cli::exit_domain_error);

  // missing file
  CHECK(run_cli({"moves", "--from", from, "--to", scratch().path("absent.json")}).code ==
        cli::exit_domain_error);
}

TEST_CASE("canonical feeds analyze, which prints the ledger and passes checks") {
  const std::string rl_path =
      scratch().file("s32b.json", io::ranklist_to_json(pentagon_vertex(3, 2)));
  const std::string w_path = scratch().path("canon32.json");

  const RunResult canon = run_cli({"canonical", "--ranklist", rl_path, "--out", w_path});
  REQUIRE(canon.code == cli::exit_ok);
  const WeightVector th = io::weights_from_json(io::read_file(w_path));
  CHECK(ranklist_of(th) == pentagon_vertex(3, 2));

  const RunResult analyze = run_cli({"analyze", w_path});
  REQUIRE(analyze.code == cli::exit_ok);
  CHECK(has(analyze.out, "d=(4,6,5)  rk W=1"));
  CHECK(has(analyze.out, "d_theta=54"));
  CHECK(has(analyze.out, "rk dmu=16"));
  CHECK(has(analyze.out, "dim=30"));
  CHECK(has(analyze.out, "all checks passed"));
  CHECK(!has(analyze.out, "FAIL"));
}

TEST_CASE("sample is seed-deterministic and honors the seed environment variable") {
  const std::string rl_path =
      scratch().file("s23.json", io::ranklist_to_json(pentagon_vertex(2, 3)));

  const RunResult a = run_cli({"sample", "--ranklist", rl_path, "--seed", "7"});
  const RunResult b = run_cli({"sample", "--ranklist", rl_path, "--seed", "7"});
  const RunResult c = run_cli({"sample", "--ranklist", rl_path, "--seed", "8"});
  REQUIRE(a.code == cli::exit_ok);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(ranklist_of(io::weights_from_json(a.out)) == pentagon_vertex(2, 3));

  ::setenv("FIBERSTRAT_SEED", "7", 1);
  const RunResult via_env = run_cli({"sample", "--ranklist", rl_path});
  ::unsetenv("FIBERSTRAT_SEED");
  CHECK(via_env.code == cli::exit_ok);
  CHECK(via_env.out == a.out);

  // explicit product matrix by CSV: mu(theta) must reproduce it
  Eigen::MatrixXd W = random_matrix_with_rank(5, 4, 1, 3);
  std::ostringstream csv;
  for (Int r = 0; r < 5; ++r) {
    for (Int c2 = 0; c2 < 4; ++c2) csv << (c2 ? "," : "") << W(r, c2);
    csv << "\n";
  }
  const std::string w_csv = scratch().file("w.csv", csv.str());
  const RunResult with_w = run_cli({"sample", "--ranklist", rl_path, "--w", w_csv});
  REQUIRE(with_w.code == cli::exit_ok);
  const WeightVector th = io::weights_from_json(with_w.out);
  CHECK((mu(th) - W).norm() <= 1e-6 * W.norm());  // CSV text loses a few digits

  // a product whose rank disagrees with the list is a domain error
  Eigen::MatrixXd W2 = random_matrix_with_rank(5, 4, 2, 4);
  std::ostringstream csv2;
  for (Int r = 0; r < 5; ++r) {
    for (Int c2 = 0; c2 < 4; ++c2) csv2 << (c2 ? "," : "") << W2(r, c2);
    csv2 << "\n";
  }
  const std::string w2_csv = scratch().file("w2.csv", csv2.str());
  CHECK(run_cli({"sample", "--ranklist", rl_path, "--w", w2_csv}).code ==
        cli::exit_domain_error);
}

TEST_CASE("verify passes at a sampled point and fails on a rank-ambiguous one") {
  const std::string rl_path =
      scratch().file("s32c.json", io::ranklist_to_json(pentagon_vertex(3, 2)));
  const std::string pt_path = scratch().path("pt.json");
  REQUIRE(run_cli({"sample", "--ranklist", rl_path, "--seed", "7", "--out", pt_path}).code ==
          cli::exit_ok);

  const RunResult ok = run_cli({"verify", pt_path});
  REQUIRE(ok.code == cli::exit_ok);
  CHECK(has(ok.out, "verification OK"));
  CHECK(has(ok.out, "all checks passed"));
  CHECK(!has(ok.out, "FAIL"));

  // W_2 has a 1e-7 singular value; a 1e-5 rank cutoff calls it zero, and the
  // claimed annihilation then misses the 1e-8 residual gate
  WeightVector th = zero_weights(make_shape({2, 2, 2}));
  th.Wmat(1) = Eigen::MatrixXd::Identity(2, 2);
  th.Wmat(2) = Eigen::MatrixXd::Identity(2, 2);
  th.Wmat(2)(1, 1) = 1e-7;
  const std::string knife = scratch().file("knife.json", io::weights_to_json(th));
  const RunResult bad = run_cli({"verify", knife, "--rank-tol", "1e-5"});
  CHECK(bad.code == cli::exit_verification);
  CHECK(has(bad.out, "FAIL"));
  CHECK(has(bad.out, "verification FAILED"));
}

TEST_CASE("spaces emits bases with the ledger dimensions") {
  const std::string rl_path =
      scratch().file("s32d.json", io::ranklist_to_json(pentagon_vertex(3, 2)));
  const std::string pt_path = scratch().path("pt2.json");
  REQUIRE(run_cli({"sample", "--ranklist", rl_path, "--seed", "5", "--out", pt_path}).code ==
          cli::exit_ok);

  // one "[" per emitted column after the "vectors" key, plus the outer array
  const auto dim_of = [&](const std::string& what) -> Int {
    const RunResult r = run_cli({"spaces", pt_path, "--emit", what});
    REQUIRE(r.code == cli::exit_ok);
    REQUIRE(has(r.out, "\"ambient\": 54"));
    const std::size_t start = r.out.find("\"vectors\"");
    REQUIRE(start != std::string::npos);
    Int brackets = 0;
    for (std::size_t p = r.out.find('[', start); p != std::string::npos;
         p = r.out.find('[', p + 1))
      ++brackets;
    return brackets - 1;
  };

  CHECK(dim_of("tangent") == 30);
  CHECK(dim_of("normal") == 24);
  CHECK(dim_of("nulldmu") == 38);
  CHECK(dim_of("rowdmu") == 16);

  CHECK(run_cli({"spaces", pt_path, "--emit", "everything"}).code == cli::exit_usage);
  CHECK(run_cli({"spaces", pt_path}).code == cli::exit_usage);
}

TEST_CASE("analyze accepts per-layer CSV matrices") {
  // W_1 = [[1],[0]], W_2 = [[1,0]]: the rank-1 bottleneck
  const std::string w1 = scratch().file("w1.csv", "1\n0\n");
  const std::string w2 = scratch().file("w2.csv", "1,0\n");
  const RunResult r = run_cli({"analyze", "--w1", w1, "--w2", w2});
  REQUIRE(r.code == cli::exit_ok);
  CHECK(has(r.out, "d=(1,2,1)"));
  CHECK(has(r.out, "all checks passed"));

  // --w2 alone leaves a gap in the layer list
  CHECK(run_cli({"analyze", "--w2", w2}).code == cli::exit_usage);
  // both input styles at once are ambiguous
  const std::string both = scratch().file(
      "both.json", io::weights_to_json(canonical_weight_vector(pentagon_vertex(1, 1))));
  CHECK(run_cli({"analyze", both, "--w1", w1}).code == cli::exit_usage);
  // chained sizes must agree: W_2 expects 2 columns
  const std::string w2bad = scratch().file("w2bad.csv", "1,0,0\n");
  CHECK(run_cli({"analyze", "--w1", w1, "--w2", w2bad}).code == cli::exit_domain_error);
}

// ---- serialization formats ------------------------------------------------

#include <json.hpp>

using ordered_json = nlohmann::ordered_json;

TEST_CASE("rank-list JSON round trip and strict rejection") {
  const RankList r = pentagon_vertex(3, 2);
  const std::string text = io::ranklist_to_json(r);
  CHECK(io::ranklist_from_json(text) == r);
  CHECK(io::ranklist_to_json(io::ranklist_from_json(text)) == text);  // byte-stable

  // zero off-diagonal ranks are omitted entirely
  const std::string zero = io::ranklist_to_json(minimal_ranklist(testutil::chain_shape(), 0));
  CHECK(has(zero, "\"ranks\": []"));

  ordered_json j = ordered_json::parse(text);

  auto expect_reject = [](ordered_json bad) {
    CHECK_THROWS_AS(io::ranklist_from_json(bad.dump()), std::invalid_argument);
  };

  { ordered_json b = j; b["L"] = 3; expect_reject(b); }                      // L vs d
  { ordered_json b = j; b["surprise"] = 1; expect_reject(b); }               // unknown key
  { ordered_json b = j; b.erase("d"); expect_reject(b); }                    // missing key
  { ordered_json b = j; b["ranks"][0]["r"] = -1; expect_reject(b); }         // negative
  { ordered_json b = j; b["ranks"][0]["k"] = 0; b["ranks"][0]["i"] = 0; expect_reject(b); }
  { ordered_json b = j; b["ranks"].push_back(b["ranks"][0]); expect_reject(b); }  // duplicate
  { ordered_json b = j; b["ranks"][0]["k"] = 7; expect_reject(b); }          // out of range
  { ordered_json b = j; b["ranks"][0]["r"] = 2.5; expect_reject(b); }        // non-integer
  CHECK_THROWS_AS(io::ranklist_from_json("not json"), std::invalid_argument);
}

TEST_CASE("weights JSON round trip is bitwise exact") {
  const WeightVector th =
      sample_on_stratum(random_matrix_with_rank(5, 4, 1, 19), pentagon_vertex(2, 2), 6);
  const std::string text = io::weights_to_json(th);
  const WeightVector back = io::weights_from_json(text);
  CHECK(back.shape == th.shape);
  for (Int jj = 1; jj <= 2; ++jj) CHECK((back.Wmat(jj) - th.Wmat(jj)).norm() == 0.0);
  CHECK(io::weights_to_json(back) == text);

  ordered_json j = ordered_json::parse(text);
  { ordered_json b = j; b["W"][0][0].erase(0); // first row loses a column
    CHECK_THROWS_AS(io::weights_from_json(b.dump()), std::invalid_argument); }
  { ordered_json b = j; b["W"].erase(1);       // a whole layer vanishes
    CHECK_THROWS_AS(io::weights_from_json(b.dump()), std::invalid_argument); }
  { ordered_json b = j; b["W"][1][0][0] = "x";
    CHECK_THROWS_AS(io::weights_from_json(b.dump()), std::invalid_argument); }
  { ordered_json b = j; b["note"] = "hi";
    CHECK_THROWS_AS(io::weights_from_json(b.dump()), std::invalid_argument); }
}

TEST_CASE("dag JSON round trip re-checks everything") {
  const StratumDag dag = build_dag(make_shape({2, 1, 1}), 0);
  const std::string text = io::dag_to_json(dag);
  CHECK(io::dag_from_json(text) == dag);
  CHECK(io::dag_to_json(io::dag_from_json(text)) == text);

  ordered_json j = ordered_json::parse(text);
  auto expect_reject = [](ordered_json bad) {
    CHECK_THROWS_AS(io::dag_from_json(bad.dump()), std::invalid_argument);
  };
  { ordered_json b = j; b["vertices"][0]["dim"] =
        b["vertices"][0]["dim"].get<int>() + 1; expect_reject(b); }          // wrong ledger
  { ordered_json b = j; b["vertices"][0]["id"] = 5; expect_reject(b); }      // ids not dense
  { ordered_json b = j; std::swap(b["vertices"][0], b["vertices"][1]);
    b["vertices"][0]["id"] = 0; b["vertices"][1]["id"] = 1;
    expect_reject(b); }                                                      // not sorted
  { ordered_json b = j; b["edges"][0]["label"][0] = 9; expect_reject(b); }   // illegal move
  { ordered_json b = j; b["W_rank"] = 1; expect_reject(b); }                 // wrong fiber
  { ordered_json b = j; b["bonus"] = true; expect_reject(b); }               // unknown key
  { ordered_json b = j; b.erase("edges"); expect_reject(b); }                // missing key
}

TEST_CASE("vertex labels list off-diagonal ranks, nearest subsequences first") {
  CHECK(io::vertex_label(pentagon_vertex(3, 2)) == "S3,2,1");
  CHECK(io::vertex_label(pentagon_vertex(1, 4)) == "S1,4,1");
  CHECK(io::vertex_label(testutil::chain_vertex(0, 0, 1, 0, 0, 0)) == "S0,0,1,0,0,0");
  CHECK(io::vertex_label(testutil::chain_vertex(1, 1, 0, 0, 1, 0)) == "S1,1,0,1,0,0");
}

TEST_CASE("CSV matrices") {
  const Eigen::MatrixXd m = io::csv_to_matrix("1,2\n-3.5,4e2\n");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 0) == -3.5);
  CHECK(m(1, 1) == 400.0);

  CHECK(io::csv_to_matrix("7\n").rows() == 1);
  CHECK_THROWS_AS(io::csv_to_matrix("1,2\n3\n"), std::invalid_argument);   // ragged
  CHECK_THROWS_AS(io::csv_to_matrix("1,x\n"), std::invalid_argument);      // not a number
  CHECK_THROWS_AS(io::csv_to_matrix("1,nan\n"), std::invalid_argument);    // not finite
  CHECK_THROWS_AS(io::csv_to_matrix(""), std::invalid_argument);           // empty
  CHECK_THROWS_AS(io::csv_to_matrix("1 2\n"), std::invalid_argument);      // wrong separator
}

TEST_CASE("move-plan JSON carries labels, kinds, and resulting rank lists") {
  const auto chain = find_all_moves(testutil::chain_vertex(0, 0, 0, 0, 0, 0),
                                    testutil::chain_vertex(0, 1, 1, 1, 0, 0));
  const std::string text = io::moves_to_json(chain);
  const ordered_json j = ordered_json::parse(text);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == chain.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    CHECK(j[t]["l"].is_number_integer());
    CHECK((j[t]["kind"] == "connecting" || j[t]["kind"] == "swapping"));
    CHECK(j[t]["result_ranks"].is_array());
  }
  // the last entry's resulting ranks are the goal's off-diagonal triples
  const ordered_json goal =
      ordered_json::parse(io::ranklist_to_json(testutil::chain_vertex(0, 1, 1, 1, 0, 0)));
  CHECK(j.back()["result_ranks"] == goal["ranks"]);
}

TEST_CASE("file helpers") {
  const std::string p = scratch().path("roundtrip.txt");
  io::write_file(p, "alpha\nbeta\n");
  CHECK(io::read_file(p) == "alpha\nbeta\n");
  CHECK_THROWS_AS(io::read_file(scratch().path("missing.txt")), std::runtime_error);
  CHECK_THROWS_AS(io::write_file((scratch().dir / "no" / "such" / "dir.txt").string(), "x"),
                  std::runtime_error);
}
