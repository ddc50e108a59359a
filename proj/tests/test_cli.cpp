#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dcmpr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dcmpr::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return dcmpr::io::read_text_file(p.string()); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dcmpr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateIsByteIdenticalOnRerun) {
  const std::vector<std::string> base{"--seed", "7", "generate", "--n", "1000", "--alpha", "2", "--beta", "2.5", "--lambda1", "1"};
  auto a = base;
  a.insert(a.end(), {"--out", path("a")});
  auto b = base;
  b.insert(b.end(), {"--out", path("a2")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(path("a.edges.csv")), slurp(path("a2.edges.csv")));
  EXPECT_EQ(slurp(path("a.bidegree.csv")), slurp(path("a2.bidegree.csv")));
  const json side = json::parse(slurp(path("a.bidegree.json")));
  EXPECT_EQ(side["seed"], 7);
  EXPECT_EQ(side["n"], 1000);
  EXPECT_EQ(side["config"]["params"]["alpha"], 2.0);
}

TEST_F(CliTest, GeneratedEdgesConserveDegrees) {
  ASSERT_EQ(run({"--seed", "3", "generate", "--n", "500", "--out", path("g")}).code, 0);
  std::ifstream bi(path("g.bidegree.csv")), ed(path("g.edges.csv"));
  const auto seq = dcmpr::io::read_bidegree_csv(bi);
  const auto graph = dcmpr::io::read_edges_csv(ed, seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(graph.in_degree(i), seq.in_degree(i));
    EXPECT_EQ(graph.out_degree(i), seq.out_degree(i));
  }
}

TEST_F(CliTest, GenerateRejectsZeroNodes) {
  const Result r = run({"generate", "--n", "0", "--out", path("z")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("InvalidParameter"), std::string::npos);
  EXPECT_NE(r.err.find("n:"), std::string::npos);
}

TEST_F(CliTest, ResampleLimitIsExitThree) {
  const Result r = run({"generate", "--n", "10000", "--lambda2", "100", "--max-resamples", "1", "--out", path("x")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("ResampleLimitExceeded"), std::string::npos);
}

TEST_F(CliTest, MissingSeedIsDrawnAndRecorded) {
  ASSERT_EQ(run({"generate", "--n", "20", "--out", path("s")}).code, 0);
  const json side = json::parse(slurp(path("s.edges.json")));
  EXPECT_TRUE(side["seed"].is_number_unsigned());
  EXPECT_EQ(side["seed"], side["config"]["seed"]);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  {
    std::ofstream cfg(path("run.cfg"));
    cfg << "# generation settings\nn = 50\nalpha = 3\nout = " << path("c") << "\nseed = 11\n";
  }
  ASSERT_EQ(run({"generate", "--config", path("run.cfg"), "--alpha", "2.2"}).code, 0);
  const json side = json::parse(slurp(path("c.bidegree.json")));
  EXPECT_EQ(side["n"], 50);
  EXPECT_EQ(side["seed"], 11);
  EXPECT_EQ(side["config"]["params"]["alpha"], 2.2);
}

TEST_F(CliTest, UnknownConfigKey) {
  {
    std::ofstream cfg(path("bad.cfg"));
    cfg << "n = 5\nbogus = 1\n";
  }
  EXPECT_EQ(run({"generate", "--config", path("bad.cfg"), "--out", path("b")}).code, 2);
}

TEST_F(CliTest, PageRankTwoCycle) {
  {
    std::ofstream e(path("cycle.csv"));
    e << "src,dst,multiplicity\n0,1,1\n1,0,1\n";
  }
  ASSERT_EQ(run({"pagerank", "--edges", path("cycle.csv"), "--k", "5", "--out", path("r")}).code, 0);
  EXPECT_EQ(slurp(path("r.rank.csv")), "node,value\n0,1\n1,1\n");
  const json side = json::parse(slurp(path("r.rank.json")));
  EXPECT_EQ(side["k_or_converged"], 5);
  EXPECT_EQ(side["iterations_used"], 5);
}

TEST_F(CliTest, PageRankExactAgreesWithTightIteration) {
  ASSERT_EQ(run({"--seed", "4", "generate", "--n", "300", "--out", path("g")}).code, 0);
  ASSERT_EQ(run({"pagerank", "--edges", path("g.edges.csv"), "--exact", "--out", path("ex")}).code, 0);
  ASSERT_EQ(run({"pagerank", "--edges", path("g.edges.csv"), "--eps0", "1e-10", "--out", path("it")}).code, 0);
  std::ifstream a(path("ex.rank.csv")), b(path("it.rank.csv"));
  const auto x = dcmpr::io::read_rank_csv(a);
  const auto y = dcmpr::io::read_rank_csv(b);
  ASSERT_EQ(x.size(), 300u);  // n taken from the sidecar, isolated nodes included
  ASSERT_EQ(y.size(), 300u);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-8);
}

TEST_F(CliTest, PageRankMissingFile) {
  const Result r = run({"pagerank", "--edges", path("missing.csv"), "--out", path("r")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("IoError"), std::string::npos);
}

TEST_F(CliTest, PageRankModesAreExclusive) {
  EXPECT_EQ(run({"pagerank", "--edges", path("x.csv"), "--k", "2", "--exact", "--out", path("r")}).code, 2);
}

TEST_F(CliTest, CoupleWritesTreeAndStats) {
  ASSERT_EQ(run({"--seed", "2", "generate", "--n", "400", "--out", path("g")}).code, 0);
  ASSERT_EQ(run({"--seed", "9", "couple", "--bidegree", path("g.bidegree.csv"), "--k", "3", "--out", path("cp")}).code, 0);
  const json stats = json::parse(slurp(path("cp.coupling.json")));
  EXPECT_EQ(stats["k"], 3);
  EXPECT_EQ(stats["Z"].size(), 4u);
  EXPECT_TRUE(stats["tau"].is_number_integer() || stats["tau"] == "gt_k");
  const json tree = json::parse(slurp(path("cp.tree.json")));
  EXPECT_EQ(tree["depth"], 4);
  EXPECT_EQ(tree["nodes"][0]["source"], stats["root"]);
}

TEST_F(CliTest, ExperimentTable1EmitsFourRows) {
  const Result r = run({"--seed", "1", "experiment", "table1", "--replications", "3", "--out", path("t1")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("t1.csv")));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 5);
  const json side = json::parse(slurp(path("t1.json")));
  EXPECT_EQ(side["config"]["sizes"], json({10, 100, 1000, 10000}));
  EXPECT_EQ(side["config"]["c"], 0.5);
  EXPECT_EQ(side["config"]["rule"]["h"], 1.0);
}

TEST_F(CliTest, ExperimentSingleReplicationWarns) {
  const Result r = run({"--seed", "1", "experiment", "table1", "--replications", "1", "--sizes", "10", "100", "--out", path("w")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, Table3SidecarEchoesCaption) {
  const Result r = run({"--seed", "1", "experiment", "table3", "--replications", "2", "--sizes", "100", "--out", path("t3")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json side = json::parse(slurp(path("t3.json")));
  EXPECT_EQ(side["config"]["c_sweep"], json({0.1, 0.3, 0.5, 0.7, 0.9}));
  EXPECT_EQ(side["config"]["rule"]["kind"], "log_scaled");
  const auto table3 = dcmpr::presets::table3();
  EXPECT_EQ(table3.rule.resolve(10000), 9);
}

TEST_F(CliTest, UnknownPresetAndBadFlag) {
  EXPECT_EQ(run({"experiment", "table9"}).code, 2);
  EXPECT_EQ(run({"generate", "--bogus"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("generate"), std::string::npos);
}
