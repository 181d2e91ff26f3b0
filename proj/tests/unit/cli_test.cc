#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "metric_oracle.h"
#include "qreform/cli.h"

namespace fs = std::filesystem;
using namespace qreform;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qreform");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string data(const char* name) { return (fs::path(QREFORM_TEST_DATA_DIR) / name).string(); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qreform_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string tmp(const char* name) const { return (dir_ / name).string(); }
  void write(const char* name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(cli({}).code, kUsage);
  const Outcome r = cli({"frobnicate"});
  EXPECT_EQ(r.code, kUsage);
  EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
}

TEST_F(CliTest, MissingRequiredFlagIsNamed) {
  const Outcome r = cli({"evaluate", "--run", data("eval_fixture.run")});
  EXPECT_EQ(r.code, kUsage);
  EXPECT_NE(r.err.find("--qrels"), std::string::npos) << r.err;
}

TEST_F(CliTest, VersionAndHelp) {
  const Outcome v = cli({"--version"});
  EXPECT_EQ(v.code, kOk);
  EXPECT_NE(v.out.find(kToolVersion), std::string::npos);
  const Outcome h = cli({"--help"});
  EXPECT_EQ(h.code, kOk);
  EXPECT_NE(h.out.find("evaluate-reform"), std::string::npos);
}

TEST_F(CliTest, EvaluateMatchesGoldenReport) {
  const Outcome r = cli({"evaluate", "--run", data("eval_fixture.run"), "--qrels", data("eval_fixture.qrels")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out, slurp(data("eval_fixture.golden.tsv")));
}

TEST_F(CliTest, EvaluateAgreesWithOracleAtOtherCutoff) {
  const Outcome r = cli({"evaluate", "--run", data("eval_fixture.run"), "--qrels", data("eval_fixture.qrels"),
                     "--k", "5", "--gmax", "4"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::map<std::string, oracle::Judged> qrels;
  {
    std::ifstream in(data("eval_fixture.qrels"));
    std::string q, zero, d;
    int g;
    while (in >> q >> zero >> d >> g) qrels[q][d] = g;
  }
  std::map<std::string, std::vector<std::string>> run;
  {
    std::ifstream in(data("eval_fixture.run"));
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream s(line);
      std::string q, q0, d;
      s >> q >> q0 >> d;
      run[q].push_back(d);
    }
  }
  std::istringstream report(r.out);
  std::string line;
  std::getline(report, line);
  EXPECT_EQ(line, "qid\terr@5\tndcg@5\tmap\tp@5");
  int rows = 0;
  while (std::getline(report, line)) {
    std::istringstream s(line);
    std::string qid;
    double e, n, ap, p;
    s >> qid >> e >> n >> ap >> p;
    if (qid == "all") continue;
    ++rows;
    const auto& docs = run[qid];
    EXPECT_NEAR(e, oracle::err(docs, qrels[qid], 5, 4), 1e-6) << qid;
    EXPECT_NEAR(n, oracle::ndcg(docs, qrels[qid], 5, false), 1e-6) << qid;
    EXPECT_NEAR(ap, oracle::ap(docs, qrels[qid]), 1e-6) << qid;
    EXPECT_NEAR(p, oracle::precision(docs, qrels[qid], 5), 1e-6) << qid;
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(CliTest, EvaluateWritesReportAndManifest) {
  const std::string out = tmp("report.tsv");
  const Outcome r = cli({"evaluate", "--run", data("eval_fixture.run"), "--qrels", data("eval_fixture.qrels"),
                     "--out", out});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(out), slurp(data("eval_fixture.golden.tsv")));
  const auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "evaluate");
  EXPECT_EQ(manifest["tool_version"], kToolVersion);
  EXPECT_EQ(manifest["flags"]["k"], "20");
  EXPECT_EQ(manifest["inputs"].size(), 2u);
  EXPECT_EQ(manifest["outputs"][0], out);
  EXPECT_GE(manifest["duration_seconds"].get<double>(), 0.0);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  write("eval.cfg", "run=" + data("eval_fixture.run") + "\nqrels=" + data("eval_fixture.qrels") + "\nk=5\n");
  const Outcome from_file = cli({"evaluate", "--config", tmp("eval.cfg")});
  ASSERT_EQ(from_file.code, kOk) << from_file.err;
  EXPECT_EQ(from_file.out.substr(0, from_file.out.find('\n')), "qid\terr@5\tndcg@5\tmap\tp@5");
  const Outcome flag_wins = cli({"evaluate", "--config", tmp("eval.cfg"), "--k", "10"});
  ASSERT_EQ(flag_wins.code, kOk) << flag_wins.err;
  EXPECT_EQ(flag_wins.out.substr(0, flag_wins.out.find('\n')), "qid\terr@10\tndcg@10\tmap\tp@10");
}

TEST_F(CliTest, MissingInputIsDataFailure) {
  const Outcome r = cli({"evaluate", "--run", tmp("nope.run"), "--qrels", data("eval_fixture.qrels")});
  EXPECT_EQ(r.code, kDataFailure);
  EXPECT_NE(r.err.find("nope.run"), std::string::npos);
}

TEST_F(CliTest, MalformedQrelsReportsLine) {
  write("bad.qrels", "101 0 D01 1\n101 0 D02\n");
  const Outcome r = cli({"evaluate", "--run", data("eval_fixture.run"), "--qrels", tmp("bad.qrels")});
  EXPECT_EQ(r.code, kDataFailure);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, IndexThenSearchProducesTrecRun) {
  write("corpus.tsv", "d1\tjaguar car dealer\nd2\tjaguar cat habitat\nd3\tcar insurance quote\n");
  write("topics.tsv", "q1\tjaguar car\nq2\tinsurance\n");
  ASSERT_EQ(cli({"index", "--corpus", tmp("corpus.tsv"), "--out", tmp("index.txt")}).code, kOk);
  EXPECT_TRUE(fs::exists(tmp("index.txt.manifest.json")));
  const Outcome r = cli({"search", "--index", tmp("index.txt"), "--queries", tmp("topics.tsv"), "--runtag", "t"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> q1_docs;
  int q2_rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream s(line);
    std::string qid, q0, doc, tag;
    int rank;
    double score;
    ASSERT_TRUE(s >> qid >> q0 >> doc >> rank >> score >> tag) << line;
    EXPECT_EQ(q0, "Q0");
    EXPECT_EQ(tag, "t");
    if (qid == "q1") {
      q1_docs.push_back(doc);
      EXPECT_EQ(rank, static_cast<int>(q1_docs.size()));
    } else {
      ++q2_rows;
      EXPECT_EQ(doc, "d3");
    }
  }
  ASSERT_EQ(q1_docs.size(), 3u);
  EXPECT_EQ(q1_docs.front(), "d1");
  EXPECT_EQ(q2_rows, 1);
}

TEST_F(CliTest, TrainGenerateRoundTrip) {
  std::string pairs;
  for (const char* s : {"auto insurance\tcar insurance", "cheap flights\tflights", "red boots\tboots"})
    pairs += std::string(s) + "\n";
  write("pairs.tsv", pairs);
  const Outcome t = cli({"train", "--pairs", tmp("pairs.tsv"), "--valid", tmp("pairs.tsv"), "--out", tmp("m.ckpt"),
                     "--steps", "4", "--batch", "2", "--valid-interval", "2", "--embedding-dim", "4",
                     "--filters", "2", "--encoder-hidden", "4", "--decoder-embedding-dim", "4",
                     "--decoder-hidden", "6", "--attention-dim", "4"});
  ASSERT_EQ(t.code, kOk) << t.err;
  EXPECT_TRUE(fs::exists(tmp("m.ckpt")));
  EXPECT_TRUE(fs::exists(tmp("m.ckpt.curve.tsv")));
  const auto manifest = nlohmann::json::parse(slurp(tmp("m.ckpt.manifest.json")));
  EXPECT_EQ(manifest["seed"], 1);
  EXPECT_EQ(manifest["flags"]["steps"], "4");

  const Outcome g = cli({"generate", "--ckpt", tmp("m.ckpt"), "--query", "auto insurance", "--beam", "4", "--m", "3",
                     "--max-len", "8"});
  ASSERT_EQ(g.code, kOk) << g.err;
  EXPECT_FALSE(g.out.empty());

  const Outcome bad = cli({"train", "--pairs", tmp("pairs.tsv"), "--valid", tmp("pairs.tsv"), "--out", tmp("x.ckpt"),
                       "--lr", "-1"});
  EXPECT_EQ(bad.code, kUsage);
}

TEST_F(CliTest, DemoSmoke) {
  const std::string out = tmp("demo");
  const Outcome r = cli({"demo", "--out", out, "--seed", "7", "--steps", "4", "--batch", "8", "--m", "3", "--beam", "3"});
  ASSERT_EQ(r.code, kOk) << r.err;
  for (const char* f : {"anchors.tsv", "pairs.train.tsv", "pairs.valid.tsv", "model.ckpt", "index.txt",
                        "baseline.run", "baseline.report.tsv", "reform.report.tsv", "reform.curve.tsv",
                        "manifest.json"})
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "demo");
  EXPECT_EQ(manifest["seed"], 7);
  // Curve rows are m = 1..3 and never decrease.
  std::istringstream curve(slurp(fs::path(out) / "reform.curve.tsv"));
  std::string line;
  std::getline(curve, line);
  double previous = -1.0;
  int rows = 0;
  while (std::getline(curve, line)) {
    const double v = std::stod(line.substr(line.find('\t') + 1));
    EXPECT_GE(v, previous - 1e-12);
    previous = v;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}
