#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "metric_oracle.h"
#include "qreform/errors.h"
#include "qreform/ir_eval.h"

using namespace qreform;

namespace {

Ranking ranking_of(std::initializer_list<std::string> docs) {
  Ranking r;
  double s = 0.0;
  for (const auto& d : docs) r.push_back({d, s -= 1.0});
  return r;
}

std::vector<std::string> ids(const Ranking& r) {
  std::vector<std::string> out;
  for (const auto& s : r) out.push_back(s.doc_id);
  return out;
}

struct Fixture {
  Ranking ranking;
  Grades grades;
  int g_max;
};

Fixture random_fixture(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_docs(0, 40), grade(-2, 4), coin(0, 2);
  Fixture f;
  const int n = n_docs(rng);
  std::vector<std::string> pool;
  for (int i = 0; i < 60; ++i) pool.push_back("d" + std::to_string(i));
  std::shuffle(pool.begin(), pool.end(), rng);
  for (int i = 0; i < n; ++i) f.ranking.push_back({pool[static_cast<std::size_t>(i)], -i * 0.5});
  // Judge a random subset of the pool, including some never retrieved.
  for (const auto& d : pool)
    if (coin(rng) != 0) f.grades[d] = grade(rng);
  f.g_max = std::max(1, std::uniform_int_distribution<int>(1, 4)(rng));
  return f;
}

}  // namespace

TEST(Err, Examples) {
  EXPECT_EQ(err_at_k(ranking_of({"a", "b"}), {{"a", 0}, {"b", 0}}, 20, 1), 0.0);
  EXPECT_DOUBLE_EQ(err_at_k(ranking_of({"a"}), {{"a", 1}}, 20, 1), 0.5);
  EXPECT_DOUBLE_EQ(err_at_k(ranking_of({"x", "y", "z"}), {{"x", 3}, {"y", 0}, {"z", 2}}, 20, 4),
                   0.47265625);
  EXPECT_DOUBLE_EQ(oracle::err({"x", "y", "z"}, {{"x", 3}, {"y", 0}, {"z", 2}}, 20, 4), 0.47265625);
}

TEST(Err, GradesClampToRange) {
  // Negative grades count as 0, grades above g_max as g_max.
  EXPECT_EQ(err_at_k(ranking_of({"a"}), {{"a", -2}}, 20, 2), 0.0);
  EXPECT_DOUBLE_EQ(err_at_k(ranking_of({"a"}), {{"a", 5}}, 20, 2), 3.0 / 4.0);
  EXPECT_EQ(err_at_k(ranking_of({"a", "b"}), {{"b", 1}}, 1, 1), 0.0);
}

TEST(Ndcg, Examples) {
  const Grades g = {{"a", 3}, {"b", 2}, {"c", 0}, {"d", 1}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranking_of({"a", "b", "d", "c"}), g, 20), 1.0);
  EXPECT_EQ(ndcg_at_k(ranking_of({"a", "b"}), {{"a", 0}, {"b", -1}}, 20), 0.0);
  EXPECT_LT(ndcg_at_k(ranking_of({"c", "d", "b", "a"}), g, 20), 1.0);
}

TEST(Ndcg, FiveDocPermutationOracle) {
  const Grades g = {{"p", 2}, {"q", 0}, {"r", 3}, {"s", 1}, {"t", 2}};
  std::vector<std::string> docs = {"p", "q", "r", "s", "t"};
  std::sort(docs.begin(), docs.end());
  do {
    Ranking r;
    for (std::size_t i = 0; i < docs.size(); ++i) r.push_back({docs[i], -static_cast<double>(i)});
    for (int k : {1, 3, 5, 20}) {
      EXPECT_NEAR(ndcg_at_k(r, g, k), oracle::ndcg(docs, g, k, true), 1e-12);
      EXPECT_NEAR(oracle::idcg_by_permutation(g, k), oracle::idcg_by_sort(g, k), 1e-12);
    }
  } while (std::next_permutation(docs.begin(), docs.end()));
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(average_precision(ranking_of({"a", "b", "c"}), {{"a", 1}, {"b", 2}}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(ranking_of({"w", "x", "y", "z"}), {{"z", 1}}), 0.25);
  EXPECT_EQ(average_precision(ranking_of({"a"}), {{"a", 0}}), 0.0);
  // Relevant documents never retrieved still count in the denominator.
  EXPECT_DOUBLE_EQ(average_precision(ranking_of({"a"}), {{"a", 1}, {"b", 1}}), 0.5);
}

TEST(Precision, Examples) {
  Ranking r;
  Grades g;
  for (int i = 0; i < 20; ++i) {
    r.push_back({"d" + std::to_string(i), -i * 1.0});
    if (i % 3 == 0) g["d" + std::to_string(i)] = 1;
  }
  EXPECT_DOUBLE_EQ(precision_at_k(r, g, 20), 0.35);
  // Short rankings count missing positions as non-relevant.
  EXPECT_DOUBLE_EQ(precision_at_k(ranking_of({"d0"}), g, 20), 0.05);
}

TEST(Metrics, RandomFixturesMatchOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Fixture f = random_fixture(rng);
    const auto docs = ids(f.ranking);
    for (int k : {1, 5, 20}) {
      EXPECT_NEAR(err_at_k(f.ranking, f.grades, k, f.g_max), oracle::err(docs, f.grades, k, f.g_max), 1e-9);
      EXPECT_NEAR(ndcg_at_k(f.ranking, f.grades, k), oracle::ndcg(docs, f.grades, k, false), 1e-9);
      EXPECT_NEAR(precision_at_k(f.ranking, f.grades, k), oracle::precision(docs, f.grades, k), 1e-9);
    }
    EXPECT_NEAR(average_precision(f.ranking, f.grades), oracle::ap(docs, f.grades), 1e-9);
  }
}

TEST(Metrics, BoundedAndImprovedBySwaps) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Fixture f = random_fixture(rng);
    const double values[] = {err_at_k(f.ranking, f.grades, 20, f.g_max), ndcg_at_k(f.ranking, f.grades, 20),
                             average_precision(f.ranking, f.grades), precision_at_k(f.ranking, f.grades, 20)};
    for (double v : values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
    // Swap the first adjacent pair whose later document has a higher gain.
    for (std::size_t i = 0; i + 1 < f.ranking.size(); ++i) {
      auto gain = [&](std::size_t r) {
        return std::clamp(oracle::grade_of(f.grades, f.ranking[r].doc_id), 0, f.g_max);
      };
      if (gain(i + 1) > gain(i)) {
        Ranking swapped = f.ranking;
        std::swap(swapped[i].doc_id, swapped[i + 1].doc_id);
        EXPECT_GE(err_at_k(swapped, f.grades, 20, f.g_max), err_at_k(f.ranking, f.grades, 20, f.g_max));
        EXPECT_GE(ndcg_at_k(swapped, f.grades, 20) + 1e-15, ndcg_at_k(f.ranking, f.grades, 20));
        break;
      }
    }
  }
}

TEST(ParseQrels, Examples) {
  std::istringstream in("1 0 d1 2\n1 0 d2 -2\n\n2 0 d1 0\n");
  const Qrels q = parse_qrels(in);
  EXPECT_EQ(q.grade("1", "d1"), 2);
  EXPECT_EQ(q.grade("1", "d2"), -2);
  EXPECT_EQ(q.grade("1", "nope"), 0);
  EXPECT_EQ(q.query_ids(), (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(q.max_grade(), 2);
  EXPECT_EQ(q.size(), 3u);
  EXPECT_TRUE(q.judgments("missing").empty());
}

TEST(ParseQrels, MalformedLinesNameTheLine) {
  for (const char* text : {"1 0 d1\n", "1 0 d1 x\n", "1 0 d1 2 extra\n", "1 0 d1 1\n1 0 d1 2\n"}) {
    std::istringstream in(text);
    try {
      parse_qrels(in);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
    }
  }
}

TEST(ParseRun, ResortsAndDropsDuplicates) {
  std::istringstream in(
      "q1 Q0 b 1 0.5 t\n"
      "q1 Q0 a 2 0.9 t\n"
      "q1 Q0 c 3 0.9 t\n"
      "q1 Q0 a 4 0.1 t\n"
      "q2 Q0 z 1 -3.0 t\n");
  const ParsedRun run = parse_run(in);
  ASSERT_EQ(run.rankings.size(), 2u);
  EXPECT_EQ(ids(run.rankings.at("q1")), (std::vector<std::string>{"a", "c", "b"}));
  EXPECT_EQ(run.rankings.at("q1")[0].score, 0.9);
  EXPECT_EQ(run.warnings.size(), 1u);
}

TEST(ParseRun, MalformedLinesAreFatal) {
  for (const char* text : {"q1 Q0 a 1 0.5\n", "q1 Q0 a one 0.5 t\n", "q1 Q0 a 1 nan t\n", "q1 Q0 a 1 zz t\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_run(in), DataError) << text;
  }
}

TEST(ParseRun, WriteParseRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> score(-20.0, 0.0);
  std::map<std::string, Ranking> original;
  for (int q = 0; q < 4; ++q) {
    Ranking r;
    for (int i = 0; i < 25; ++i)
      // Six-decimal scores survive the fixed-point format exactly.
      r.push_back({"doc" + std::to_string(q * 100 + i), std::round(score(rng) * 1e6) / 1e6});
    std::stable_sort(r.begin(), r.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
    original["q" + std::to_string(q)] = r;
  }
  std::stringstream buf;
  int lines = 0;
  for (const auto& [qid, r] : original) {
    write_run(buf, qid, r, "rt");
    lines += static_cast<int>(r.size());
  }
  EXPECT_EQ(lines, 100);
  const ParsedRun back = parse_run(buf);
  ASSERT_EQ(back.rankings.size(), original.size());
  for (const auto& [qid, r] : original) {
    const Ranking& got = back.rankings.at(qid);
    ASSERT_EQ(got.size(), r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_EQ(got[i].doc_id, r[i].doc_id);
      EXPECT_NEAR(got[i].score, r[i].score, 1e-9);
    }
  }
}

TEST(EvaluateRun, MissingQueriesScoreZeroAndMeanAverages) {
  Qrels q;
  q.set("1", "a", 2);
  q.set("1", "b", 0);
  q.set("2", "c", 1);
  std::map<std::string, Ranking> run = {{"1", ranking_of({"a", "b"})}, {"9", ranking_of({"c"})}};
  const MetricReport r = evaluate_run(run, q);
  EXPECT_EQ(r.g_max, 2);
  ASSERT_EQ(r.queries.size(), 2u);
  EXPECT_EQ(r.queries[1].qid, "2");
  EXPECT_EQ(r.queries[1].err, 0.0);
  EXPECT_DOUBLE_EQ(r.queries[0].err, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.mean.err, 3.0 / 8.0);
  EXPECT_EQ(r.mean.qid, "all");
  EXPECT_EQ(evaluate_run(run, q, 20, 4).g_max, 4);
}

TEST(BestOfM, CurveProperties) {
  const InvertedIndex idx = InvertedIndex::build({{"d1", "cheap car insurance quotes"},
                                                  {"d2", "auto repair shop"},
                                                  {"d3", "car insurance compare"},
                                                  {"d4", "insurance for pets"}});
  Qrels q;
  q.set("7", "d1", 2);
  q.set("7", "d3", 1);
  q.set("7", "d2", 0);
  const std::vector<std::string> cands = {"auto insurance", "pets", "auto insurance", "car insurance",
                                          "zzz unknown"};
  const BestOfMResult r = best_of_m("7", "auto insurance", cands, idx, q, 4, 2);
  EXPECT_EQ(r.candidates, (std::vector<std::string>{"auto insurance", "pets", "car insurance", "zzz unknown"}));
  ASSERT_EQ(r.best_curve.size(), 4u);
  for (std::size_t i = 1; i < r.best_curve.size(); ++i) EXPECT_GE(r.best_curve[i], r.best_curve[i - 1]);
  EXPECT_EQ(r.best_curve[0], r.candidate_err[0]);
  EXPECT_EQ(r.candidate_err[3], 0.0);
  // The original is the first candidate, so best-of-m never falls below it.
  EXPECT_EQ(r.candidate_err[0], r.baseline);
  for (double b : r.best_curve) EXPECT_GE(b, r.baseline);
  EXPECT_EQ(r.best_index, 2);
  EXPECT_EQ(r.best_curve.back(), r.candidate_err[2]);

  const BestOfMResult same = best_of_m("7", "car insurance", {"car insurance"}, idx, q, 1, 2);
  EXPECT_EQ(same.best_curve, std::vector<double>{same.baseline});

  EXPECT_THROW(best_of_m("7", "x", cands, idx, q, 5, 2), ContractViolation);
  EXPECT_THROW(best_of_m("7", "x", cands, idx, q, 0, 2), ContractViolation);
}
