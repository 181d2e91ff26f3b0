#include "qreform/ir_eval.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "qreform/errors.h"

namespace qreform {

namespace {

const Grades kNoJudgments;

int gain_grade(const Grades& grades, const std::string& doc_id) {
  auto it = grades.find(doc_id);
  return it == grades.end() ? 0 : std::max(it->second, 0);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string field;
  while (in >> field) out.push_back(field);
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

DataError line_error(const char* kind, int line_no, const std::string& what) {
  return DataError(std::string(kind) + " line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

void Qrels::set(const std::string& qid, const std::string& doc_id, int grade) {
  table_[qid][doc_id] = grade;
}

int Qrels::grade(const std::string& qid, const std::string& doc_id) const {
  auto q = table_.find(qid);
  if (q == table_.end()) return 0;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

const std::map<std::string, int>& Qrels::judgments(const std::string& qid) const {
  auto q = table_.find(qid);
  return q == table_.end() ? kNoJudgments : q->second;
}

std::vector<std::string> Qrels::query_ids() const {
  std::vector<std::string> out;
  for (const auto& [qid, _] : table_) out.push_back(qid);
  return out;
}

int Qrels::max_grade() const {
  int best = 0;
  for (const auto& [_, docs] : table_)
    for (const auto& [__, g] : docs) best = std::max(best, g);
  return best;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [_, docs] : table_) n += docs.size();
  return n;
}

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    int grade = 0;
    if (f.size() != 4) throw line_error("qrels", line_no, "expected 4 fields");
    if (!parse_number(f[3], grade)) throw line_error("qrels", line_no, "grade is not an integer");
    if (qrels.has_query(f[0]) && qrels.judgments(f[0]).count(f[2]))
      throw line_error("qrels", line_no, "duplicate judgment for " + f[0] + "/" + f[2]);
    qrels.set(f[0], f[2], grade);
  }
  return qrels;
}

ParsedRun parse_run(std::istream& in) {
  ParsedRun run;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw line_error("run", line_no, "expected 6 fields");
    int rank = 0;
    double score = 0.0;
    if (!parse_number(f[3], rank)) throw line_error("run", line_no, "rank is not an integer");
    if (!parse_number(f[4], score) || !std::isfinite(score))
      throw line_error("run", line_no, "score is not a finite number");
    if (!seen[f[0]].insert(f[2]).second) {
      run.warnings.push_back("run line " + std::to_string(line_no) + ": duplicate document " +
                             f[2] + " for query " + f[0] + " ignored");
      continue;
    }
    run.rankings[f[0]].push_back(ScoredDoc{f[2], score});
  }
  for (auto& [_, ranking] : run.rankings)
    std::stable_sort(ranking.begin(), ranking.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
  return run;
}

void write_run(std::ostream& out, const std::string& qid, const Ranking& ranking,
               const std::string& runtag) {
  std::ostringstream buf;
  buf << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < ranking.size(); ++i)
    buf << qid << " Q0 " << ranking[i].doc_id << ' ' << (i + 1) << ' ' << ranking[i].score << ' '
        << runtag << '\n';
  out << buf.str();
}

double err_at_k(const Ranking& ranking, const Grades& grades, int k, int g_max) {
  require(k >= 1, "err_at_k: k must be >= 1");
  require(g_max >= 1, "err_at_k: g_max must be >= 1");
  const double denom = std::ldexp(1.0, g_max);
  const std::size_t depth = std::min(ranking.size(), static_cast<std::size_t>(k));
  double err = 0.0;
  double still_looking = 1.0;
  for (std::size_t r = 0; r < depth; ++r) {
    const int g = std::min(gain_grade(grades, ranking[r].doc_id), g_max);
    const double stop = (std::ldexp(1.0, g) - 1.0) / denom;
    err += still_looking * stop / static_cast<double>(r + 1);
    still_looking *= 1.0 - stop;
  }
  return err;
}

double ndcg_at_k(const Ranking& ranking, const Grades& grades, int k) {
  require(k >= 1, "ndcg_at_k: k must be >= 1");
  auto gain = [](int g) { return std::ldexp(1.0, g) - 1.0; };
  const std::size_t depth = std::min(ranking.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r)
    dcg += gain(gain_grade(grades, ranking[r].doc_id)) / std::log2(static_cast<double>(r + 2));
  std::vector<int> ideal;
  for (const auto& [_, g] : grades) ideal.push_back(std::max(g, 0));
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(ideal.size(), static_cast<std::size_t>(k)); ++r)
    idcg += gain(ideal[r]) / std::log2(static_cast<double>(r + 2));
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

double average_precision(const Ranking& ranking, const Grades& grades) {
  long relevant_total = 0;
  for (const auto& [_, g] : grades)
    if (g > 0) ++relevant_total;
  if (relevant_total == 0) return 0.0;
  double sum = 0.0;
  long hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (gain_grade(grades, ranking[r].doc_id) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant_total);
}

double precision_at_k(const Ranking& ranking, const Grades& grades, int k) {
  require(k >= 1, "precision_at_k: k must be >= 1");
  const std::size_t depth = std::min(ranking.size(), static_cast<std::size_t>(k));
  long hits = 0;
  for (std::size_t r = 0; r < depth; ++r)
    if (gain_grade(grades, ranking[r].doc_id) > 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

MetricReport evaluate_run(const std::map<std::string, Ranking>& run, const Qrels& qrels, int k,
                          int g_max) {
  MetricReport report;
  report.k = k;
  report.g_max = g_max > 0 ? g_max : std::max(1, qrels.max_grade());
  const Ranking empty;
  for (const std::string& qid : qrels.query_ids()) {
    auto it = run.find(qid);
    const Ranking& ranking = it == run.end() ? empty : it->second;
    const Grades& grades = qrels.judgments(qid);
    QueryMetrics m;
    m.qid = qid;
    m.err = err_at_k(ranking, grades, k, report.g_max);
    m.ndcg = ndcg_at_k(ranking, grades, k);
    m.ap = average_precision(ranking, grades);
    m.precision = precision_at_k(ranking, grades, k);
    report.queries.push_back(m);
  }
  report.mean.qid = "all";
  if (!report.queries.empty()) {
    const double n = static_cast<double>(report.queries.size());
    for (const auto& q : report.queries) {
      report.mean.err += q.err / n;
      report.mean.ndcg += q.ndcg / n;
      report.mean.ap += q.ap / n;
      report.mean.precision += q.precision / n;
    }
  }
  return report;
}

void write_report(std::ostream& out, const MetricReport& report) {
  std::ostringstream buf;
  buf << "qid\terr@" << report.k << "\tndcg@" << report.k << "\tmap\tp@" << report.k << '\n';
  buf << std::fixed << std::setprecision(6);
  auto row = [&](const QueryMetrics& m) {
    buf << m.qid << '\t' << m.err << '\t' << m.ndcg << '\t' << m.ap << '\t' << m.precision << '\n';
  };
  for (const auto& q : report.queries) row(q);
  row(report.mean);
  out << buf.str();
}

BestOfMResult best_of_m(const std::string& qid, const std::string& original,
                        const std::vector<std::string>& candidates, const InvertedIndex& index,
                        const Qrels& qrels, int max_m, int g_max,
                        const SearchOptions& search_options) {
  BestOfMResult result;
  result.original = original;
  std::set<std::string> seen;
  for (const auto& c : candidates)
    if (seen.insert(c).second) result.candidates.push_back(c);
  require(max_m >= 1 && max_m <= static_cast<int>(result.candidates.size()),
          "best_of_m: need 1 <= M <= number of distinct candidates");
  result.candidates.resize(static_cast<std::size_t>(max_m));

  const Grades& grades = qrels.judgments(qid);
  const int k = 20;
  result.baseline = err_at_k(search(index, original, search_options), grades, k, g_max);
  double best = -1.0;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const double err = err_at_k(search(index, result.candidates[i], search_options), grades, k,
                                g_max);
    result.candidate_err.push_back(err);
    if (err > best) {
      best = err;
      result.best_index = static_cast<int>(i);
    }
    result.best_curve.push_back(best);
  }
  return result;
}

}  // namespace qreform
