#ifndef QREFORM_IR_EVAL_H_
#define QREFORM_IR_EVAL_H_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qreform/retrieval.h"

namespace qreform {

// qid -> doc_id -> grade. Grades are stored as read; gains clamp them to >= 0.
class Qrels {
 public:
  void set(const std::string& qid, const std::string& doc_id, int grade);
  // 0 for unjudged.
  int grade(const std::string& qid, const std::string& doc_id) const;
  const std::map<std::string, int>& judgments(const std::string& qid) const;
  bool has_query(const std::string& qid) const { return table_.count(qid) != 0; }
  std::vector<std::string> query_ids() const;
  int max_grade() const;
  std::size_t size() const;

 private:
  std::map<std::string, std::map<std::string, int>> table_;
};

using Grades = std::map<std::string, int>;

struct ParsedRun {
  std::map<std::string, Ranking> rankings;
  std::vector<std::string> warnings;
};

// "qid 0 doc_id grade" lines. Repeated (qid, doc_id) pairs are an error.
Qrels parse_qrels(std::istream& in);
// "qid Q0 doc_id rank score runtag" lines; rankings are re-sorted by
// (score desc, doc_id asc) and the first of any duplicate doc is kept.
ParsedRun parse_run(std::istream& in);
void write_run(std::ostream& out, const std::string& qid, const Ranking& ranking,
               const std::string& runtag);

double err_at_k(const Ranking& ranking, const Grades& grades, int k, int g_max);
double ndcg_at_k(const Ranking& ranking, const Grades& grades, int k);
double average_precision(const Ranking& ranking, const Grades& grades);
double precision_at_k(const Ranking& ranking, const Grades& grades, int k);

struct QueryMetrics {
  std::string qid;
  double err = 0.0;
  double ndcg = 0.0;
  double ap = 0.0;
  double precision = 0.0;
};

struct MetricReport {
  int k = 20;
  int g_max = 1;
  std::vector<QueryMetrics> queries;  // sorted by qid
  QueryMetrics mean;                  // qid "all"
};

// Every query in the qrels is scored; a query missing from the run scores 0.
// g_max <= 0 selects the largest grade present in the qrels (at least 1).
MetricReport evaluate_run(const std::map<std::string, Ranking>& run, const Qrels& qrels,
                          int k = 20, int g_max = 0);
void write_report(std::ostream& out, const MetricReport& report);

struct BestOfMResult {
  std::string original;
  double baseline = 0.0;
  std::vector<std::string> candidates;  // deduplicated, generation order
  std::vector<double> candidate_err;
  int best_index = -1;
  std::vector<double> best_curve;  // best_curve[m-1] = max over first m
};

// Retrieves top-1000 for the original query and each candidate, scoring
// ERR@20 against the judgments of `qid`.
BestOfMResult best_of_m(const std::string& qid, const std::string& original,
                        const std::vector<std::string>& candidates, const InvertedIndex& index,
                        const Qrels& qrels, int max_m, int g_max,
                        const SearchOptions& search_options = {});

}  // namespace qreform

#endif  // QREFORM_IR_EVAL_H_
