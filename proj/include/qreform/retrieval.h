#ifndef QREFORM_RETRIEVAL_H_
#define QREFORM_RETRIEVAL_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qreform {

// Lowercase ASCII fold, split on any non-alphanumeric byte.
std::vector<std::string> tokenize(std::string_view text);

struct Document {
  std::string doc_id;
  std::string text;
};

struct Posting {
  int doc = 0;  // internal document number
  int tf = 0;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};
using Ranking = std::vector<ScoredDoc>;

class InvertedIndex {
 public:
  // Throws DataError on a duplicate doc_id.
  static InvertedIndex build(const std::vector<Document>& documents);

  int doc_count() const { return static_cast<int>(doc_ids_.size()); }
  const std::string& doc_id(int doc) const { return doc_ids_.at(static_cast<std::size_t>(doc)); }
  int doc_length(int doc) const { return doc_lengths_.at(static_cast<std::size_t>(doc)); }
  std::int64_t total_tokens() const { return total_tokens_; }
  std::int64_t collection_freq(const std::string& term) const;
  const std::vector<Posting>& postings(const std::string& term) const;
  std::size_t term_count() const { return postings_.size(); }
  std::vector<std::string> terms() const;

  // Text serialisation ("QRIDX 1" header, documents, then postings).
  void write(std::ostream& out) const;
  static InvertedIndex read(std::istream& in);

 private:
  std::vector<std::string> doc_ids_;
  std::vector<int> doc_lengths_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::int64_t> collection_freq_;
  std::int64_t total_tokens_ = 0;
};

struct SearchOptions {
  int k = 1000;
  double mu = 2500.0;
};

// Dirichlet-smoothed query likelihood:
//   score(D) = sum_q log((tf(q,D) + mu P(q|C)) / (|D| + mu))
// over documents holding at least one query term. Query terms absent from
// the collection are ignored. Ties break by doc_id ascending.
Ranking search(const InvertedIndex& index, std::string_view query,
               const SearchOptions& options = {});

// `doc_id<TAB>text` lines.
std::vector<Document> read_corpus(std::istream& in);

}  // namespace qreform

#endif  // QREFORM_RETRIEVAL_H_
