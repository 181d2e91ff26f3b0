#include "qreform/retrieval.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "qreform/errors.h"

namespace qreform {

namespace {

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

const std::vector<Posting> kNoPostings;

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_alnum(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

InvertedIndex InvertedIndex::build(const std::vector<Document>& documents) {
  InvertedIndex index;
  std::unordered_set<std::string> seen;
  for (const Document& d : documents) {
    if (!seen.insert(d.doc_id).second)
      throw DataError("duplicate doc_id '" + d.doc_id + "'");
    const int doc = static_cast<int>(index.doc_ids_.size());
    const std::vector<std::string> tokens = tokenize(d.text);
    std::map<std::string, int> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) {
      index.postings_[term].push_back(Posting{doc, count});
      index.collection_freq_[term] += count;
    }
    index.doc_ids_.push_back(d.doc_id);
    index.doc_lengths_.push_back(static_cast<int>(tokens.size()));
    index.total_tokens_ += static_cast<std::int64_t>(tokens.size());
  }
  return index;
}

std::int64_t InvertedIndex::collection_freq(const std::string& term) const {
  auto it = collection_freq_.find(term);
  return it == collection_freq_.end() ? 0 : it->second;
}

const std::vector<Posting>& InvertedIndex::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? kNoPostings : it->second;
}

std::vector<std::string> InvertedIndex::terms() const {
  std::vector<std::string> out;
  out.reserve(postings_.size());
  for (const auto& [term, _] : postings_) out.push_back(term);
  std::sort(out.begin(), out.end());
  return out;
}

void InvertedIndex::write(std::ostream& out) const {
  out << "QRIDX 1\n" << doc_ids_.size() << '\n';
  for (std::size_t i = 0; i < doc_ids_.size(); ++i)
    out << doc_ids_[i] << '\t' << doc_lengths_[i] << '\n';
  const std::vector<std::string> sorted = terms();
  out << sorted.size() << '\n';
  for (const auto& term : sorted) {
    out << term;
    for (const Posting& p : postings_.at(term)) out << '\t' << p.doc << ':' << p.tf;
    out << '\n';
  }
  if (!out) throw DataError("index write failed");
}

InvertedIndex InvertedIndex::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "QRIDX 1") throw DataError("not an index file");
  InvertedIndex index;
  auto read_count = [&]() {
    if (!std::getline(in, line)) throw DataError("index truncated");
    try {
      return std::stoull(line);
    } catch (const std::logic_error&) {
      throw DataError("index: malformed count line");
    }
  };
  const std::size_t docs = read_count();
  for (std::size_t i = 0; i < docs; ++i) {
    if (!std::getline(in, line)) throw DataError("index truncated in documents");
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError("index: malformed document line");
    index.doc_ids_.push_back(line.substr(0, tab));
    index.doc_lengths_.push_back(std::stoi(line.substr(tab + 1)));
    index.total_tokens_ += index.doc_lengths_.back();
  }
  const std::size_t terms = read_count();
  for (std::size_t i = 0; i < terms; ++i) {
    if (!std::getline(in, line)) throw DataError("index truncated in postings");
    std::istringstream fields(line);
    std::string term, posting;
    std::getline(fields, term, '\t');
    std::vector<Posting>& list = index.postings_[term];
    std::int64_t cf = 0;
    while (std::getline(fields, posting, '\t')) {
      const auto colon = posting.find(':');
      if (colon == std::string::npos) throw DataError("index: malformed posting");
      Posting p{std::stoi(posting.substr(0, colon)), std::stoi(posting.substr(colon + 1))};
      if (p.doc < 0 || p.doc >= static_cast<int>(docs)) throw DataError("index: bad doc number");
      cf += p.tf;
      list.push_back(p);
    }
    index.collection_freq_[term] = cf;
  }
  return index;
}

Ranking search(const InvertedIndex& index, std::string_view query, const SearchOptions& options) {
  require(options.k >= 1, "search: k must be >= 1");
  require(options.mu > 0.0, "search: mu must be positive");
  std::vector<std::string> terms;
  for (auto& t : tokenize(query))
    if (index.collection_freq(t) > 0) terms.push_back(std::move(t));
  if (terms.empty()) return {};

  const double total = static_cast<double>(index.total_tokens());
  // Background-only contribution per term, and per-document correction
  // log(tf + mu p) - log(mu p) for documents containing the term.
  std::unordered_map<int, double> matched;
  double background_sum = 0.0;
  std::vector<double> background(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double p = static_cast<double>(index.collection_freq(terms[i])) / total;
    background[i] = options.mu * p;
    background_sum += std::log(background[i]);
    for (const Posting& post : index.postings(terms[i]))
      matched[post.doc] += std::log(post.tf + background[i]) - std::log(background[i]);
  }
  Ranking ranking;
  ranking.reserve(matched.size());
  const double n_terms = static_cast<double>(terms.size());
  for (const auto& [doc, correction] : matched) {
    const double score = background_sum + correction -
                         n_terms * std::log(index.doc_length(doc) + options.mu);
    ranking.push_back(ScoredDoc{index.doc_id(doc), score});
  }
  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  const auto k = std::min(ranking.size(), static_cast<std::size_t>(options.k));
  std::partial_sort(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k),
                    ranking.end(), better);
  ranking.resize(k);
  return ranking;
}

std::vector<Document> read_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError("corpus line " + std::to_string(line_no) + ": expected doc_id<TAB>text");
    docs.push_back(Document{line.substr(0, tab), line.substr(tab + 1)});
  }
  return docs;
}

}  // namespace qreform
