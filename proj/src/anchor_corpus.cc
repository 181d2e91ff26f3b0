#include "qreform/anchor_corpus.h"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "qreform/errors.h"
#include "qreform/text_codec.h"

namespace qreform {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::set<std::string> word_set(std::string_view text) {
  std::set<std::string> words;
  std::istringstream in(fold_case(text));
  std::string w;
  while (in >> w) words.insert(w);
  return words;
}

}  // namespace

std::vector<AnchorRecord> parse_anchor_log(std::istream& in, ParseStats* stats) {
  std::vector<AnchorRecord> records;
  ParseStats local;
  std::string line;
  while (std::getline(in, line)) {
    ++local.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      utf8_decode(line);
    } catch (const DataError& e) {
      throw DataError("anchor log line " + std::to_string(local.lines) + ": " + e.what());
    }
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      ++local.skipped;
      continue;
    }
    const std::string_view url = trim(fields[0]);
    const std::string_view anchor = trim(fields[1]);
    const std::string_view freq_text = trim(fields[2]);
    std::int64_t freq = 0;
    const auto [ptr, ec] =
        std::from_chars(freq_text.data(), freq_text.data() + freq_text.size(), freq);
    if (url.empty() || anchor.empty() || ec != std::errc() ||
        ptr != freq_text.data() + freq_text.size() || freq < 1) {
      ++local.skipped;
      continue;
    }
    records.push_back(AnchorRecord{std::string(url), std::string(anchor), freq});
    ++local.records;
  }
  if (in.bad()) throw DataError("anchor log: stream read failure");
  if (stats != nullptr) *stats = local;
  return records;
}

std::string normalize_anchor(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : fold_case(text)) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<Session> group_sessions(const std::vector<AnchorRecord>& records) {
  std::map<std::string, std::map<std::string, std::int64_t>> grouped;
  for (const AnchorRecord& r : records) {
    std::string text = normalize_anchor(r.anchor_text);
    if (text.empty()) continue;
    grouped[r.url_id][std::move(text)] += r.freq;
  }
  std::vector<Session> sessions;
  sessions.reserve(grouped.size());
  for (auto& [url, anchors] : grouped) {
    Session s{url, {}};
    for (auto& [text, freq] : anchors) s.anchors.push_back(AnchorCount{text, freq});
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::string canonical_anchor(const Session& session) {
  require(!session.anchors.empty(), "canonical_anchor: empty session");
  const AnchorCount* best = &session.anchors.front();
  for (const AnchorCount& a : session.anchors)
    if (a.freq > best->freq || (a.freq == best->freq && a.text < best->text)) best = &a;
  return best->text;
}

double word_jaccard(std::string_view a, std::string_view b) {
  const std::set<std::string> wa = word_set(a);
  const std::set<std::string> wb = word_set(b);
  if (wa.empty() && wb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& w : wa) common += wb.count(w);
  const std::size_t total = wa.size() + wb.size() - common;
  return static_cast<double>(common) / static_cast<double>(total);
}

bool filter_pair(const AnchorRecord& record, std::string_view canonical,
                 const FilterRules& rules) {
  return record.freq >= rules.min_freq &&
         utf8_length(record.anchor_text) < rules.max_chars &&
         utf8_length(canonical) < rules.max_chars &&
         word_jaccard(record.anchor_text, canonical) >= rules.min_jaccard;
}

PairCorpus build_pairs(const std::vector<Session>& sessions, std::size_t validation_size,
                       std::uint64_t seed, const FilterRules& rules) {
  std::vector<TrainingPair> pairs;
  for (const Session& s : sessions) {
    if (s.anchors.empty()) continue;
    const std::string canonical = canonical_anchor(s);
    for (const AnchorCount& a : s.anchors)
      if (filter_pair(AnchorRecord{s.url_id, a.text, a.freq}, canonical, rules))
        pairs.push_back(TrainingPair{a.text, canonical});
  }

  PairCorpus corpus;
  corpus.seed = seed;
  if (validation_size >= pairs.size()) {
    if (validation_size > pairs.size())
      corpus.warnings.push_back("validation size " + std::to_string(validation_size) +
                                " exceeds the " + std::to_string(pairs.size()) +
                                " available pairs; all pairs go to validation");
    corpus.validation = std::move(pairs);
    return corpus;
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> held_out(pairs.size(), false);
  for (std::size_t i = 0; i < validation_size; ++i) held_out[order[i]] = true;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    (held_out[i] ? corpus.validation : corpus.train).push_back(std::move(pairs[i]));
  return corpus;
}

void write_pairs(std::ostream& out, const std::vector<TrainingPair>& pairs) {
  for (const auto& p : pairs) out << p.source << '\t' << p.target << '\n';
}

std::vector<TrainingPair> read_pairs(std::istream& in) {
  std::vector<TrainingPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw DataError("pair file line " + std::to_string(line_no) +
                      ": expected source<TAB>target");
    pairs.push_back(TrainingPair{std::string(fields[0]), std::string(fields[1])});
  }
  return pairs;
}

}  // namespace qreform
