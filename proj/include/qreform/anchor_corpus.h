#ifndef QREFORM_ANCHOR_CORPUS_H_
#define QREFORM_ANCHOR_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qreform {

// One <page, anchor, frequency> line of an anchor log.
struct AnchorRecord {
  std::string url_id;
  std::string anchor_text;
  std::int64_t freq = 0;

  friend bool operator==(const AnchorRecord&, const AnchorRecord&) = default;
};

struct AnchorCount {
  std::string text;
  std::int64_t freq = 0;

  friend bool operator==(const AnchorCount&, const AnchorCount&) = default;
};

// All anchors pointing at one page. Anchor texts are normalised and unique.
struct Session {
  std::string url_id;
  std::vector<AnchorCount> anchors;
};

struct TrainingPair {
  std::string source;
  std::string target;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct PairCorpus {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> validation;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct ParseStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t skipped = 0;
};

// Filter thresholds: keep iff freq >= min_freq, length < max_chars and
// word overlap with the canonical anchor >= min_jaccard.
struct FilterRules {
  std::int64_t min_freq = 2;
  std::size_t max_chars = 50;
  double min_jaccard = 0.3;
};

// Parses `url_id<TAB>anchor_text<TAB>freq` lines. Malformed lines are counted
// in stats.skipped and dropped; invalid UTF-8 throws DataError.
std::vector<AnchorRecord> parse_anchor_log(std::istream& in, ParseStats* stats = nullptr);

// Lowercase fold, trim, and collapse internal whitespace runs to one space.
std::string normalize_anchor(std::string_view text);

// Groups by url_id (sorted), merging duplicate anchors by summing freq.
std::vector<Session> group_sessions(const std::vector<AnchorRecord>& records);

// Most frequent anchor; ties go to the lexicographically smallest text.
std::string canonical_anchor(const Session& session);

// |W(a) & W(b)| / |W(a) | W(b)| over lowercase whitespace-split word sets;
// 1.0 when both sets are empty.
double word_jaccard(std::string_view a, std::string_view b);

bool filter_pair(const AnchorRecord& record, std::string_view canonical,
                 const FilterRules& rules = {});

// One (anchor, canonical) pair per surviving anchor, then a seeded random
// validation split of `validation_size` pairs.
PairCorpus build_pairs(const std::vector<Session>& sessions, std::size_t validation_size,
                       std::uint64_t seed, const FilterRules& rules = {});

// `source<TAB>target` lines.
void write_pairs(std::ostream& out, const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> read_pairs(std::istream& in);

}  // namespace qreform

#endif  // QREFORM_ANCHOR_CORPUS_H_
