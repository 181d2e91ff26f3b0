#include "qreform/toy_data.h"

#include <algorithm>
#include <cstdio>
#include <array>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "qreform/errors.h"
#include "qreform/text_codec.h"

namespace qreform::toy {

namespace {

const std::array<std::string, 3> kArticles = {"the", "a", "an"};

const std::map<std::string, std::string> kContext = {
    {"jaguar", "car"},   {"python", "code"},   {"apple", "fruit"},  {"java", "island"},
    {"mercury", "planet"}, {"puma", "animal"}, {"amazon", "river"}, {"windows", "glass"},
};

const std::map<std::string, std::string> kSynonyms = {
    {"auto", "car"},       {"photo", "picture"}, {"movie", "film"},   {"kid", "child"},
    {"laptop", "notebook"}, {"sofa", "couch"},   {"doctor", "physician"}, {"cheap", "budget"},
    {"fix", "repair"},     {"buy", "purchase"},
};

const std::array<std::string, 40> kNeutral = {
    "red",    "blue",   "best",   "new",    "used",   "online", "free",   "local",
    "shop",   "store",  "price",  "review", "guide",  "parts",  "rental", "sale",
    "deals",  "home",   "garden", "city",   "map",    "hotel",  "tickets", "recipe",
    "school", "music",  "game",   "news",   "weather", "jobs",  "club",   "book",
    "water",  "light",  "fast",   "small",  "big",    "old",    "green",  "service",
};

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

template <typename Rng, typename Container>
const auto& pick(Rng& rng, const Container& c) {
  std::uniform_int_distribution<std::size_t> d(0, c.size() - 1);
  auto it = c.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(d(rng)));
  return *it;
}

std::vector<std::string> neutral_words(std::mt19937_64& rng, int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(pick(rng, kNeutral));
  return out;
}

}  // namespace

std::vector<TrainingPair> copy_pairs(std::size_t count, std::uint64_t seed, int min_len,
                                     int max_len) {
  require(min_len >= 1 && max_len >= min_len, "copy_pairs: bad length range");
  std::mt19937_64 rng(seed);
  const std::string symbols = utf8_encode(Alphabet::standard().symbols());
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, symbols.size() - 1);
  std::vector<TrainingPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string s;
    const int n = len(rng);
    for (int j = 0; j < n; ++j) s.push_back(symbols[sym(rng)]);
    out.push_back(TrainingPair{s, s});
  }
  return out;
}

std::string apply_grammar(const std::string& source) {
  std::vector<std::string> words = split_words(source);
  if (words.empty()) return {};
  int applicable = 0;
  std::string result;
  if (std::find(kArticles.begin(), kArticles.end(), words.front()) != kArticles.end() &&
      words.size() > 1) {
    ++applicable;
    result = join_words(std::vector<std::string>(words.begin() + 1, words.end()));
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (auto it = kContext.find(words[i]); it != kContext.end()) {
      ++applicable;
      std::vector<std::string> out = words;
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(i + 1), it->second);
      result = join_words(out);
    }
    if (auto it = kSynonyms.find(words[i]); it != kSynonyms.end()) {
      ++applicable;
      std::vector<std::string> out = words;
      out[i] = it->second;
      result = join_words(out);
    }
  }
  return applicable == 1 ? result : std::string();
}

GrammarSplit grammar_pairs(std::size_t train_count, std::size_t test_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::string> used;
  std::vector<GrammarPair> all;
  const std::size_t total = train_count + test_count;
  std::uniform_int_distribution<int> rule_dist(0, 2);
  std::uniform_int_distribution<int> extra(1, 2);
  std::size_t attempts = 0;
  while (all.size() < total) {
    require(++attempts < total * 100, "grammar_pairs: vocabulary too small for request");
    const auto rule = static_cast<GrammarRule>(rule_dist(rng));
    std::vector<std::string> words;
    switch (rule) {
      case GrammarRule::kDropArticle:
        words = neutral_words(rng, extra(rng));
        words.insert(words.begin(), pick(rng, kArticles));
        break;
      case GrammarRule::kAppendContext:
      case GrammarRule::kSynonym: {
        words = neutral_words(rng, extra(rng));
        const std::string& trigger = rule == GrammarRule::kAppendContext
                                         ? pick(rng, kContext).first
                                         : pick(rng, kSynonyms).first;
        std::uniform_int_distribution<std::size_t> at(0, words.size());
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(at(rng)), trigger);
        break;
      }
    }
    std::string source = join_words(words);
    if (!used.insert(source).second) continue;
    std::string target = apply_grammar(source);
    require(!target.empty(), "grammar_pairs: generated an ambiguous source");
    all.push_back(GrammarPair{TrainingPair{std::move(source), std::move(target)}, rule});
  }
  GrammarSplit split;
  split.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train_count));
  split.test.assign(all.begin() + static_cast<std::ptrdiff_t>(train_count), all.end());
  return split;
}

namespace {

class WordMaker {
 public:
  explicit WordMaker(std::mt19937_64& rng) : rng_(rng) {}

  std::string fresh(int min_syllables, int max_syllables) {
    static const std::string consonants = "bcdfghklmnprstvz";
    static const std::string vowels = "aeiou";
    std::uniform_int_distribution<int> syl(min_syllables, max_syllables);
    for (;;) {
      std::string w;
      const int n = syl(rng_);
      for (int i = 0; i < n; ++i) {
        w.push_back(pick(rng_, consonants));
        w.push_back(pick(rng_, vowels));
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

struct Concept {
  std::string head;      // concept-specific word used by pages
  std::string synonym;   // rare variant of head, absent from documents
  std::string shared;    // second word, shared by a group of concepts
  std::vector<std::string> topical;
};

}  // namespace

DemoWorld demo_world(std::uint64_t seed, int concepts, int sessions, int documents) {
  require(concepts >= 1 && documents >= concepts && sessions >= documents,
          "demo_world: need concepts <= documents <= sessions");
  std::mt19937_64 rng(seed);
  WordMaker words(rng);

  std::vector<std::string> shared_words;
  for (int g = 0; g < (concepts + 3) / 4; ++g) shared_words.push_back(words.fresh(2, 3));
  std::vector<Concept> cs;
  for (int c = 0; c < concepts; ++c) {
    Concept k;
    k.head = words.fresh(2, 3);
    k.synonym = words.fresh(2, 3);
    k.shared = shared_words[static_cast<std::size_t>(c / 4)];
    for (int t = 0; t < 4; ++t) k.topical.push_back(words.fresh(2, 3));
    cs.push_back(std::move(k));
  }
  std::vector<std::string> filler;
  for (int i = 0; i < 200; ++i) filler.push_back(words.fresh(1, 3));

  DemoWorld world;
  std::uniform_int_distribution<int> strength_dist(0, 3);
  std::vector<int> doc_grade(static_cast<std::size_t>(documents));
  auto doc_id = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "d%04d", i);
    return std::string(buf);
  };

  for (int i = 0; i < documents; ++i) {
    const Concept& k = cs[static_cast<std::size_t>(i % concepts)];
    const int grade = strength_dist(rng);
    doc_grade[static_cast<std::size_t>(i)] = grade;
    std::vector<std::string> text;
    std::uniform_int_distribution<int> fill_count(20, 40);
    const int n_fill = fill_count(rng);
    for (int j = 0; j < n_fill; ++j) text.push_back(pick(rng, filler));
    // Grade 0 pages mention only the shared word; stronger pages repeat the
    // concept words more often.
    text.push_back(k.shared);
    for (int j = 0; j < grade; ++j) {
      text.push_back(k.head);
      text.push_back(k.shared);
      text.push_back(pick(rng, k.topical));
    }
    std::shuffle(text.begin(), text.end(), rng);
    world.documents.push_back(Document{doc_id(i), join_words(text)});
  }

  std::uniform_int_distribution<int> canonical_freq(20, 60);
  std::uniform_int_distribution<int> variant_freq(1, 10);
  std::uniform_int_distribution<int> coin(0, 3);
  for (int i = 0; i < sessions; ++i) {
    const Concept& k = cs[static_cast<std::size_t>(i % concepts)];
    const std::string page = i < documents ? doc_id(i) : "u" + std::to_string(i);
    const std::string canonical = k.head + " " + k.shared;
    auto add = [&](std::string text, int freq) {
      world.anchors.push_back(AnchorRecord{page, std::move(text), freq});
    };
    add(canonical, canonical_freq(rng));
    add(k.synonym + " " + k.shared, variant_freq(rng));
    if (coin(rng) == 0) add("The " + canonical, variant_freq(rng));
    if (coin(rng) == 0) add(canonical + " " + pick(rng, k.topical), variant_freq(rng));
    if (coin(rng) == 0) add(k.synonym, variant_freq(rng));
    if (coin(rng) == 0) add("click  here", variant_freq(rng));
  }

  for (int c = 0; c < concepts; ++c) {
    const Concept& k = cs[static_cast<std::size_t>(c)];
    Topic t;
    t.qid = std::to_string(c + 1);
    t.query = (c % 3 == 0 ? "the " : "") + k.synonym + " " + k.shared;
    for (int i = c; i < documents; i += concepts)
      world.qrels.set(t.qid, doc_id(i), doc_grade[static_cast<std::size_t>(i)]);
    // A few judged pages from sibling concepts sharing the second word.
    const int group = c / 4;
    for (int j = 0; j < 3; ++j) {
      const int sibling = group * 4 + (c % 4 + 1 + j) % 4;
      if (sibling >= concepts || sibling == c) continue;
      world.qrels.set(t.qid, doc_id(sibling), sibling % 7 == 0 ? -2 : 0);
    }
    world.topics.push_back(std::move(t));
  }
  return world;
}

}  // namespace qreform::toy
