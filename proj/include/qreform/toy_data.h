#ifndef QREFORM_TOY_DATA_H_
#define QREFORM_TOY_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qreform/anchor_corpus.h"
#include "qreform/ir_eval.h"
#include "qreform/retrieval.h"

namespace qreform::toy {

// Random strings over the standard symbols, each paired with itself.
std::vector<TrainingPair> copy_pairs(std::size_t count, std::uint64_t seed, int min_len = 1,
                                     int max_len = 8);

enum class GrammarRule { kDropArticle, kAppendContext, kSynonym };

struct GrammarPair {
  TrainingPair pair;
  GrammarRule rule;
};

// Rewrite grammar with exactly one applicable rule per source:
//   drop a leading article        "the red boots"      -> "red boots"
//   append a context word         "red jaguar"         -> "red jaguar car"
//   dictionary synonym            "auto repair shop"   -> "car repair shop"
// Sources are distinct across the returned train and test sets.
struct GrammarSplit {
  std::vector<GrammarPair> train;
  std::vector<GrammarPair> test;
};
GrammarSplit grammar_pairs(std::size_t train_count, std::size_t test_count, std::uint64_t seed);

// Applies the grammar to a source; empty when no rule applies.
std::string apply_grammar(const std::string& source);

struct Topic {
  std::string qid;
  std::string query;
};

// A small synthetic web: documents, an anchor log over them, and graded
// judgments for ill-formed topic queries whose well-formed counterparts
// are the canonical anchors of their pages.
struct DemoWorld {
  std::vector<Document> documents;
  std::vector<AnchorRecord> anchors;
  std::vector<Topic> topics;
  Qrels qrels;
};
DemoWorld demo_world(std::uint64_t seed, int concepts = 40, int sessions = 2000,
                     int documents = 500);

}  // namespace qreform::toy

#endif  // QREFORM_TOY_DATA_H_
