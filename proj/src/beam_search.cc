#include "qreform/beam_search.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qreform/decoder.h"
#include "qreform/encoder.h"
#include "qreform/errors.h"

namespace qreform {

double length_normalized(double logprob, std::size_t length) {
  require(length > 0, "length_normalized: empty candidate");
  return logprob / static_cast<double>(length);
}

namespace {

struct Hypothesis {
  std::vector<int> ids;
  double logprob = 0.0;
};

struct Expansion {
  int parent;
  int id;
  double logprob;
};

// Lexicographic order of parent ids followed by the extension id.
bool lex_less(const std::vector<Hypothesis>& beams, const Expansion& a, const Expansion& b) {
  const auto& pa = beams[static_cast<std::size_t>(a.parent)].ids;
  const auto& pb = beams[static_cast<std::size_t>(b.parent)].ids;
  if (pa != pb) return pa < pb;
  return a.id < b.id;
}

}  // namespace

BeamResult generate(const Model& model, std::string_view source, const BeamOptions& options) {
  return generate(model, encode(model.alphabet(), source), options);
}

BeamResult generate(const Model& model, const CharSequence& source, const BeamOptions& options) {
  require(options.beam_width >= 1, "generate: beam_width must be >= 1");
  require(options.num_candidates >= 1 && options.num_candidates <= options.beam_width,
          "generate: need 1 <= m <= beam_width");
  require(options.max_len >= 1, "generate: max_len must be >= 1");
  require(!source.empty(), "generate: source is empty after encoding");

  const Alphabet& alphabet = model.alphabet();
  std::vector<int> emittable;
  for (int id = 0; id < alphabet.vocab_size(); ++id)
    if (id != alphabet.pad() && id != alphabet.bos()) emittable.push_back(id);

  const InferenceMemory memory = prepare_inference(model, encode_query(model, source));
  std::vector<Hypothesis> active(1);
  Matrix layer1, layer2;
  std::vector<BeamCandidate> finished;

  for (int step = 0; step < options.max_len && !active.empty(); ++step) {
    std::vector<int> prev;
    prev.reserve(active.size());
    for (const auto& h : active) prev.push_back(h.ids.empty() ? alphabet.bos() : h.ids.back());
    StepDistributions dist = step_distributions(model, memory, prev, layer1, layer2);

    std::vector<Expansion> expansions;
    expansions.reserve(active.size() * emittable.size());
    for (std::size_t b = 0; b < active.size(); ++b)
      for (int id : emittable)
        expansions.push_back(Expansion{static_cast<int>(b), id,
                                       active[b].logprob +
                                           dist.log_probs(static_cast<Eigen::Index>(b), id)});
    const std::size_t keep = std::min(
        expansions.size(),
        static_cast<std::size_t>(options.beam_width) - finished.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), [&](const Expansion& a, const Expansion& b) {
                        if (a.logprob != b.logprob) return a.logprob > b.logprob;
                        return lex_less(active, a, b);
                      });

    std::vector<Hypothesis> next;
    std::vector<int> parents;
    for (std::size_t i = 0; i < keep; ++i) {
      const Expansion& e = expansions[i];
      Hypothesis h{active[static_cast<std::size_t>(e.parent)].ids, e.logprob};
      h.ids.push_back(e.id);
      if (e.id == alphabet.eos()) {
        BeamCandidate c;
        c.ids.ids = std::move(h.ids);
        c.logprob = h.logprob;
        c.terminated = true;
        finished.push_back(std::move(c));
      } else {
        next.push_back(std::move(h));
        parents.push_back(e.parent);
      }
    }
    if (!next.empty()) {
      Matrix h1(static_cast<Eigen::Index>(next.size()), dist.layer1.cols());
      Matrix h2(static_cast<Eigen::Index>(next.size()), dist.layer2.cols());
      for (std::size_t i = 0; i < parents.size(); ++i) {
        h1.row(static_cast<Eigen::Index>(i)) = dist.layer1.row(parents[i]);
        h2.row(static_cast<Eigen::Index>(i)) = dist.layer2.row(parents[i]);
      }
      layer1 = std::move(h1);
      layer2 = std::move(h2);
    }
    active = std::move(next);
  }

  if (options.keep_unterminated)
    for (auto& h : active) {
      BeamCandidate c;
      c.ids.ids = std::move(h.ids);
      c.logprob = h.logprob;
      c.terminated = false;
      finished.push_back(std::move(c));
    }

  for (auto& c : finished) {
    c.norm_score = length_normalized(c.logprob, c.ids.size());
    c.text = decode(alphabet, c.ids);
  }
  std::sort(finished.begin(), finished.end(), [](const BeamCandidate& a, const BeamCandidate& b) {
    if (a.norm_score != b.norm_score) return a.norm_score > b.norm_score;
    return a.ids.ids < b.ids.ids;
  });

  BeamResult result;
  std::unordered_set<std::string> seen;
  for (auto& c : finished) {
    if (static_cast<int>(result.candidates.size()) == options.num_candidates) break;
    if (!seen.insert(c.text).second) continue;
    result.candidates.push_back(std::move(c));
  }
  if (static_cast<int>(result.candidates.size()) < options.num_candidates)
    result.warnings.push_back("only " + std::to_string(result.candidates.size()) +
                              " distinct candidates available (requested " +
                              std::to_string(options.num_candidates) + ")");
  if (!result.candidates.empty()) {
    double top = result.candidates.front().logprob;
    for (const auto& c : result.candidates) top = std::max(top, c.logprob);
    double z = 0.0;
    for (const auto& c : result.candidates) z += std::exp(c.logprob - top);
    for (auto& c : result.candidates) c.display_score = std::exp(c.logprob - top) / z;
  }
  return result;
}

}  // namespace qreform
