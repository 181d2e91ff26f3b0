#ifndef QREFORM_BEAM_SEARCH_H_
#define QREFORM_BEAM_SEARCH_H_

#include <string>
#include <string_view>
#include <vector>

#include "qreform/model.h"
#include "qreform/text_codec.h"

namespace qreform {

struct BeamOptions {
  int beam_width = 30;
  int num_candidates = 10;  // m
  int max_len = 50;         // generated symbols, EOS included
  // Unterminated beams alive at max_len are returned (flagged) when true.
  bool keep_unterminated = true;
};

struct BeamCandidate {
  std::string text;
  CharSequence ids;        // EOS-terminated unless !terminated
  double logprob = 0.0;
  double norm_score = 0.0;     // logprob / ids.size()
  double display_score = 0.0;  // exp(logprob) renormalised over the result
  bool terminated = true;
};

struct BeamResult {
  std::vector<BeamCandidate> candidates;
  std::vector<std::string> warnings;
};

// Length normalisation used for the final ranking.
double length_normalized(double logprob, std::size_t length);

// Beam search from BOS over every id except PAD and BOS. Active beams are
// pruned by running logprob (ties: lexicographic id order); finished
// hypotheses are ranked by norm_score and deduplicated by surface string.
BeamResult generate(const Model& model, const CharSequence& source,
                    const BeamOptions& options = {});
BeamResult generate(const Model& model, std::string_view source,
                    const BeamOptions& options = {});

}  // namespace qreform

#endif  // QREFORM_BEAM_SEARCH_H_
