#ifndef QREFORM_DECODER_H_
#define QREFORM_DECODER_H_

#include <span>
#include <vector>

#include "qreform/autodiff.h"
#include "qreform/encoder.h"
#include "qreform/model.h"
#include "qreform/text_codec.h"

namespace qreform {

// Source side of attention, projected once per source: keys = C P_s + b.
// rows[i] names the memory segment that decoder row i attends over.
struct AttentionMemory {
  ad::Var keys;
  ad::Var values;
  std::vector<ad::Segment> rows;
};

AttentionMemory prepare_memory(ad::Tape& tape, const Model& model, ad::Var context,
                               std::vector<ad::Segment> row_segments);

struct DecoderState {
  ad::Var layer1;
  ad::Var layer2;
  std::vector<std::vector<double>> weights;  // last attention weights per row
};

// Zero hidden states for `rows` decoder rows.
DecoderState initial_state(ad::Tape& tape, const Model& model, int rows);

// score_t = v . tanh(P_s h_t + P_h s + b), alpha = softmax(score),
// c = sum_t alpha_t h_t, with s the previous top-layer decoder state.
ad::AttentionResult attend(ad::Tape& tape, const Model& model, ad::Var top_state,
                           const AttentionMemory& memory);

struct StepResult {
  ad::Var logits;  // rows x vocab
  DecoderState state;
};

// One decoder step: attend with the previous layer-2 state, layer 1 reads
// [e_y(prev) ; c], layer 2 reads layer 1, logits come from layer 2.
// prev_ids may be any in-range id except EOS (BOS on the first step).
StepResult decode_step(ad::Tape& tape, const Model& model,
                       std::span<const int> prev_ids, const DecoderState& state,
                       const AttentionMemory& memory);

// Inference helpers: source memory projected once, then stepped row-wise
// with plain matrices (no gradient recording).
struct InferenceMemory {
  Matrix values;  // context set
  Matrix keys;    // values P_s + b
};
InferenceMemory prepare_inference(const Model& model, const ContextSet& context);

struct StepDistributions {
  Matrix log_probs;  // rows x vocab
  Matrix layer1;
  Matrix layer2;
  std::vector<std::vector<double>> weights;
};
// Every row attends over the same memory. Empty layer matrices mean the
// initial (zero) state.
StepDistributions step_distributions(const Model& model, const InferenceMemory& memory,
                                     std::span<const int> prev_ids,
                                     const Matrix& layer1, const Matrix& layer2);

// Teacher-forced total negative log-likelihood over a batch, summed over every
// target symbol (EOS included).
struct BatchLoss {
  ad::Var total_nll;
  int target_symbols = 0;
};
BatchLoss teacher_forced_nll(ad::Tape& tape, const Model& model,
                             const std::vector<CharSequence>& sources,
                             const std::vector<CharSequence>& targets);

// log p(target | source); target must end with EOS and hold no other EOS.
double sequence_logprob(const Model& model, const CharSequence& source,
                        const CharSequence& target);
// Sum of step log-probabilities of an arbitrary id prefix (no EOS rule).
double prefix_logprob(const Model& model, const CharSequence& source,
                      const CharSequence& prefix);

// Fraction of target symbols whose teacher-forced argmax is correct.
struct TeacherForcedAccuracy {
  int correct = 0;
  int total = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};
TeacherForcedAccuracy teacher_forced_accuracy(const Model& model,
                                              const std::vector<CharSequence>& sources,
                                              const std::vector<CharSequence>& targets);

}  // namespace qreform

#endif  // QREFORM_DECODER_H_
