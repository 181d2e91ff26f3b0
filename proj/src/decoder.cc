#include "qreform/decoder.h"

#include <algorithm>
#include <cmath>

#include "qreform/errors.h"
#include "qreform/layers.h"

namespace qreform {

AttentionMemory prepare_memory(ad::Tape& tape, const Model& model, ad::Var context,
                               std::vector<ad::Segment> row_segments) {
  const ParamSet& params = model.params();
  const AttentionParams& att = model.decoder().attention;
  require(context.cols() == model.config().context_dim(),
          "prepare_memory: context width mismatch");
  ad::Var keys = affine(context, tape.param(params, att.source_projection),
                        tape.param(params, att.bias));
  return AttentionMemory{keys, context, std::move(row_segments)};
}

DecoderState initial_state(ad::Tape& tape, const Model& model, int rows) {
  const int h = model.config().decoder_hidden;
  return DecoderState{tape.constant(Matrix::Zero(rows, h)),
                      tape.constant(Matrix::Zero(rows, h)),
                      {}};
}

ad::AttentionResult attend(ad::Tape& tape, const Model& model, ad::Var top_state,
                           const AttentionMemory& memory) {
  const ParamSet& params = model.params();
  const AttentionParams& att = model.decoder().attention;
  ad::Var query = ad::matmul(top_state, tape.param(params, att.state_projection));
  return ad::attention(memory.keys, memory.values, query, tape.param(params, att.score),
                       memory.rows);
}

namespace {

StepResult step_unchecked(ad::Tape& tape, const Model& model,
                          std::span<const int> prev_ids, const DecoderState& state,
                          const AttentionMemory& memory) {
  const ParamSet& params = model.params();
  const DecoderParams& dec = model.decoder();
  ad::AttentionResult att = attend(tape, model, state.layer2, memory);
  ad::Var embedded = ad::gather_rows(tape.param(params, dec.embedding), prev_ids);
  const ad::Var parts[] = {embedded, att.context};
  ad::Var h1 = gru_step(tape, params, dec.layer1, ad::concat_cols(parts), state.layer1);
  ad::Var h2 = gru_step(tape, params, dec.layer2, h1, state.layer2);
  ad::Var logits = affine(h2, tape.param(params, dec.output_weights),
                          tape.param(params, dec.output_bias));
  return StepResult{logits, DecoderState{h1, h2, std::move(att.weights)}};
}

}  // namespace

StepResult decode_step(ad::Tape& tape, const Model& model,
                       std::span<const int> prev_ids, const DecoderState& state,
                       const AttentionMemory& memory) {
  const Alphabet& alphabet = model.alphabet();
  require(static_cast<Eigen::Index>(prev_ids.size()) == state.layer2.rows(),
          "decode_step: one previous id per state row required");
  for (int id : prev_ids)
    require(id >= 0 && id < alphabet.vocab_size() && id != alphabet.eos(),
            "decode_step: invalid previous character id " + std::to_string(id));
  return step_unchecked(tape, model, prev_ids, state, memory);
}

InferenceMemory prepare_inference(const Model& model, const ContextSet& context) {
  const ParamSet& params = model.params();
  const AttentionParams& att = model.decoder().attention;
  Matrix keys = context.vectors * params.value(att.source_projection);
  keys.rowwise() += params.value(att.bias).row(0);
  return InferenceMemory{context.vectors, std::move(keys)};
}

StepDistributions step_distributions(const Model& model, const InferenceMemory& memory,
                                     std::span<const int> prev_ids,
                                     const Matrix& layer1, const Matrix& layer2) {
  const int rows = static_cast<int>(prev_ids.size());
  require(rows > 0, "step_distributions: no rows");
  ad::Tape tape(false);
  DecoderState state;
  if (layer1.size() == 0) {
    state = initial_state(tape, model, rows);
  } else {
    require(layer1.rows() == rows && layer2.rows() == rows,
            "step_distributions: state rows mismatch");
    state.layer1 = tape.constant(layer1);
    state.layer2 = tape.constant(layer2);
  }
  AttentionMemory mem{tape.constant(memory.keys), tape.constant(memory.values),
                      std::vector<ad::Segment>(
                          static_cast<std::size_t>(rows),
                          ad::Segment{0, static_cast<int>(memory.values.rows())})};
  StepResult step = decode_step(tape, model, prev_ids, state, mem);
  const Matrix& z = step.logits.value();
  Matrix log_probs(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    const double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
    log_probs.row(r) = (z.row(r).array() - lse).matrix();
  }
  return StepDistributions{std::move(log_probs), step.state.layer1.value(),
                           step.state.layer2.value(), std::move(step.state.weights)};
}

BatchLoss teacher_forced_nll(ad::Tape& tape, const Model& model,
                             const std::vector<CharSequence>& sources,
                             const std::vector<CharSequence>& targets) {
  require(!sources.empty() && sources.size() == targets.size(),
          "teacher_forced_nll: sources and targets must pair up");
  const Alphabet& alphabet = model.alphabet();
  const int batch = static_cast<int>(sources.size());
  int max_len = 0;
  int symbols = 0;
  for (const auto& t : targets) {
    require(!t.empty(), "teacher_forced_nll: empty target");
    for (int id : t.ids)
      require(id >= 0 && id < alphabet.vocab_size(), "teacher_forced_nll: target id out of range");
    max_len = std::max(max_len, static_cast<int>(t.size()));
    symbols += static_cast<int>(t.size());
  }

  EncodedBatch enc = encode_batch(tape, model, sources);
  AttentionMemory memory = prepare_memory(tape, model, enc.context, enc.segments);
  DecoderState state = initial_state(tape, model, batch);

  std::vector<ad::Var> step_losses;
  std::vector<int> prev(static_cast<std::size_t>(batch));
  std::vector<int> gold(static_cast<std::size_t>(batch));
  std::vector<double> weight(static_cast<std::size_t>(batch));
  for (int t = 0; t < max_len; ++t) {
    for (int b = 0; b < batch; ++b) {
      const auto& ids = targets[static_cast<std::size_t>(b)].ids;
      const int len = static_cast<int>(ids.size());
      const auto bi = static_cast<std::size_t>(b);
      prev[bi] = t == 0 ? alphabet.bos()
                        : (t - 1 < len && t < len ? ids[static_cast<std::size_t>(t - 1)]
                                                  : alphabet.pad());
      gold[bi] = t < len ? ids[static_cast<std::size_t>(t)] : 0;
      weight[bi] = t < len ? 1.0 : 0.0;
    }
    StepResult step = step_unchecked(tape, model, prev, state, memory);
    step_losses.push_back(ad::softmax_cross_entropy(step.logits, gold, weight));
    state = std::move(step.state);
  }
  ad::Var total = step_losses.size() == 1 ? step_losses[0]
                                          : ad::sum(ad::concat_rows(step_losses));
  return BatchLoss{total, symbols};
}

double prefix_logprob(const Model& model, const CharSequence& source,
                      const CharSequence& prefix) {
  const Alphabet& alphabet = model.alphabet();
  const InferenceMemory memory = prepare_inference(model, encode_query(model, source));
  double total = 0.0;
  Matrix h1, h2;
  int prev = alphabet.bos();
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    require(prev != alphabet.eos(), "prefix_logprob: symbol after EOS");
    const int id = prefix.ids[t];
    require(id >= 0 && id < alphabet.vocab_size(), "prefix_logprob: id out of range");
    const int prev_row[] = {prev};
    StepDistributions step = step_distributions(model, memory, prev_row, h1, h2);
    total += step.log_probs(0, id);
    h1 = std::move(step.layer1);
    h2 = std::move(step.layer2);
    prev = id;
  }
  return total;
}

double sequence_logprob(const Model& model, const CharSequence& source,
                        const CharSequence& target) {
  const int eos = model.alphabet().eos();
  require(!target.empty() && target.ids.back() == eos,
          "sequence_logprob: target must end with EOS");
  require(std::count(target.ids.begin(), target.ids.end(), eos) == 1,
          "sequence_logprob: symbols after EOS are undefined");
  return prefix_logprob(model, source, target);
}

TeacherForcedAccuracy teacher_forced_accuracy(const Model& model,
                                              const std::vector<CharSequence>& sources,
                                              const std::vector<CharSequence>& targets) {
  require(sources.size() == targets.size(), "teacher_forced_accuracy: size mismatch");
  TeacherForcedAccuracy acc;
  const Alphabet& alphabet = model.alphabet();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const InferenceMemory memory = prepare_inference(model, encode_query(model, sources[i]));
    Matrix h1, h2;
    int prev = alphabet.bos();
    for (int id : targets[i].ids) {
      const int prev_row[] = {prev};
      StepDistributions step = step_distributions(model, memory, prev_row, h1, h2);
      Eigen::Index best = 0;
      step.log_probs.row(0).maxCoeff(&best);
      acc.correct += static_cast<int>(best) == id ? 1 : 0;
      ++acc.total;
      h1 = std::move(step.layer1);
      h2 = std::move(step.layer2);
      prev = id;
    }
  }
  return acc;
}

}  // namespace qreform
