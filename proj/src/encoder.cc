#include "qreform/encoder.h"

#include <algorithm>

#include "qreform/errors.h"
#include "qreform/layers.h"

namespace qreform {

namespace {

// Runs a GRU over the padded pooled sequence. Rows past a query's length keep
// their previous state, which for the backward direction is the zero state.
std::vector<ad::Var> run_direction(ad::Tape& tape, const ParamSet& params,
                                   const GruParams& gru, ad::Var pooled,
                                   const std::vector<ad::Segment>& segments,
                                   int steps, bool reverse) {
  const int batch = static_cast<int>(segments.size());
  std::vector<ad::Var> states(static_cast<std::size_t>(steps));
  ad::Var h = tape.constant(Matrix::Zero(batch, gru.hidden_dim));
  std::vector<int> rows(static_cast<std::size_t>(batch));
  std::vector<double> mask(static_cast<std::size_t>(batch));
  for (int i = 0; i < steps; ++i) {
    const int t = reverse ? steps - 1 - i : i;
    for (int b = 0; b < batch; ++b) {
      const ad::Segment& s = segments[static_cast<std::size_t>(b)];
      const bool live = t < s.length;
      rows[static_cast<std::size_t>(b)] = live ? s.offset + t : -1;
      mask[static_cast<std::size_t>(b)] = live ? 1.0 : 0.0;
    }
    ad::Var x = ad::gather_rows(pooled, rows);
    ad::Var next = gru_step(tape, params, gru, x, h);
    h = std::all_of(mask.begin(), mask.end(), [](double m) { return m == 1.0; })
            ? next
            : ad::blend_rows(mask, next, h);
    states[static_cast<std::size_t>(t)] = h;
  }
  return states;
}

}  // namespace

EncodedBatch encode_batch(ad::Tape& tape, const Model& model,
                          const std::vector<CharSequence>& sources) {
  require(!sources.empty(), "encode_batch: empty batch");
  const ModelConfig& cfg = model.config();
  const ParamSet& params = model.params();
  const EncoderParams& enc = model.encoder();
  const Alphabet& alphabet = model.alphabet();

  std::vector<int> ids;
  std::vector<ad::Segment> segments;
  for (const CharSequence& s : sources) {
    require(!s.empty(), "encode_query: empty input sequence");
    segments.push_back(ad::Segment{static_cast<int>(ids.size()), static_cast<int>(s.size())});
    for (int id : s.ids) {
      require(id >= 0 && id < alphabet.vocab_size(), "encode_query: id out of range");
      require(id < alphabet.symbol_count() || id == alphabet.unk(),
              "encode_query: control symbol inside source sequence");
      ids.push_back(id);
    }
  }

  ad::Var embedded = ad::gather_rows(tape.param(params, enc.embedding), ids);
  std::vector<ad::Var> banks;
  for (const ConvBank& bank : enc.conv)
    banks.push_back(ad::conv1d(embedded, segments, tape.param(params, bank.weights),
                               tape.param(params, bank.bias), bank.width));
  ad::Var features = ad::relu(banks.size() == 1 ? banks[0] : ad::concat_cols(banks));
  ad::Var pooled = ad::segment_maxpool(features, segments, cfg.pool_stride);
  const std::vector<ad::Segment> pooled_segs = ad::pooled_segments(segments, cfg.pool_stride);
  pooled = highway(tape, params, enc.highway, pooled);

  int steps = 0;
  for (const auto& s : pooled_segs) steps = std::max(steps, s.length);
  const std::vector<ad::Var> fwd =
      run_direction(tape, params, enc.forward, pooled, pooled_segs, steps, false);
  const std::vector<ad::Var> bwd =
      run_direction(tape, params, enc.backward, pooled, pooled_segs, steps, true);

  // Step-major rows (t * batch + b) reordered into the packed layout.
  std::vector<ad::Var> per_step;
  per_step.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const ad::Var pair[] = {fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]};
    per_step.push_back(ad::concat_cols(pair));
  }
  ad::Var stacked = steps == 1 ? per_step[0] : ad::concat_rows(per_step);
  const int batch = static_cast<int>(sources.size());
  std::vector<int> order;
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < pooled_segs[static_cast<std::size_t>(b)].length; ++t)
      order.push_back(t * batch + b);
  return EncodedBatch{ad::gather_rows(stacked, order), pooled_segs};
}

ContextSet encode_query(const Model& model, const CharSequence& source) {
  ad::Tape tape(false);
  EncodedBatch out = encode_batch(tape, model, {source});
  return ContextSet{out.context.value()};
}

}  // namespace qreform
