#ifndef QREFORM_ENCODER_H_
#define QREFORM_ENCODER_H_

#include <vector>

#include "qreform/autodiff.h"
#include "qreform/model.h"
#include "qreform/text_codec.h"

namespace qreform {

// Encoder output for one query: row t is [forward_t ; backward_t] over the
// pooled positions, so rows() == ceil(n / pool_stride).
struct ContextSet {
  Matrix vectors;

  int length() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }
};

// Packed encoder output for a batch: segments[b] addresses the rows of
// query b inside `context`.
struct EncodedBatch {
  ad::Var context;
  std::vector<ad::Segment> segments;
};

// embed -> conv banks (concatenated) -> relu -> segment max-pool -> highway
// -> bidirectional GRU. Sources must be non-empty and must not contain
// control ids other than UNK.
EncodedBatch encode_batch(ad::Tape& tape, const Model& model,
                          const std::vector<CharSequence>& sources);

ContextSet encode_query(const Model& model, const CharSequence& source);

}  // namespace qreform

#endif  // QREFORM_ENCODER_H_
