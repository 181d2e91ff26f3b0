#ifndef QREFORM_LAYERS_H_
#define QREFORM_LAYERS_H_

#include <string>

#include "qreform/autodiff.h"
#include "qreform/tensor.h"

namespace qreform {

// Gated recurrent unit. Input weights are packed column-wise as
// [update | reset | candidate]; recurrent weights are split into the two gate
// blocks and the candidate block because the candidate sees r * h_prev.
struct GruParams {
  ParamId input_weights = -1;      // input_dim x 3H
  ParamId recurrent_gates = -1;    // H x 2H   [update | reset]
  ParamId recurrent_candidate = -1;  // H x H
  ParamId bias = -1;               // 1 x 3H
  int input_dim = 0;
  int hidden_dim = 0;

  static GruParams create(ParamSet& params, const std::string& prefix,
                          int input_dim, int hidden_dim);
};

// z = sigmoid(W_z x + U_z h + b_z)
// r = sigmoid(W_r x + U_r h + b_r)
// c = tanh(W_c x + U_c (r * h) + b_c)
// h' = (1 - z) * h + z * c
ad::Var gru_step(ad::Tape& tape, const ParamSet& params, const GruParams& gru,
                 ad::Var input, ad::Var hidden);

// y = g * relu(W x + b) + (1 - g) * x,  g = sigmoid(W_g x + b_g)
struct HighwayParams {
  ParamId transform_weights = -1;
  ParamId transform_bias = -1;
  ParamId gate_weights = -1;
  ParamId gate_bias = -1;
  int dim = 0;

  static HighwayParams create(ParamSet& params, const std::string& prefix,
                              int dim);
};

ad::Var highway(ad::Tape& tape, const ParamSet& params,
                const HighwayParams& layer, ad::Var input);

// x W + b
ad::Var affine(ad::Var x, ad::Var weights, ad::Var bias);

}  // namespace qreform

#endif  // QREFORM_LAYERS_H_
