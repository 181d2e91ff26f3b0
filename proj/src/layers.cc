#include "qreform/layers.h"

#include "qreform/errors.h"

namespace qreform {

GruParams GruParams::create(ParamSet& params, const std::string& prefix,
                            int input_dim, int hidden_dim) {
  require(input_dim > 0 && hidden_dim > 0, "GRU dimensions must be positive");
  GruParams gru;
  gru.input_dim = input_dim;
  gru.hidden_dim = hidden_dim;
  gru.input_weights = params.add(prefix + "/input_weights", input_dim, 3 * hidden_dim);
  gru.recurrent_gates = params.add(prefix + "/recurrent_gates", hidden_dim, 2 * hidden_dim);
  gru.recurrent_candidate =
      params.add(prefix + "/recurrent_candidate", hidden_dim, hidden_dim);
  gru.bias = params.add(prefix + "/bias", 1, 3 * hidden_dim, true);
  return gru;
}

ad::Var gru_step(ad::Tape& tape, const ParamSet& params, const GruParams& gru,
                 ad::Var input, ad::Var hidden) {
  const int h = gru.hidden_dim;
  require(input.cols() == gru.input_dim, "gru_step: input width mismatch");
  require(hidden.cols() == h && hidden.rows() == input.rows(),
          "gru_step: hidden state shape mismatch");
  ad::Var x_proj = affine(input, tape.param(params, gru.input_weights),
                          tape.param(params, gru.bias));
  ad::Var h_proj = ad::matmul(hidden, tape.param(params, gru.recurrent_gates));

  ad::Var update = ad::sigmoid(
      ad::add(ad::slice_cols(x_proj, 0, h), ad::slice_cols(h_proj, 0, h)));
  ad::Var reset = ad::sigmoid(
      ad::add(ad::slice_cols(x_proj, h, h), ad::slice_cols(h_proj, h, h)));
  ad::Var candidate = ad::tanh(ad::add(
      ad::slice_cols(x_proj, 2 * h, h),
      ad::matmul(ad::mul(reset, hidden),
                 tape.param(params, gru.recurrent_candidate))));
  return ad::add(hidden, ad::mul(update, ad::sub(candidate, hidden)));
}

HighwayParams HighwayParams::create(ParamSet& params, const std::string& prefix,
                                    int dim) {
  require(dim > 0, "highway dimension must be positive");
  HighwayParams hw;
  hw.dim = dim;
  hw.transform_weights = params.add(prefix + "/transform_weights", dim, dim);
  hw.transform_bias = params.add(prefix + "/transform_bias", 1, dim, true);
  hw.gate_weights = params.add(prefix + "/gate_weights", dim, dim);
  hw.gate_bias = params.add(prefix + "/gate_bias", 1, dim, true);
  return hw;
}

ad::Var highway(ad::Tape& tape, const ParamSet& params,
                const HighwayParams& layer, ad::Var input) {
  require(input.cols() == layer.dim, "highway: input width mismatch");
  ad::Var transform = ad::relu(affine(input, tape.param(params, layer.transform_weights),
                                      tape.param(params, layer.transform_bias)));
  ad::Var gate = ad::sigmoid(affine(input, tape.param(params, layer.gate_weights),
                                    tape.param(params, layer.gate_bias)));
  return ad::add(ad::mul(gate, transform), ad::mul(ad::one_minus(gate), input));
}

ad::Var affine(ad::Var x, ad::Var weights, ad::Var bias) {
  return ad::add_bias(ad::matmul(x, weights), bias);
}

}  // namespace qreform
