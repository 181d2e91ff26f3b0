#ifndef QREFORM_MODEL_H_
#define QREFORM_MODEL_H_

#include <map>
#include <string>
#include <vector>

#include "qreform/layers.h"
#include "qreform/tensor.h"
#include "qreform/text_codec.h"

namespace qreform {

// Architecture sizes. Defaults are the desk-scale configuration.
struct ModelConfig {
  int embedding_dim = 32;
  std::vector<int> conv_widths = {1, 2, 3, 4, 5};
  int filters_per_width = 25;
  int pool_stride = 5;
  int encoder_hidden = 64;  // per direction
  int decoder_embedding_dim = 32;
  int decoder_hidden = 128;
  int attention_dim = 128;

  int conv_channels() const {
    return filters_per_width * static_cast<int>(conv_widths.size());
  }
  int context_dim() const { return 2 * encoder_hidden; }

  void validate() const;
  std::map<std::string, std::string> to_meta() const;
  static ModelConfig from_meta(const std::map<std::string, std::string>& meta);
};

struct ConvBank {
  ParamId weights = -1;  // width * embedding_dim x filters
  ParamId bias = -1;
  int width = 0;
};

struct EncoderParams {
  ParamId embedding = -1;  // vocab x embedding_dim   (e_x)
  std::vector<ConvBank> conv;
  HighwayParams highway;
  GruParams forward;
  GruParams backward;
};

struct AttentionParams {
  ParamId source_projection = -1;  // context_dim x attention_dim
  ParamId state_projection = -1;   // decoder_hidden x attention_dim
  ParamId bias = -1;               // 1 x attention_dim
  ParamId score = -1;              // attention_dim x 1
};

struct DecoderParams {
  ParamId embedding = -1;  // vocab x decoder_embedding_dim   (e_y)
  GruParams layer1;        // input [e_y ; context]
  GruParams layer2;
  AttentionParams attention;
  ParamId output_weights = -1;  // decoder_hidden x vocab
  ParamId output_bias = -1;
};

// Encoder-decoder parameters over a fixed alphabet. Parameters start at zero;
// see trainer::init_params for the random initialisation.
class Model {
 public:
  Model(Alphabet alphabet, ModelConfig config);
  Model(const Model& other);
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;

  const Alphabet& alphabet() const { return alphabet_; }
  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return alphabet_.vocab_size(); }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const EncoderParams& encoder() const { return encoder_; }
  const DecoderParams& decoder() const { return decoder_; }

 private:
  void build();

  Alphabet alphabet_;
  ModelConfig config_;
  ParamSet params_;
  EncoderParams encoder_;
  DecoderParams decoder_;
};

}  // namespace qreform

#endif  // QREFORM_MODEL_H_
