#include "qreform/model.h"

#include <sstream>

#include "qreform/errors.h"

namespace qreform {

void ModelConfig::validate() const {
  require(embedding_dim > 0, "embedding_dim must be positive");
  require(!conv_widths.empty(), "at least one convolution width is required");
  for (int w : conv_widths) require(w >= 1, "convolution widths must be >= 1");
  require(filters_per_width > 0, "filters_per_width must be positive");
  require(pool_stride >= 1, "pool_stride must be >= 1");
  require(encoder_hidden > 0 && decoder_hidden > 0, "hidden sizes must be positive");
  require(decoder_embedding_dim > 0 && attention_dim > 0,
          "decoder embedding and attention sizes must be positive");
}

std::map<std::string, std::string> ModelConfig::to_meta() const {
  std::ostringstream widths;
  for (std::size_t i = 0; i < conv_widths.size(); ++i)
    widths << (i ? "," : "") << conv_widths[i];
  return {
      {"model.embedding_dim", std::to_string(embedding_dim)},
      {"model.conv_widths", widths.str()},
      {"model.filters_per_width", std::to_string(filters_per_width)},
      {"model.pool_stride", std::to_string(pool_stride)},
      {"model.encoder_hidden", std::to_string(encoder_hidden)},
      {"model.decoder_embedding_dim", std::to_string(decoder_embedding_dim)},
      {"model.decoder_hidden", std::to_string(decoder_hidden)},
      {"model.attention_dim", std::to_string(attention_dim)},
  };
}

ModelConfig ModelConfig::from_meta(const std::map<std::string, std::string>& meta) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError("checkpoint is missing '" + key + "'");
    return it->second;
  };
  auto get_int = [&](const std::string& key) {
    try {
      return std::stoi(get(key));
    } catch (const std::logic_error&) {
      throw DataError("checkpoint field '" + key + "' is not an integer");
    }
  };
  ModelConfig c;
  c.embedding_dim = get_int("model.embedding_dim");
  c.filters_per_width = get_int("model.filters_per_width");
  c.pool_stride = get_int("model.pool_stride");
  c.encoder_hidden = get_int("model.encoder_hidden");
  c.decoder_embedding_dim = get_int("model.decoder_embedding_dim");
  c.decoder_hidden = get_int("model.decoder_hidden");
  c.attention_dim = get_int("model.attention_dim");
  c.conv_widths.clear();
  std::istringstream widths(get("model.conv_widths"));
  std::string item;
  while (std::getline(widths, item, ',')) {
    try {
      c.conv_widths.push_back(std::stoi(item));
    } catch (const std::logic_error&) {
      throw DataError("checkpoint field 'model.conv_widths' is malformed");
    }
  }
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    throw DataError(std::string("checkpoint model config invalid: ") + e.what());
  }
  return c;
}

Model::Model(Alphabet alphabet, ModelConfig config)
    : alphabet_(std::move(alphabet)), config_(std::move(config)) {
  config_.validate();
  build();
}

Model::Model(const Model& other)
    : alphabet_(other.alphabet_),
      config_(other.config_),
      params_(other.params_),
      encoder_(other.encoder_),
      decoder_(other.decoder_) {}

void Model::build() {
  const ModelConfig& c = config_;
  const int vocab = vocab_size();

  encoder_.embedding = params_.add("encoder/embedding", vocab, c.embedding_dim);
  for (int w : c.conv_widths) {
    const std::string prefix = "encoder/conv" + std::to_string(w);
    ConvBank bank;
    bank.width = w;
    bank.weights = params_.add(prefix + "/weights", w * c.embedding_dim, c.filters_per_width);
    bank.bias = params_.add(prefix + "/bias", 1, c.filters_per_width, true);
    encoder_.conv.push_back(bank);
  }
  encoder_.highway = HighwayParams::create(params_, "encoder/highway", c.conv_channels());
  encoder_.forward =
      GruParams::create(params_, "encoder/gru_forward", c.conv_channels(), c.encoder_hidden);
  encoder_.backward =
      GruParams::create(params_, "encoder/gru_backward", c.conv_channels(), c.encoder_hidden);

  decoder_.embedding = params_.add("decoder/embedding", vocab, c.decoder_embedding_dim);
  decoder_.layer1 = GruParams::create(params_, "decoder/gru1",
                                      c.decoder_embedding_dim + c.context_dim(),
                                      c.decoder_hidden);
  decoder_.layer2 =
      GruParams::create(params_, "decoder/gru2", c.decoder_hidden, c.decoder_hidden);
  AttentionParams& att = decoder_.attention;
  att.source_projection =
      params_.add("decoder/attention/source_projection", c.context_dim(), c.attention_dim);
  att.state_projection =
      params_.add("decoder/attention/state_projection", c.decoder_hidden, c.attention_dim);
  att.bias = params_.add("decoder/attention/bias", 1, c.attention_dim, true);
  att.score = params_.add("decoder/attention/score", c.attention_dim, 1);
  decoder_.output_weights = params_.add("decoder/output/weights", c.decoder_hidden, vocab);
  decoder_.output_bias = params_.add("decoder/output/bias", 1, vocab, true);
}

}  // namespace qreform
