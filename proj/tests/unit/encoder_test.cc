#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "grad_harness.h"
#include "qreform/encoder.h"
#include "qreform/errors.h"
#include "qreform/trainer.h"

using namespace qreform;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.embedding_dim = 5;
  c.conv_widths = {1, 2, 3};
  c.filters_per_width = 3;
  c.pool_stride = 2;
  c.encoder_hidden = 4;
  c.decoder_embedding_dim = 4;
  c.decoder_hidden = 6;
  c.attention_dim = 5;
  return c;
}

Model random_model(ModelConfig config, std::uint64_t seed, double range) {
  Model m(Alphabet::standard(), std::move(config));
  init_params(m, seed, range);
  // Non-zero biases so every parameter has a visible effect.
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-range, range);
  for (auto& p : m.params())
    if (p.is_bias)
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
  return m;
}

// Plain-matrix forward pass written directly from the layer equations.
namespace plain {

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

Matrix gru(const ParamSet& p, const GruParams& g, const Matrix& x, const Matrix& h) {
  const int hd = g.hidden_dim;
  const Matrix xp = affine(x, p.value(g.input_weights), p.value(g.bias));
  const Matrix hp = h * p.value(g.recurrent_gates);
  const Matrix z = sigmoid(xp.leftCols(hd) + hp.leftCols(hd));
  const Matrix r = sigmoid(xp.middleCols(hd, hd) + hp.rightCols(hd));
  const Matrix c = (xp.rightCols(hd) + Matrix(r.cwiseProduct(h)) * p.value(g.recurrent_candidate))
                       .array()
                       .tanh()
                       .matrix();
  return (Matrix::Ones(h.rows(), hd) - z).cwiseProduct(h) + z.cwiseProduct(c);
}

Matrix encode(const Model& model, const CharSequence& src) {
  const ParamSet& p = model.params();
  const EncoderParams& enc = model.encoder();
  const int n = static_cast<int>(src.size());
  const int e = model.config().embedding_dim;
  Matrix emb(n, e);
  for (int t = 0; t < n; ++t) emb.row(t) = p.value(enc.embedding).row(src.ids[static_cast<std::size_t>(t)]);

  Matrix features(n, model.config().conv_channels());
  int col = 0;
  for (const ConvBank& bank : enc.conv) {
    const Matrix& w = p.value(bank.weights);
    const int left = (bank.width - 1) / 2;
    for (int t = 0; t < n; ++t) {
      Matrix acc = p.value(bank.bias);
      for (int k = 0; k < bank.width; ++k) {
        const int s = t - left + k;
        if (s < 0 || s >= n) continue;
        acc += emb.row(s) * w.middleRows(k * e, e);
      }
      features.block(t, col, 1, w.cols()) = acc.cwiseMax(0.0);
    }
    col += static_cast<int>(w.cols());
  }

  const int stride = model.config().pool_stride;
  const int pooled_len = (n + stride - 1) / stride;
  Matrix pooled(pooled_len, features.cols());
  for (int j = 0; j < pooled_len; ++j)
    pooled.row(j) = features.middleRows(j * stride, std::min(stride, n - j * stride)).colwise().maxCoeff();

  const HighwayParams& hw = enc.highway;
  const Matrix g = sigmoid(affine(pooled, p.value(hw.gate_weights), p.value(hw.gate_bias)));
  const Matrix a = affine(pooled, p.value(hw.transform_weights), p.value(hw.transform_bias)).cwiseMax(0.0);
  const Matrix x = g.cwiseProduct(a) + (Matrix::Ones(g.rows(), g.cols()) - g).cwiseProduct(pooled);

  const int hd = model.config().encoder_hidden;
  Matrix out(pooled_len, 2 * hd);
  Matrix h = Matrix::Zero(1, hd);
  for (int t = 0; t < pooled_len; ++t) {
    h = gru(p, enc.forward, x.row(t), h);
    out.block(t, 0, 1, hd) = h;
  }
  h = Matrix::Zero(1, hd);
  for (int t = pooled_len - 1; t >= 0; --t) {
    h = gru(p, enc.backward, x.row(t), h);
    out.block(t, hd, 1, hd) = h;
  }
  return out;
}

}  // namespace plain

}  // namespace

TEST(Encoder, ShapeFollowsPoolStride) {
  ModelConfig c;
  Model m(Alphabet::standard(), c);
  init_params(m, 1, 0.01);
  const ContextSet ten = encode_query(m, encode(m.alphabet(), "abcdefghij"));
  EXPECT_EQ(ten.length(), 2);
  EXPECT_EQ(ten.dim(), 2 * c.encoder_hidden);
  EXPECT_EQ(encode_query(m, encode(m.alphabet(), "q")).length(), 1);
  EXPECT_EQ(encode_query(m, encode(m.alphabet(), "abcdefghijk")).length(), 3);
}

TEST(Encoder, RejectsEmptyAndControlIds) {
  Model m(Alphabet::standard(), small_config());
  EXPECT_THROW(encode_query(m, CharSequence{}), ContractViolation);
  EXPECT_THROW(encode_query(m, CharSequence{{0, m.alphabet().eos()}}), ContractViolation);
  EXPECT_THROW(encode_query(m, CharSequence{{0, 99}}), ContractViolation);
  EXPECT_NO_THROW(encode_query(m, CharSequence{{0, m.alphabet().unk()}}));
}

TEST(Encoder, MatchesPlainForwardPass) {
  const Model m = random_model(small_config(), 3, 0.5);
  for (const char* q : {"a", "ab", "abc", "car insurance", "jaguar 42 & co."}) {
    const CharSequence src = encode(m.alphabet(), q);
    const Matrix expected = plain::encode(m, src);
    const Matrix got = encode_query(m, src).vectors;
    ASSERT_EQ(got.rows(), expected.rows()) << q;
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-12) << q;
  }
}

TEST(Encoder, BatchSegmentsEqualSingleQueries) {
  const Model m = random_model(small_config(), 4, 0.5);
  const std::vector<CharSequence> srcs = {encode(m.alphabet(), "hello world"),
                                          encode(m.alphabet(), "x"),
                                          encode(m.alphabet(), "reformulate")};
  ad::Tape t(false);
  const EncodedBatch b = encode_batch(t, m, srcs);
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    const Matrix single = encode_query(m, srcs[i]).vectors;
    const auto& s = b.segments[i];
    ASSERT_EQ(s.length, single.rows());
    EXPECT_LT((b.context.value().middleRows(s.offset, s.length) - single).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Encoder, Deterministic) {
  const Model m = random_model(small_config(), 5, 0.5);
  const CharSequence src = encode(m.alphabet(), "deterministic");
  EXPECT_EQ(encode_query(m, src).vectors, encode_query(m, src).vectors);
}

TEST(Encoder, FiniteDifferenceGradient) {
  Model m = random_model(small_config(), 6, 0.5);
  const std::vector<CharSequence> srcs = {encode(m.alphabet(), "abcdefg"),
                                          encode(m.alphabet(), "zy x")};
  // Only encoder parameters influence the context set; the decoder ones are
  // checked to have zero gradient.
  const auto checks = oracle::check_builder(m.params(), [&](ad::Tape& t, const ParamSet&) {
    return encode_batch(t, m, srcs).context;
  }, 7);
  for (const auto& ch : checks) {
    if (ch.name.rfind("encoder/", 0) == 0)
      EXPECT_LT(ch.relative_error, 1e-4) << ch.name;
    else
      EXPECT_EQ(ch.analytic_norm, 0.0) << ch.name;
  }
}
