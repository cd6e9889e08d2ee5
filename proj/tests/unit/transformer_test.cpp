#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "quattro/transformer.hpp"

namespace quattro {
namespace {

TransformerConfig small_config() {
  return TransformerConfig{4, 5, 12, 3, 16, 4, 2, 24};
}

Tensor random_tokens(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  Tensor t(rows, cols);
  for (float& v : t.data) v = d(gen);
  return t;
}

StateTrajectory random_states(int count, int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  StateTrajectory X;
  for (int i = 0; i < count; ++i) {
    Vec x(n);
    for (int c = 0; c < n; ++c) x[c] = d(gen);
    X.push_back(x);
  }
  return X;
}

GainSequence random_gains(int count, int n, int m, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  GainSequence g;
  for (int i = 0; i < count; ++i) {
    Vec k(m);
    Mat K(m, n);
    for (int a = 0; a < m; ++a) k[a] = d(gen);
    for (Eigen::Index a = 0; a < K.size(); ++a) K.data()[a] = d(gen);
    g.k.push_back(k);
    g.K.push_back(K);
  }
  return g;
}

TEST(Transformer, OutputsAreCausal) {
  const TransformerConfig cfg = small_config();
  const TransformerWeights w = random_weights(cfg, 3);
  const Tensor base = random_tokens(cfg.horizon, cfg.d_model, 1);
  const Tensor out = decoder_forward(base, cfg, w);
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int cut = int(gen() % (cfg.horizon - 1));
    Tensor perturbed = base;
    for (int r = cut + 1; r < cfg.horizon; ++r) {
      for (int c = 0; c < cfg.d_model; ++c) perturbed(r, c) += float(int(gen() % 7) - 3);
    }
    const Tensor out2 = decoder_forward(perturbed, cfg, w);
    for (int r = 0; r <= cut; ++r) {
      for (int c = 0; c < cfg.d_model; ++c) ASSERT_EQ(out(r, c), out2(r, c));
    }
    bool changed = false;
    for (int c = 0; c < cfg.d_model; ++c) changed |= out(cut + 1, c) != out2(cut + 1, c);
    EXPECT_TRUE(changed);
  }
}

TEST(Transformer, AttentionRowsAreDistributions) {
  const TransformerConfig cfg = small_config();
  const TransformerWeights w = random_weights(cfg, 4);
  DecoderTrace trace;
  decoder_forward(random_tokens(cfg.horizon, cfg.d_model, 2), cfg, w, &trace);
  ASSERT_EQ(trace.attention.size(), size_t(cfg.n_layers));
  for (const auto& layer : trace.attention) {
    ASSERT_EQ(layer.size(), size_t(cfg.n_head));
    for (const Tensor& p : layer) {
      for (int i = 0; i < cfg.horizon; ++i) {
        double total = 0.0;
        for (int j = 0; j < cfg.horizon; ++j) {
          if (j > i) {
            EXPECT_EQ(p(i, j), 0.f);
          } else {
            EXPECT_GE(p(i, j), 0.f);
          }
          total += p(i, j);
        }
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
  }
}

TEST(Transformer, LayerNormNormalizesRows) {
  const Tensor x = random_tokens(5, 32, 7);
  LayerNormWeights ln{std::vector<float>(32, 1.f), std::vector<float>(32, 0.f)};
  const Tensor y = nn::layer_norm(x, ln);
  for (int r = 0; r < 5; ++r) {
    double mean = 0, var = 0;
    for (int c = 0; c < 32; ++c) mean += y(r, c);
    mean /= 32;
    for (int c = 0; c < 32; ++c) var += (y(r, c) - mean) * (y(r, c) - mean);
    var /= 32;
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-3);
  }
  // Scale and shift act per column.
  ln.gamma.assign(32, 2.f);
  ln.beta.assign(32, 0.5f);
  const Tensor z = nn::layer_norm(x, ln);
  EXPECT_FLOAT_EQ(z(1, 3), 2.f * y(1, 3) + 0.5f);
}

TEST(Transformer, RepeatedInferenceIsBitIdentical) {
  const TransformerConfig cfg = small_config();
  const Transformer tf(cfg, random_weights(cfg, 5));
  const auto X = random_states(cfg.horizon + 1, 4, 1);
  const auto suffix = random_gains(3, 4, 1, 2);
  const GainSequence a = tf.predict(X, suffix);
  const GainSequence b = tf.predict(X, suffix);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ(a.K, b.K);
  ASSERT_EQ(a.size(), cfg.horizon - 3);
  EXPECT_EQ(a.K[0].rows(), 1);
  EXPECT_EQ(a.K[0].cols(), 4);
  EXPECT_TRUE(a.all_finite());
}

TEST(Transformer, PredictionRejectsBadSuffix) {
  const TransformerConfig cfg = small_config();
  const Transformer tf(cfg, random_weights(cfg, 5));
  const auto X = random_states(cfg.horizon + 1, 4, 1);
  EXPECT_THROW(tf.predict(X, GainSequence{}), ConfigError);
  EXPECT_THROW(tf.predict(X, random_gains(cfg.horizon, 4, 1, 1)), ConfigError);
  EXPECT_THROW(tf.predict(random_states(3, 4, 1), random_gains(2, 4, 1, 1)), ConfigError);
}

TEST(Transformer, EmbeddingOrdersTokensBackwardAndFlagsKnownGains) {
  TransformerConfig cfg{2, 3, 5, 2, 8, 2, 0, 4};
  TransformerWeights w = make_weights(cfg);
  // State half copies x_0 into column 0; gain half copies the known flag.
  w.state_embed.weight(0, 0) = 1.f;
  for (int c = 0; c < cfg.d_model / 2; ++c) w.gain_embed.weight(cfg.gain_dim, c) = 1.f;
  StateTrajectory X;
  for (int t = 0; t < 5; ++t) X.push_back((Vec(2) << double(t), 0.0).finished());
  const Tensor tokens = embed(X, random_gains(2, 2, 1, 3), cfg, w);
  for (int j = 0; j < 5; ++j) {
    const auto pe = positional_encoding(j, 8);
    EXPECT_FLOAT_EQ(tokens(j, 0), float(4 - j) + pe[0]);
    const float flag = j < 2 ? 1.f : 0.f;
    for (int c = 4; c < 8; ++c) EXPECT_FLOAT_EQ(tokens(j, c), flag + pe[size_t(c)]);
  }
}

TEST(Transformer, PositionalEncodingValues) {
  const auto pe0 = positional_encoding(0, 6);
  EXPECT_EQ(pe0, (std::vector<float>{0, 1, 0, 1, 0, 1}));
  const auto pe = positional_encoding(3, 6);
  EXPECT_FLOAT_EQ(pe[0], float(std::sin(3.0)));
  EXPECT_FLOAT_EQ(pe[3], float(std::cos(3.0 / std::pow(10000.0, 2.0 / 6.0))));
  EXPECT_FLOAT_EQ(pe[4], float(std::sin(3.0 / std::pow(10000.0, 4.0 / 6.0))));
}

TEST(Transformer, GeluMatchesErfForm) {
  EXPECT_EQ(nn::gelu(0.f), 0.f);
  EXPECT_NEAR(nn::gelu(1.f), 0.8413447460685429, 1e-6);
  EXPECT_NEAR(nn::gelu(-1.f), -0.15865525393145707, 1e-6);
  EXPECT_NEAR(nn::gelu(3.f), 2.9959502, 1e-6);
}

TEST(Transformer, LinearIsRowVectorTimesWeight) {
  LinearWeights lw{Tensor(2, 3), {0.5f, 0.f, -1.f}};
  lw.weight.data = {1, 2, 3, 4, 5, 6};
  Tensor x(1, 2);
  x.data = {1.f, -1.f};
  const Tensor y = nn::linear(x, lw);
  EXPECT_EQ(y.data, (std::vector<float>{-2.5f, -3.f, -4.f}));
  EXPECT_THROW(nn::linear(Tensor(1, 3), lw), InvalidInputError);
}

TEST(Transformer, StackUnstackRoundTrip) {
  Vec k(2);
  k << 1, 2;
  Mat K(2, 3);
  K << 3, 4, 5, 6, 7, 8;
  const Vec s = stack_gains(k, K);
  EXPECT_EQ(s, (Vec(8) << 1, 2, 3, 4, 5, 6, 7, 8).finished());
  const auto [k2, K2] = unstack_gains(s, 2, 3);
  EXPECT_EQ(k2, k);
  EXPECT_EQ(K2, K);
  EXPECT_THROW(unstack_gains(s, 2, 2), InvalidInputError);
}

TEST(Transformer, ConfigValidation) {
  EXPECT_NO_THROW(TransformerConfig::cartpole().validate());
  EXPECT_NO_THROW(TransformerConfig::quadrotor().validate());
  EXPECT_EQ(TransformerConfig::quadrotor().control_dim(), 4);
  TransformerConfig c = small_config();
  c.n_head = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.gain_dim = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.d_model = 15;
  EXPECT_THROW(c.validate(), ConfigError);
  TransformerWeights w = make_weights(small_config());
  w.layers[1].ff2.bias.pop_back();
  try {
    check_shapes(small_config(), w);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("layers.1.ff2.bias"), std::string::npos);
  }
}

TEST(Transformer, MatchesIndependentReferenceOnGoldenInput) {
  const std::string dir = QUATTRO_TEST_DATA;
  std::ifstream in(dir + "/tiny_golden.json");
  ASSERT_TRUE(in) << "missing golden file";
  const nlohmann::json golden = nlohmann::json::parse(in);
  const Transformer tf = Transformer::from_file(dir + "/" + golden["weights"].get<std::string>());
  const auto& cfg = tf.config();

  StateTrajectory X;
  for (const auto& row : golden["X"]) {
    const auto v = row.get<std::vector<double>>();
    X.push_back(Eigen::Map<const Vec>(v.data(), Eigen::Index(v.size())));
  }
  GainSequence suffix;
  for (const auto& row : golden["suffix"]) {
    const auto v = row.get<std::vector<double>>();
    auto [k, K] = unstack_gains(Eigen::Map<const Vec>(v.data(), Eigen::Index(v.size())),
                                cfg.control_dim(), cfg.state_dim);
    suffix.k.push_back(k);
    suffix.K.push_back(K);
  }
  const GainSequence pred = tf.predict(X, suffix);
  const auto& expected = golden["expected"];
  ASSERT_EQ(pred.size(), int(expected.size()));
  for (int t = 0; t < pred.size(); ++t) {
    const Vec got = stack_gains(pred.k[t], pred.K[t]);
    const auto want = expected[size_t(t)].get<std::vector<double>>();
    for (size_t c = 0; c < want.size(); ++c) {
      EXPECT_NEAR(got[Eigen::Index(c)], want[c], 1e-4) << "t=" << t << " c=" << c;
    }
  }
}

}  // namespace
}  // namespace quattro
