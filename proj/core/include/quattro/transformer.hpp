#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "quattro/ilqr.hpp"

namespace quattro {

/// Row-major float32 tensor. Matrices act on row vectors: y = x W + b.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(size_t(r) * size_t(c), 0.f) {}

  float& operator()(int r, int c) { return data[size_t(r) * cols + c]; }
  float operator()(int r, int c) const { return data[size_t(r) * cols + c]; }
  float* row(int r) { return data.data() + size_t(r) * cols; }
  const float* row(int r) const { return data.data() + size_t(r) * cols; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct TransformerConfig {
  int state_dim = 4;
  int gain_dim = 5;  // n_u * (n_x + 1)
  int horizon = 30;
  int prompt_len = 5;  // default number of backward-pass steps computed
  int d_model = 128;
  int n_head = 4;
  int n_layers = 3;
  int d_ff = 256;

  int control_dim() const { return gain_dim / (state_dim + 1); }
  int head_dim() const { return d_model / n_head; }
  void validate() const;

  friend bool operator==(const TransformerConfig&,
                         const TransformerConfig&) = default;

  static TransformerConfig cartpole();  // d_ff 256, T 30, prompt 5
  static TransformerConfig quadrotor();  // d_ff 512, T 50, prompt 1
};

struct LinearWeights {
  Tensor weight;  // in x out
  std::vector<float> bias;  // out

  friend bool operator==(const LinearWeights&, const LinearWeights&) = default;
};

struct LayerNormWeights {
  std::vector<float> gamma;
  std::vector<float> beta;

  friend bool operator==(const LayerNormWeights&,
                         const LayerNormWeights&) = default;
};

struct DecoderLayerWeights {
  LayerNormWeights ln1;
  LinearWeights wq, wk, wv, wo;
  LayerNormWeights ln2;
  LinearWeights ff1, ff2;

  friend bool operator==(const DecoderLayerWeights&,
                         const DecoderLayerWeights&) = default;
};

struct TransformerWeights {
  std::vector<float> state_mean, state_std;
  std::vector<float> gain_mean, gain_std;
  LinearWeights state_embed;  // n_x -> d_model/2
  LinearWeights gain_embed;   // g + 1 -> d_model/2 (last input: known flag)
  std::vector<DecoderLayerWeights> layers;
  LayerNormWeights final_ln;
  LinearWeights head;  // d_model -> g

  friend bool operator==(const TransformerWeights&,
                         const TransformerWeights&) = default;
};

/// Zero-initialized weights with unit std and unit layer-norm scales.
TransformerWeights make_weights(const TransformerConfig& cfg);

/// Seeded random weights (uniform, fan-in scaled) for tests and timing.
TransformerWeights random_weights(const TransformerConfig& cfg,
                                  std::uint64_t seed);

/// Throws ConfigError naming the first tensor whose shape disagrees.
void check_shapes(const TransformerConfig& cfg, const TransformerWeights& w);

/// [k (n_u), K row-major (n_u * n_x)].
Vec stack_gains(const Vec& k, const Mat& K);
std::pair<Vec, Mat> unstack_gains(const Vec& stacked, int control_dim,
                                  int state_dim);

/// Sinusoidal encoding: PE[2i] = sin(pos / 10000^(2i/d)),
/// PE[2i+1] = cos(pos / 10000^(2i/d)).
std::vector<float> positional_encoding(int position, int dim);

/// T tokens of width d_model; token j describes time step T-1-j.
using TokenSequence = Tensor;

/// Builds the token sequence from the first T states and the known gains of
/// the last `suffix.size()` time steps (ordered by time).
TokenSequence embed(const StateTrajectory& X, const GainSequence& suffix,
                    const TransformerConfig& cfg,
                    const TransformerWeights& w);

namespace nn {

/// y = x W + b for every row of x. Each output is accumulated in input
/// order, so results do not depend on threading or vector width.
Tensor linear(const Tensor& x, const LinearWeights& lw);

/// Per-row normalization to zero mean and unit variance, then scale/shift.
Tensor layer_norm(const Tensor& x, const LayerNormWeights& ln,
                  float eps = 1e-5f);

/// Exact erf-based GELU.
float gelu(float v);

/// Causal multi-head self-attention. If `probs` is non-null it receives one
/// T x T matrix of attention weights per head.
Tensor causal_self_attention(const Tensor& x, const DecoderLayerWeights& lw,
                             int n_head, std::vector<Tensor>* probs = nullptr);

}  // namespace nn

/// Intermediate values of a forward pass, for inspection.
struct DecoderTrace {
  std::vector<std::vector<Tensor>> attention;  // [layer][head]
  std::vector<Tensor> ln1_input;  // residual stream entering each layer
};

/// n_layers x [pre-LN, causal MHA, residual, pre-LN, GELU FFN, residual],
/// then the final layer norm.
TokenSequence decoder_forward(const TokenSequence& tokens,
                              const TransformerConfig& cfg,
                              const TransformerWeights& w,
                              DecoderTrace* trace = nullptr);

/// One-shot prediction of the gains for time steps 0 .. T-1-|suffix|, in time
/// order. `X` must hold at least T states; only the first T are used.
GainSequence predict_gains(const StateTrajectory& X,
                           const GainSequence& suffix,
                           const TransformerConfig& cfg,
                           const TransformerWeights& w);

/// QTFW reader/writer. Errors name the field that failed.
struct WeightFile {
  TransformerConfig config;
  TransformerWeights weights;
};

WeightFile load_weights(const std::filesystem::path& path);
WeightFile parse_weights(const std::string& bytes);
void save_weights(const std::filesystem::path& path,
                  const TransformerConfig& cfg, const TransformerWeights& w);
std::string serialize_weights(const TransformerConfig& cfg,
                              const TransformerWeights& w);

/// Owns a configuration and its weights.
class Transformer {
 public:
  Transformer(TransformerConfig cfg, TransformerWeights w);
  static Transformer from_file(const std::filesystem::path& path);

  const TransformerConfig& config() const { return cfg_; }
  const TransformerWeights& weights() const { return w_; }

  GainSequence predict(const StateTrajectory& X,
                       const GainSequence& suffix) const {
    return predict_gains(X, suffix, cfg_, w_);
  }

 private:
  TransformerConfig cfg_;
  TransformerWeights w_;
};

}  // namespace quattro
