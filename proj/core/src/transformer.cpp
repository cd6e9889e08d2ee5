#include "quattro/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace quattro {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_linear(const LinearWeights& lw, int in, int out,
                  const std::string& name) {
  require(lw.weight.rows == in && lw.weight.cols == out &&
              lw.weight.data.size() == size_t(in) * size_t(out),
          name + ".weight must be " + std::to_string(in) + "x" +
              std::to_string(out));
  require(static_cast<int>(lw.bias.size()) == out,
          name + ".bias must have " + std::to_string(out) + " entries");
}

void check_norm(const LayerNormWeights& ln, int d, const std::string& name) {
  require(static_cast<int>(ln.gamma.size()) == d &&
              static_cast<int>(ln.beta.size()) == d,
          name + " must have " + std::to_string(d) + " entries");
}

LinearWeights zero_linear(int in, int out) {
  return LinearWeights{Tensor(in, out), std::vector<float>(size_t(out), 0.f)};
}

LayerNormWeights unit_norm(int d) {
  return LayerNormWeights{std::vector<float>(size_t(d), 1.f),
                          std::vector<float>(size_t(d), 0.f)};
}

// Uniform in [lo, hi) from the top 24 bits of a 64-bit draw; independent of
// the standard library's distribution implementations.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : gen_(seed) {}
  float operator()(float lo, float hi) {
    const float unit = static_cast<float>(gen_() >> 40) * 0x1.0p-24f;
    return lo + (hi - lo) * unit;
  }

 private:
  std::mt19937_64 gen_;
};

void fill(std::vector<float>& v, UniformSource& rng, float lo, float hi) {
  for (float& x : v) x = rng(lo, hi);
}

void fill_linear(LinearWeights& lw, UniformSource& rng) {
  const float a = 1.0f / std::sqrt(static_cast<float>(lw.weight.rows));
  fill(lw.weight.data, rng, -a, a);
  fill(lw.bias, rng, -a, a);
}

}  // namespace

void TransformerConfig::validate() const {
  require(state_dim > 0, "state_dim must be positive");
  require(gain_dim > 0 && gain_dim % (state_dim + 1) == 0,
          "gain_dim must be a multiple of state_dim + 1");
  require(horizon >= 1, "horizon must be at least 1");
  require(prompt_len >= 1 && prompt_len <= horizon,
          "prompt_len must lie in [1, horizon]");
  require(d_model > 0 && d_model % 2 == 0, "d_model must be positive and even");
  require(n_head > 0 && d_model % n_head == 0,
          "d_model must be divisible by n_head");
  require(n_layers >= 0, "n_layers must be non-negative");
  require(d_ff > 0, "d_ff must be positive");
}

TransformerConfig TransformerConfig::cartpole() {
  return TransformerConfig{4, 5, 30, 5, 128, 4, 3, 256};
}

TransformerConfig TransformerConfig::quadrotor() {
  return TransformerConfig{12, 52, 50, 1, 128, 4, 3, 512};
}

TransformerWeights make_weights(const TransformerConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_model;
  TransformerWeights w;
  w.state_mean.assign(size_t(cfg.state_dim), 0.f);
  w.state_std.assign(size_t(cfg.state_dim), 1.f);
  w.gain_mean.assign(size_t(cfg.gain_dim), 0.f);
  w.gain_std.assign(size_t(cfg.gain_dim), 1.f);
  w.state_embed = zero_linear(cfg.state_dim, d / 2);
  w.gain_embed = zero_linear(cfg.gain_dim + 1, d / 2);
  for (int l = 0; l < cfg.n_layers; ++l) {
    DecoderLayerWeights layer;
    layer.ln1 = unit_norm(d);
    layer.wq = zero_linear(d, d);
    layer.wk = zero_linear(d, d);
    layer.wv = zero_linear(d, d);
    layer.wo = zero_linear(d, d);
    layer.ln2 = unit_norm(d);
    layer.ff1 = zero_linear(d, cfg.d_ff);
    layer.ff2 = zero_linear(cfg.d_ff, d);
    w.layers.push_back(std::move(layer));
  }
  w.final_ln = unit_norm(d);
  w.head = zero_linear(d, cfg.gain_dim);
  return w;
}

TransformerWeights random_weights(const TransformerConfig& cfg,
                                  std::uint64_t seed) {
  TransformerWeights w = make_weights(cfg);
  UniformSource rng(seed);
  fill(w.state_mean, rng, -0.5f, 0.5f);
  fill(w.state_std, rng, 0.5f, 1.5f);
  fill(w.gain_mean, rng, -0.5f, 0.5f);
  fill(w.gain_std, rng, 0.5f, 1.5f);
  fill_linear(w.state_embed, rng);
  fill_linear(w.gain_embed, rng);
  for (auto& layer : w.layers) {
    fill(layer.ln1.gamma, rng, 0.8f, 1.2f);
    fill(layer.ln1.beta, rng, -0.1f, 0.1f);
    for (LinearWeights* lw : {&layer.wq, &layer.wk, &layer.wv, &layer.wo,
                              &layer.ff1, &layer.ff2}) {
      fill_linear(*lw, rng);
    }
    fill(layer.ln2.gamma, rng, 0.8f, 1.2f);
    fill(layer.ln2.beta, rng, -0.1f, 0.1f);
  }
  fill(w.final_ln.gamma, rng, 0.8f, 1.2f);
  fill(w.final_ln.beta, rng, -0.1f, 0.1f);
  fill_linear(w.head, rng);
  return w;
}

void check_shapes(const TransformerConfig& cfg, const TransformerWeights& w) {
  cfg.validate();
  const int d = cfg.d_model;
  const auto nx = size_t(cfg.state_dim), g = size_t(cfg.gain_dim);
  require(w.state_mean.size() == nx && w.state_std.size() == nx,
          "state normalization must have state_dim entries");
  require(w.gain_mean.size() == g && w.gain_std.size() == g,
          "gain normalization must have gain_dim entries");
  for (float s : w.state_std) require(s > 0, "state_std entries must be > 0");
  for (float s : w.gain_std) require(s > 0, "gain_std entries must be > 0");
  check_linear(w.state_embed, cfg.state_dim, d / 2, "state_embed");
  check_linear(w.gain_embed, cfg.gain_dim + 1, d / 2, "gain_embed");
  require(static_cast<int>(w.layers.size()) == cfg.n_layers,
          "layer count must equal n_layers");
  for (int l = 0; l < cfg.n_layers; ++l) {
    const auto& layer = w.layers[size_t(l)];
    const std::string p = "layers." + std::to_string(l) + ".";
    check_norm(layer.ln1, d, p + "ln1");
    check_linear(layer.wq, d, d, p + "wq");
    check_linear(layer.wk, d, d, p + "wk");
    check_linear(layer.wv, d, d, p + "wv");
    check_linear(layer.wo, d, d, p + "wo");
    check_norm(layer.ln2, d, p + "ln2");
    check_linear(layer.ff1, d, cfg.d_ff, p + "ff1");
    check_linear(layer.ff2, cfg.d_ff, d, p + "ff2");
  }
  check_norm(w.final_ln, d, "final_ln");
  check_linear(w.head, d, cfg.gain_dim, "head");
}

Vec stack_gains(const Vec& k, const Mat& K) {
  const auto m = k.size();
  const auto n = K.cols();
  if (K.rows() != m) throw InvalidInputError("k and K disagree on n_u");
  Vec out(m * (n + 1));
  out.head(m) = k;
  for (Eigen::Index r = 0; r < m; ++r) {
    out.segment(m + r * n, n) = K.row(r).transpose();
  }
  return out;
}

std::pair<Vec, Mat> unstack_gains(const Vec& stacked, int control_dim,
                                  int state_dim) {
  if (stacked.size() != control_dim * (state_dim + 1)) {
    throw InvalidInputError("stacked gain has wrong length");
  }
  Vec k = stacked.head(control_dim);
  Mat K(control_dim, state_dim);
  for (int r = 0; r < control_dim; ++r) {
    K.row(r) = stacked.segment(control_dim + r * state_dim, state_dim);
  }
  return {std::move(k), std::move(K)};
}

std::vector<float> positional_encoding(int position, int dim) {
  std::vector<float> pe(static_cast<size_t>(dim));
  for (int i = 0; 2 * i < dim; ++i) {
    const double angle =
        position / std::pow(10000.0, (2.0 * i) / static_cast<double>(dim));
    pe[size_t(2 * i)] = static_cast<float>(std::sin(angle));
    if (2 * i + 1 < dim) pe[size_t(2 * i + 1)] = static_cast<float>(std::cos(angle));
  }
  return pe;
}

// ---------------------------------------------------------------------------

namespace nn {

Tensor linear(const Tensor& x, const LinearWeights& lw) {
  const int in = lw.weight.rows;
  const int out = lw.weight.cols;
  if (x.cols != in) throw InvalidInputError("linear: input width mismatch");
  Tensor y(x.rows, out);
  for (int r = 0; r < x.rows; ++r) {
    float* yr = y.row(r);
    const float* xr = x.row(r);
    for (int j = 0; j < out; ++j) yr[j] = lw.bias[size_t(j)];
    for (int i = 0; i < in; ++i) {
      const float xi = xr[i];
      const float* wi = lw.weight.row(i);
      for (int j = 0; j < out; ++j) yr[j] += xi * wi[j];
    }
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const LayerNormWeights& ln, float eps) {
  Tensor y(x.rows, x.cols);
  const float n = static_cast<float>(x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const float* xr = x.row(r);
    float mean = 0.f;
    for (int c = 0; c < x.cols; ++c) mean += xr[c];
    mean /= n;
    float var = 0.f;
    for (int c = 0; c < x.cols; ++c) {
      const float dv = xr[c] - mean;
      var += dv * dv;
    }
    var /= n;
    const float inv = 1.0f / std::sqrt(var + eps);
    float* yr = y.row(r);
    for (int c = 0; c < x.cols; ++c) {
      yr[c] = (xr[c] - mean) * inv * ln.gamma[size_t(c)] + ln.beta[size_t(c)];
    }
  }
  return y;
}

float gelu(float v) {
  return 0.5f * v * (1.0f + std::erf(v * 0.70710678118654752f));
}

Tensor causal_self_attention(const Tensor& x, const DecoderLayerWeights& lw,
                             int n_head, std::vector<Tensor>* probs) {
  const Tensor q = linear(x, lw.wq);
  const Tensor k = linear(x, lw.wk);
  const Tensor v = linear(x, lw.wv);
  const int T = x.rows;
  const int d = q.cols;
  const int hd = d / n_head;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

  Tensor merged(T, d);
  if (probs) probs->assign(size_t(n_head), Tensor(T, T));
  std::vector<float> p(static_cast<size_t>(T));
  for (int h = 0; h < n_head; ++h) {
    const int off = h * hd;
    for (int i = 0; i < T; ++i) {
      float peak = -std::numeric_limits<float>::infinity();
      for (int j = 0; j <= i; ++j) {
        float dot = 0.f;
        for (int c = 0; c < hd; ++c) dot += q(i, off + c) * k(j, off + c);
        p[size_t(j)] = dot * scale;
        peak = std::max(peak, p[size_t(j)]);
      }
      float total = 0.f;
      for (int j = 0; j <= i; ++j) {
        p[size_t(j)] = std::exp(p[size_t(j)] - peak);
        total += p[size_t(j)];
      }
      // Masked positions (j > i) carry zero weight.
      for (int j = 0; j <= i; ++j) p[size_t(j)] /= total;
      float* out = merged.row(i) + off;
      for (int j = 0; j <= i; ++j) {
        const float pj = p[size_t(j)];
        for (int c = 0; c < hd; ++c) out[c] += pj * v(j, off + c);
      }
      if (probs) {
        for (int j = 0; j <= i; ++j) (*probs)[size_t(h)](i, j) = p[size_t(j)];
      }
    }
  }
  return linear(merged, lw.wo);
}

}  // namespace nn

TokenSequence embed(const StateTrajectory& X, const GainSequence& suffix,
                    const TransformerConfig& cfg,
                    const TransformerWeights& w) {
  const int T = cfg.horizon;
  const int nx = cfg.state_dim;
  const int g = cfg.gain_dim;
  const int nu = cfg.control_dim();
  const int known = suffix.size();
  if (static_cast<int>(X.size()) < T) {
    throw InvalidInputError("embed needs " + std::to_string(T) + " states, got " +
                            std::to_string(X.size()));
  }
  if (known < 1 || known > T || static_cast<int>(suffix.K.size()) != known) {
    throw InvalidInputError("known gain count must lie in [1, horizon]");
  }

  Tensor state_in(T, nx);
  Tensor gain_in(T, g + 1);
  for (int j = 0; j < T; ++j) {
    const int t = T - 1 - j;
    const Vec& x = X[size_t(t)];
    if (x.size() != nx) throw InvalidInputError("state dimension mismatch");
    for (int c = 0; c < nx; ++c) {
      state_in(j, c) = (static_cast<float>(x[c]) - w.state_mean[size_t(c)]) /
                       w.state_std[size_t(c)];
    }
    const int slot = t - (T - known);
    if (slot >= 0) {
      const Vec& k = suffix.k[size_t(slot)];
      const Mat& K = suffix.K[size_t(slot)];
      if (k.size() != nu || K.rows() != nu || K.cols() != nx) {
        throw InvalidInputError("gain dimension mismatch");
      }
      const Vec stacked = stack_gains(k, K);
      for (int c = 0; c < g; ++c) {
        gain_in(j, c) = (static_cast<float>(stacked[c]) - w.gain_mean[size_t(c)]) /
                        w.gain_std[size_t(c)];
      }
      gain_in(j, g) = 1.f;
    }
  }

  const Tensor se = nn::linear(state_in, w.state_embed);
  const Tensor ge = nn::linear(gain_in, w.gain_embed);
  const int half = cfg.d_model / 2;
  Tensor tokens(T, cfg.d_model);
  for (int j = 0; j < T; ++j) {
    const std::vector<float> pe = positional_encoding(j, cfg.d_model);
    float* out = tokens.row(j);
    for (int c = 0; c < half; ++c) out[c] = se(j, c) + pe[size_t(c)];
    for (int c = 0; c < half; ++c) out[half + c] = ge(j, c) + pe[size_t(half + c)];
  }
  return tokens;
}

TokenSequence decoder_forward(const TokenSequence& tokens,
                              const TransformerConfig& cfg,
                              const TransformerWeights& w,
                              DecoderTrace* trace) {
  if (tokens.cols != cfg.d_model) {
    throw InvalidInputError("token width differs from d_model");
  }
  Tensor x = tokens;
  if (trace) {
    trace->attention.clear();
    trace->ln1_input.clear();
  }
  for (const DecoderLayerWeights& layer : w.layers) {
    if (trace) trace->ln1_input.push_back(x);
    std::vector<Tensor> probs;
    const Tensor attn = nn::causal_self_attention(
        nn::layer_norm(x, layer.ln1), layer, cfg.n_head,
        trace ? &probs : nullptr);
    if (trace) trace->attention.push_back(std::move(probs));
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += attn.data[i];

    Tensor hidden = nn::linear(nn::layer_norm(x, layer.ln2), layer.ff1);
    for (float& v : hidden.data) v = nn::gelu(v);
    const Tensor ff = nn::linear(hidden, layer.ff2);
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += ff.data[i];
  }
  return nn::layer_norm(x, w.final_ln);
}

GainSequence predict_gains(const StateTrajectory& X,
                           const GainSequence& suffix,
                           const TransformerConfig& cfg,
                           const TransformerWeights& w) {
  const int T = cfg.horizon;
  const int known = suffix.size();
  if (known < 1 || known >= T) {
    throw ConfigError("suffix of " + std::to_string(known) +
                      " gains leaves nothing to predict for horizon " +
                      std::to_string(T));
  }
  if (static_cast<int>(X.size()) < T) {
    throw ConfigError("state trajectory shorter than the model horizon " +
                      std::to_string(T));
  }
  const TokenSequence out = decoder_forward(embed(X, suffix, cfg, w), cfg, w);

  const int unknown = T - known;
  Tensor rows(unknown, cfg.d_model);
  for (int j = known; j < T; ++j) {
    std::copy(out.row(j), out.row(j) + cfg.d_model, rows.row(j - known));
  }
  const Tensor head = nn::linear(rows, w.head);

  const int nu = cfg.control_dim();
  GainSequence pred;
  pred.k.resize(size_t(unknown));
  pred.K.resize(size_t(unknown));
  for (int r = 0; r < unknown; ++r) {
    const int t = T - 1 - (known + r);
    Vec stacked(cfg.gain_dim);
    for (int c = 0; c < cfg.gain_dim; ++c) {
      stacked[c] = static_cast<double>(head(r, c) * w.gain_std[size_t(c)] +
                                       w.gain_mean[size_t(c)]);
    }
    auto [k, K] = unstack_gains(stacked, nu, cfg.state_dim);
    pred.k[size_t(t)] = std::move(k);
    pred.K[size_t(t)] = std::move(K);
  }
  return pred;
}

Transformer::Transformer(TransformerConfig cfg, TransformerWeights w)
    : cfg_(cfg), w_(std::move(w)) {
  check_shapes(cfg_, w_);
}

Transformer Transformer::from_file(const std::filesystem::path& path) {
  WeightFile f = load_weights(path);
  return Transformer(f.config, std::move(f.weights));
}

}  // namespace quattro
