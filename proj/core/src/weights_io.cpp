// QTFW: transformer weight file.
//
//   "QTFW" | u32 version = 1
//   u32 state_dim, gain_dim, horizon, prompt_len, d_model, n_head, n_layers, d_ff
//   f32 state_mean[n_x], state_std[n_x], gain_mean[g], gain_std[g]
//   f32 tensors in the order produced by for_each_tensor below, row-major,
//   no padding, nothing after the last tensor.

#include <filesystem>
#include <fstream>
#include <functional>

#include "binary_io.hpp"
#include "quattro/transformer.hpp"

namespace quattro {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read error on " + path);
  return bytes;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write error on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

namespace {

constexpr std::string_view kMagic = "QTFW";
constexpr std::uint32_t kVersion = 1;

using TensorVisitor =
    std::function<void(const std::string& name, std::vector<float>& values)>;

void visit_linear(const std::string& name, LinearWeights& lw,
                  const TensorVisitor& fn) {
  fn(name + ".weight", lw.weight.data);
  fn(name + ".bias", lw.bias);
}

void visit_norm(const std::string& name, LayerNormWeights& ln,
                const TensorVisitor& fn) {
  fn(name + ".gamma", ln.gamma);
  fn(name + ".beta", ln.beta);
}

// Fixed on-disk order of every array after the header.
void for_each_tensor(TransformerWeights& w, const TensorVisitor& fn) {
  fn("state_mean", w.state_mean);
  fn("state_std", w.state_std);
  fn("gain_mean", w.gain_mean);
  fn("gain_std", w.gain_std);
  visit_linear("state_embed", w.state_embed, fn);
  visit_linear("gain_embed", w.gain_embed, fn);
  for (size_t l = 0; l < w.layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    auto& layer = w.layers[l];
    visit_norm(p + "ln1", layer.ln1, fn);
    visit_linear(p + "wq", layer.wq, fn);
    visit_linear(p + "wk", layer.wk, fn);
    visit_linear(p + "wv", layer.wv, fn);
    visit_linear(p + "wo", layer.wo, fn);
    visit_norm(p + "ln2", layer.ln2, fn);
    visit_linear(p + "ff1", layer.ff1, fn);
    visit_linear(p + "ff2", layer.ff2, fn);
  }
  visit_norm("final_ln", w.final_ln, fn);
  visit_linear("head", w.head, fn);
}

}  // namespace

std::string serialize_weights(const TransformerConfig& cfg,
                              const TransformerWeights& w) {
  check_shapes(cfg, w);
  detail::ByteWriter out;
  out.raw(kMagic);
  out.u32(kVersion);
  for (int v : {cfg.state_dim, cfg.gain_dim, cfg.horizon, cfg.prompt_len,
                cfg.d_model, cfg.n_head, cfg.n_layers, cfg.d_ff}) {
    out.u32(static_cast<std::uint32_t>(v));
  }
  // The visitor only reads; the copy keeps the interface const.
  TransformerWeights copy = w;
  for_each_tensor(copy, [&](const std::string&, std::vector<float>& values) {
    for (float v : values) out.f32(v);
  });
  return std::move(out.bytes());
}

WeightFile parse_weights(const std::string& bytes) {
  detail::ByteReader in(bytes);
  if (in.remaining() < kMagic.size() ||
      in.raw(kMagic.size(), "magic") != kMagic) {
    throw FormatError("bad magic");
  }
  const std::uint32_t version = in.u32("header field version");
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version));
  }

  WeightFile file;
  TransformerConfig& cfg = file.config;
  const char* names[] = {"state_dim", "gain_dim", "horizon", "prompt_len",
                         "d_model",   "n_head",   "n_layers", "d_ff"};
  int* fields[] = {&cfg.state_dim, &cfg.gain_dim, &cfg.horizon,
                   &cfg.prompt_len, &cfg.d_model, &cfg.n_head,
                   &cfg.n_layers, &cfg.d_ff};
  for (int i = 0; i < 8; ++i) {
    const std::uint32_t v = in.u32(std::string("header field ") + names[i]);
    if (v > (1u << 24)) {
      throw FormatError(std::string("invalid dims: ") + names[i] + " = " +
                        std::to_string(v));
    }
    *fields[i] = static_cast<int>(v);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid dims: ") + e.what());
  }

  file.weights = make_weights(cfg);
  for_each_tensor(file.weights,
                  [&](const std::string& name, std::vector<float>& values) {
                    const std::string what = "tensor " + name;
                    for (float& v : values) v = in.f32(what);
                  });
  if (in.remaining() != 0) {
    throw FormatError("trailing bytes after tensor head.bias");
  }
  try {
    check_shapes(cfg, file.weights);
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  return file;
}

WeightFile load_weights(const std::filesystem::path& path) {
  return parse_weights(read_file(path.string()));
}

void save_weights(const std::filesystem::path& path,
                  const TransformerConfig& cfg, const TransformerWeights& w) {
  write_file_atomic(path.string(), serialize_weights(cfg, w));
}

}  // namespace quattro
