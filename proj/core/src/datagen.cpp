#include "quattro/datagen.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include "binary_io.hpp"

namespace quattro {
namespace {

constexpr std::string_view kMagic = "QDTA";
constexpr std::uint32_t kVersion = 1;
// magic + version + system id + n_x + n_u + T, then the u64 record count.
constexpr std::streamoff kCountOffset = 4 + 4 * 5;

double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = gen();
  } while (r >= limit);
  return r % bound;
}

void write_header(detail::ByteWriter& out, const DatasetHeader& h) {
  out.raw(kMagic);
  out.u32(kVersion);
  out.u32(h.system_id);
  out.u32(h.state_dim);
  out.u32(h.control_dim);
  out.u32(h.horizon);
  out.u64(h.record_count);
}

void write_record(detail::ByteWriter& out, const DatasetHeader& h,
                  const DatasetRecord& r) {
  const size_t T = h.horizon, n = h.state_dim, m = h.control_dim;
  if (r.X.size() != (T + 1) * n || r.k.size() != T * m ||
      r.K.size() != T * m * n || r.U.size() != T * m) {
    throw InvalidInputError("dataset record does not match the header dims");
  }
  out.u32(r.mpc_step);
  out.u32(r.iteration);
  out.u8(r.status);
  for (const auto* v : {&r.X, &r.k, &r.K, &r.U}) {
    for (float f : *v) out.f32(f);
  }
}

}  // namespace

void SamplingSpec::validate() const {
  if (state_dim <= 0) throw ConfigError("sampling state_dim must be positive");
  if (free_dims.size() != low.size() || free_dims.size() != high.size()) {
    throw ConfigError("sampling bounds must match the free dimensions");
  }
  for (size_t d = 0; d < free_dims.size(); ++d) {
    if (free_dims[d] < 0 || free_dims[d] >= state_dim) {
      throw ConfigError("free dimension out of range");
    }
    if (!(low[d] <= high[d]) || !std::isfinite(low[d]) || !std::isfinite(high[d])) {
      throw ConfigError("sampling bounds need low <= high");
    }
  }
  if (mode == SamplingMode::kGrid && !(grid_step > 0)) {
    throw ConfigError("grid step must be positive");
  }
  if (mode == SamplingMode::kLhs && count < 1) {
    throw ConfigError("LHS count must be at least 1");
  }
}

SamplingSpec SamplingSpec::cartpole_grid() {
  SamplingSpec s;
  s.mode = SamplingMode::kGrid;
  s.state_dim = 4;
  s.free_dims = {0, 1};
  s.low = {-0.5, -0.5};
  s.high = {0.5, 0.5};
  s.grid_step = 0.05;
  return s;
}

SamplingSpec SamplingSpec::quadrotor_lhs(int count, std::uint64_t seed) {
  SamplingSpec s;
  s.mode = SamplingMode::kLhs;
  s.state_dim = 12;
  s.free_dims = {0, 1, 2, 3, 4, 5};
  s.low = {-0.3, -0.3, 0.2, -0.2, -0.2, -0.5};
  s.high = {0.3, 0.3, 0.5, 0.2, 0.2, 0.5};
  s.count = count;
  s.seed = seed;
  return s;
}

std::vector<Vec> grid_states(const SamplingSpec& spec) {
  spec.validate();
  std::vector<std::vector<double>> axes;
  for (size_t d = 0; d < spec.free_dims.size(); ++d) {
    const double span = spec.high[d] - spec.low[d];
    const auto n = static_cast<long>(std::floor(span / spec.grid_step + 1e-9)) + 1;
    std::vector<double> axis;
    for (long j = 0; j < n; ++j) axis.push_back(spec.low[d] + double(j) * spec.grid_step);
    if (std::abs(axis.back() - spec.high[d]) <= 1e-9 * spec.grid_step) {
      axis.back() = spec.high[d];
    }
    axes.push_back(std::move(axis));
  }

  std::vector<Vec> states;
  std::vector<size_t> idx(axes.size(), 0);
  while (true) {
    Vec x = Vec::Zero(spec.state_dim);
    for (size_t d = 0; d < axes.size(); ++d) x[spec.free_dims[d]] = axes[d][idx[d]];
    states.push_back(std::move(x));
    // Odometer increment, last dimension fastest.
    size_t d = axes.size();
    while (d > 0) {
      --d;
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
      if (d == 0) return states;
    }
    if (axes.empty()) return states;
  }
}

std::vector<Vec> lhs_states(const SamplingSpec& spec) {
  spec.validate();
  const int N = spec.count;
  std::mt19937_64 gen(spec.seed);
  std::vector<Vec> states(static_cast<size_t>(N), Vec::Zero(spec.state_dim));
  std::vector<int> strata(static_cast<size_t>(N));
  for (size_t d = 0; d < spec.free_dims.size(); ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    for (int i = N - 1; i > 0; --i) {
      const auto j = static_cast<int>(bounded(gen, std::uint64_t(i) + 1));
      std::swap(strata[size_t(i)], strata[size_t(j)]);
    }
    const double width = (spec.high[d] - spec.low[d]) / N;
    for (int i = 0; i < N; ++i) {
      const double offset = unit_uniform(gen);
      states[size_t(i)][spec.free_dims[d]] =
          spec.low[d] + (strata[size_t(i)] + offset) * width;
    }
  }
  return states;
}

std::vector<Vec> sample_states(const SamplingSpec& spec) {
  return spec.mode == SamplingMode::kGrid ? grid_states(spec) : lhs_states(spec);
}

// ---------------------------------------------------------------------------

DatasetRecord DatasetRecord::from_episode(const Episode& ep) {
  DatasetRecord r;
  r.mpc_step = static_cast<std::uint32_t>(ep.mpc_step);
  r.iteration = static_cast<std::uint32_t>(ep.iteration);
  r.status = ep.converged ? 1 : 0;
  for (const Vec& x : ep.X) {
    for (Eigen::Index i = 0; i < x.size(); ++i) r.X.push_back(float(x[i]));
  }
  for (const Vec& k : ep.gains.k) {
    for (Eigen::Index i = 0; i < k.size(); ++i) r.k.push_back(float(k[i]));
  }
  for (const Mat& K : ep.gains.K) {
    for (Eigen::Index a = 0; a < K.rows(); ++a) {
      for (Eigen::Index b = 0; b < K.cols(); ++b) r.K.push_back(float(K(a, b)));
    }
  }
  for (const Vec& u : ep.U) {
    for (Eigen::Index i = 0; i < u.size(); ++i) r.U.push_back(float(u[i]));
  }
  return r;
}

Trajectory DatasetRecord::trajectory(const DatasetHeader& h) const {
  const int T = int(h.horizon), n = int(h.state_dim), m = int(h.control_dim);
  Trajectory t;
  for (int i = 0; i <= T; ++i) {
    Vec x(n);
    for (int c = 0; c < n; ++c) x[c] = X[size_t(i * n + c)];
    t.X.push_back(std::move(x));
  }
  for (int i = 0; i < T; ++i) {
    Vec u(m);
    for (int c = 0; c < m; ++c) u[c] = U[size_t(i * m + c)];
    t.U.push_back(std::move(u));
  }
  return t;
}

GainSequence DatasetRecord::gains(const DatasetHeader& h) const {
  const int T = int(h.horizon), n = int(h.state_dim), m = int(h.control_dim);
  GainSequence g;
  for (int i = 0; i < T; ++i) {
    Vec kv(m);
    Mat Km(m, n);
    for (int a = 0; a < m; ++a) {
      kv[a] = k[size_t(i * m + a)];
      for (int b = 0; b < n; ++b) Km(a, b) = K[size_t((i * m + a) * n + b)];
    }
    g.k.push_back(std::move(kv));
    g.K.push_back(std::move(Km));
  }
  return g;
}

std::string serialize_dataset(const Dataset& data) {
  DatasetHeader h = data.header;
  h.record_count = data.records.size();
  detail::ByteWriter out;
  write_header(out, h);
  for (const auto& r : data.records) write_record(out, h, r);
  return std::move(out.bytes());
}

Dataset parse_dataset(const std::string& bytes) {
  detail::ByteReader in(bytes);
  if (in.remaining() < kMagic.size() || in.raw(kMagic.size(), "magic") != kMagic) {
    throw FormatError("bad magic");
  }
  const auto version = in.u32("header field version");
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version));
  }
  Dataset data;
  DatasetHeader& h = data.header;
  h.system_id = in.u32("header field system_id");
  if (h.system_id != 1 && h.system_id != 2) {
    throw FormatError("invalid system_id " + std::to_string(h.system_id));
  }
  h.state_dim = in.u32("header field state_dim");
  h.control_dim = in.u32("header field control_dim");
  h.horizon = in.u32("header field horizon");
  for (auto [name, v] : {std::pair{"state_dim", h.state_dim},
                         std::pair{"control_dim", h.control_dim},
                         std::pair{"horizon", h.horizon}}) {
    if (v == 0 || v > (1u << 16)) {
      throw FormatError(std::string("invalid dims: ") + name + " = " + std::to_string(v));
    }
  }
  h.record_count = in.u64("header field record_count");

  const size_t T = h.horizon, n = h.state_dim, m = h.control_dim;
  const size_t record_bytes = 9 + 4 * ((T + 1) * n + T * m + T * m * n + T * m);
  if (h.record_count > in.remaining() / record_bytes + 1) {
    throw FormatError("unexpected end of file: record_count " +
                      std::to_string(h.record_count) + " exceeds file size");
  }
  data.records.reserve(size_t(h.record_count));
  for (std::uint64_t i = 0; i < h.record_count; ++i) {
    const std::string p = "record " + std::to_string(i) + " field ";
    DatasetRecord r;
    r.mpc_step = in.u32(p + "mpc_step");
    r.iteration = in.u32(p + "iter");
    r.status = in.u8(p + "status");
    if (r.status > 1) throw FormatError(p + "status has invalid value");
    const std::pair<const char*, std::pair<std::vector<float>*, size_t>> fields[] = {
        {"X", {&r.X, (T + 1) * n}},
        {"k", {&r.k, T * m}},
        {"K", {&r.K, T * m * n}},
        {"U", {&r.U, T * m}}};
    for (const auto& [name, target] : fields) {
      target.first->resize(target.second);
      for (float& f : *target.first) f = in.f32(p + name);
    }
    data.records.push_back(std::move(r));
  }
  if (in.remaining() != 0) {
    throw FormatError("trailing bytes after record " +
                      std::to_string(h.record_count));
  }
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path.string()));
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_file_atomic(path.string(), serialize_dataset(data));
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path,
                             DatasetHeader header)
    : path_(path), tmp_(path.string() + ".tmp"), header_(header) {
  header_.record_count = 0;
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("cannot open " + tmp_.string() + " for writing");
  detail::ByteWriter w;
  write_header(w, header_);
  out_.write(w.bytes().data(), std::streamsize(w.bytes().size()));
}

DatasetWriter::~DatasetWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void DatasetWriter::append(const DatasetRecord& record) {
  detail::ByteWriter w;
  write_record(w, header_, record);
  out_.write(w.bytes().data(), std::streamsize(w.bytes().size()));
  if (!out_) throw Error("write error on " + tmp_.string());
  ++header_.record_count;
}

std::uint64_t DatasetWriter::finish() {
  detail::ByteWriter count;
  count.u64(header_.record_count);
  out_.seekp(kCountOffset);
  out_.write(count.bytes().data(), 8);
  out_.close();
  if (!out_) throw Error("write error on " + tmp_.string());
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw Error("cannot rename " + tmp_.string() + ": " + ec.message());
  finished_ = true;
  return header_.record_count;
}

std::uint64_t generate_dataset(const SystemModel& model, const CostModel& cost,
                               SystemKind system,
                               const std::vector<Vec>& initial_states,
                               const MpcConfig& config,
                               const std::filesystem::path& path, int threads) {
  if (config.controller != ControllerKind::kIlqr) {
    throw ConfigError("datasets are generated with the vanilla iLQR controller");
  }
  config.validate();
  DatasetHeader header;
  header.system_id = static_cast<std::uint32_t>(system);
  header.state_dim = std::uint32_t(model.state_dim());
  header.control_dim = std::uint32_t(model.control_dim());
  header.horizon = std::uint32_t(config.horizon);
  DatasetWriter writer(path, header);

  auto simulate = [&](const Vec& x0) {
    std::vector<DatasetRecord> records;
    run_mpc(model, cost, config, x0, nullptr, [&](const Episode& ep) {
      records.push_back(DatasetRecord::from_episode(ep));
    });
    return records;
  };

  const size_t batch = size_t(std::max(1, threads));
  for (size_t first = 0; first < initial_states.size(); first += batch) {
    const size_t last = std::min(initial_states.size(), first + batch);
    std::vector<std::future<std::vector<DatasetRecord>>> jobs;
    for (size_t i = first; i < last; ++i) {
      jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                simulate, std::cref(initial_states[i])));
    }
    for (auto& job : jobs) {
      for (const auto& r : job.get()) writer.append(r);
    }
  }
  return writer.finish();
}

}  // namespace quattro
