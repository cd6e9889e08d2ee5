#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "quattro/mpc.hpp"

namespace quattro {

enum class SamplingMode { kGrid, kLhs };

/// Initial-state sampling over a subset of state coordinates; every other
/// coordinate is zero.
struct SamplingSpec {
  SamplingMode mode = SamplingMode::kGrid;
  int state_dim = 4;
  std::vector<int> free_dims;
  std::vector<double> low;
  std::vector<double> high;
  double grid_step = 0.05;   // grid mode
  int count = 1;             // lhs mode
  std::uint64_t seed = 0;    // lhs mode

  void validate() const;

  /// x and theta on [-0.5, 0.5] in 0.05 increments.
  static SamplingSpec cartpole_grid();
  /// 2000 LHS states: x, y in [-0.3, 0.3], z in [0.2, 0.5], roll and pitch in
  /// [-0.2, 0.2], yaw in [-0.5, 0.5].
  static SamplingSpec quadrotor_lhs(int count = 2000, std::uint64_t seed = 0);
};

/// Cartesian product over the free dimensions, endpoints inclusive, ascending
/// with the last free dimension varying fastest. Values are low + j * step,
/// with the final value snapped to high.
std::vector<Vec> grid_states(const SamplingSpec& spec);

/// Latin hypercube sample. For each free dimension in order: a Fisher-Yates
/// shuffle of the N strata, then one uniform offset per sample. Randomness
/// comes from std::mt19937_64 seeded with `seed`; unit uniforms take the top
/// 53 bits of a draw, and shuffle indices use rejection sampling, so the
/// output is identical on every conforming platform.
std::vector<Vec> lhs_states(const SamplingSpec& spec);

std::vector<Vec> sample_states(const SamplingSpec& spec);

// --- QDTA dataset files ------------------------------------------------------

struct DatasetHeader {
  std::uint32_t system_id = 1;  // 1 cart-pole, 2 quadrotor
  std::uint32_t state_dim = 0;
  std::uint32_t control_dim = 0;
  std::uint32_t horizon = 0;
  std::uint64_t record_count = 0;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

/// Record as stored on disk: float32 tensors, row-major.
struct DatasetRecord {
  std::uint32_t mpc_step = 0;
  std::uint32_t iteration = 0;
  std::uint8_t status = 0;  // 1 = from a converged solve
  std::vector<float> X;  // (T+1) * n_x
  std::vector<float> k;  // T * n_u
  std::vector<float> K;  // T * n_u * n_x
  std::vector<float> U;  // T * n_u

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;

  static DatasetRecord from_episode(const Episode& ep);
  /// Double-precision nominal trajectory (cost left at 0).
  Trajectory trajectory(const DatasetHeader& h) const;
  GainSequence gains(const DatasetHeader& h) const;
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;
};

/// Streams records to `<path>.tmp`, patches the count and renames on finish.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, DatasetHeader header);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void append(const DatasetRecord& record);
  std::uint64_t finish();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  DatasetHeader header_;
  bool finished_ = false;
};

std::string serialize_dataset(const Dataset& data);
Dataset parse_dataset(const std::string& bytes);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Runs vanilla-iLQR MPC from every initial state and streams one record per
/// iLQR iteration to `path`. Simulations run on up to `threads` workers;
/// records are written in initial-state order. Returns the record count.
std::uint64_t generate_dataset(const SystemModel& model, const CostModel& cost,
                               SystemKind system,
                               const std::vector<Vec>& initial_states,
                               const MpcConfig& config,
                               const std::filesystem::path& path,
                               int threads = 1);

}  // namespace quattro
