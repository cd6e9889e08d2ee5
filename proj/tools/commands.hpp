#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "quattro/cost.hpp"
#include "quattro/dynamics.hpp"
#include "quattro/quattro.hpp"

namespace quattro::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Dispatches `args` (program name excluded) to a subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/// Default cost for a system; quadrotor references hover thrust.
CostModel default_cost(SystemKind kind, const SystemModel& model);

/// Representative starting state used by `run` and `bench`.
Vec default_initial_state(SystemKind kind);

struct BenchOptions {
  SystemKind system = SystemKind::kQuadrotor;
  int reps = 20;
  std::optional<SplitSpec> split;  // system default when empty
  std::string weights;             // seeded random weights when empty
  std::uint64_t seed = 0;
  bool sweep = false;              // vanilla backward pass at T = 10, 20, 40
};

struct BenchRow {
  std::string phase;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int steps = 0;  // backward-recursion steps of the method the row belongs to
};

std::vector<BenchRow> run_bench(const BenchOptions& opts);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

struct EvalOptions {
  std::string data;
  std::string weights;  // ignored with oracle
  std::optional<SplitSpec> split;
  bool oracle = false;
  std::uint64_t max_records = 0;  // 0 = all
};

struct EvalRow {
  std::uint64_t record = 0;
  std::uint32_t mpc_step = 0;
  std::uint32_t iteration = 0;
  std::uint8_t status = 0;
  double mse = 0.0;
};

/// Per record: one full-gain and one split-gain forward pass (alpha = 1) from
/// the stored nominal, compared by evaluate_mse.
std::vector<EvalRow> run_eval(const EvalOptions& opts);

struct Summary {
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Quartiles with linear interpolation over the finite entries.
Summary summarize(std::vector<double> values);

}  // namespace quattro::cli
