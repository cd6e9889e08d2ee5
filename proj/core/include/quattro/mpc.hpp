#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "quattro/quattro.hpp"

namespace quattro {

enum class ControllerKind { kIlqr, kQuattro, kBlended };

ControllerKind parse_controller_kind(const std::string& name);
std::string to_string(ControllerKind kind);

struct MpcConfig {
  int horizon = 30;
  int control_interval = 1;  // plant steps per solve
  int sim_steps = 1500;
  ControllerKind controller = ControllerKind::kIlqr;
  SplitSpec split{5, 30};
  BlendConfig blend;
  SolverOptions solver;

  void validate() const;

  static MpcConfig cartpole();   // T = 30, interval 1, split 5:25
  static MpcConfig quadrotor();  // T = 50, interval 20, split 1:49
};

/// One iLQR iteration inside one MPC solve.
struct Episode {
  int mpc_step = 0;
  int iteration = 0;
  bool converged = false;  // the solve this iteration belongs to converged
  StateTrajectory X;  // nominal the gains were computed on, T + 1 states
  GainSequence gains;
  ControlTrajectory U;  // nominal controls, T entries
};

using EpisodeRecorder = std::function<void(const Episode&)>;

struct SimTrace {
  struct Row {
    double time = 0.0;
    Vec state;
    Vec control;
    double cost = 0.0;
    double blend_w = 1.0;
  };
  struct Solve {
    int plant_step = 0;
    SolveReport report;
    double blend_w = 1.0;
  };

  std::vector<Row> rows;  // one per plant step
  std::vector<Solve> solves;
  Vec final_state;
  bool truncated = false;
  std::string failure;
};

/// Receding-horizon loop. `predictor` is required for the quattro and blended
/// controllers. Solves warm-start from the previous plan shifted by the
/// number of steps applied, last entry repeated.
SimTrace run_mpc(const SystemModel& model, const CostModel& cost,
                 const MpcConfig& config, const Vec& x0,
                 const GainPredictor* predictor = nullptr,
                 const EpisodeRecorder& recorder = {});

/// Mean of squared elementwise differences over all T * n_u entries.
double evaluate_mse(const ControlTrajectory& full,
                    const ControlTrajectory& hybrid);

/// CSV with header time,x_0..,u_0..,cost,blend_w; 9 significant digits.
void write_trace_csv(std::ostream& out, const SimTrace& trace);
void write_trace_csv(const std::string& path, const SimTrace& trace);

}  // namespace quattro
