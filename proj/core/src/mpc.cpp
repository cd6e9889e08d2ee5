#include "quattro/mpc.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "binary_io.hpp"

namespace quattro {

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "ilqr") return ControllerKind::kIlqr;
  if (name == "quattro") return ControllerKind::kQuattro;
  if (name == "blended") return ControllerKind::kBlended;
  throw ConfigError("unknown controller '" + name +
                    "' (expected ilqr, quattro or blended)");
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kIlqr: return "ilqr";
    case ControllerKind::kQuattro: return "quattro";
    case ControllerKind::kBlended: return "blended";
  }
  return "?";
}

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (control_interval < 1) throw ConfigError("control_interval must be >= 1");
  if (sim_steps < 0) throw ConfigError("sim_steps must be non-negative");
  if (controller != ControllerKind::kIlqr) {
    split.validate();
    if (split.horizon != horizon) {
      throw ConfigError("split covers " + std::to_string(split.horizon) +
                        " steps but the horizon is " + std::to_string(horizon));
    }
  }
  if (controller == ControllerKind::kBlended) blend.validate();
  solver.validate();
}

MpcConfig MpcConfig::cartpole() { return MpcConfig{}; }

MpcConfig MpcConfig::quadrotor() {
  MpcConfig c;
  c.horizon = 50;
  c.control_interval = 20;
  c.sim_steps = 10000;
  c.split = SplitSpec{1, 50};
  return c;
}

SimTrace run_mpc(const SystemModel& model, const CostModel& cost,
                 const MpcConfig& config, const Vec& x0,
                 const GainPredictor* predictor,
                 const EpisodeRecorder& recorder) {
  config.validate();
  if (x0.size() != model.state_dim() || !x0.allFinite()) {
    throw InvalidInputError("initial state must be finite with dimension " +
                            std::to_string(model.state_dim()));
  }
  const bool uses_predictor = config.controller != ControllerKind::kIlqr;
  if (uses_predictor && predictor == nullptr) {
    throw ConfigError(to_string(config.controller) +
                      " controller needs a gain predictor");
  }

  const int T = config.horizon;
  const double dt = model.dt();
  SimTrace trace;
  Vec x = x0;

  Mat K_lqr;
  if (config.controller == ControllerKind::kBlended) {
    K_lqr = lqr_gain(model, cost, cost.state_ref(0), cost.u_ref());
  }

  ControlTrajectory plan(size_t(T), model.nominal_control());
  int plan_index = 0;
  double w = 1.0;

  for (int p = 0; p < config.sim_steps; ++p) {
    if (p % config.control_interval == 0) {
      // Shift the previous plan by the steps already applied.
      if (plan_index > 0) {
        ControlTrajectory shifted;
        for (int i = 0; i < T; ++i) {
          shifted.push_back(plan[size_t(std::min(i + plan_index, T - 1))]);
        }
        plan = std::move(shifted);
      }
      plan_index = 0;

      const CostModel window = cost.shifted(p);
      std::vector<Episode> episodes;
      IterationObserver observer;
      if (recorder) {
        observer = [&](int iter, const Trajectory& nominal,
                       const GainSequence& gains) {
          episodes.push_back(Episode{p, iter, false, nominal.X, gains, nominal.U});
        };
      }
      GainStrategy strategy;
      if (uses_predictor) {
        strategy = quattro_strategy(model, window, *predictor, config.split);
      }
      SolveResult result;
      try {
        result = solve(model, window, x, plan, config.solver, strategy, observer);
      } catch (const std::exception& e) {
        trace.truncated = true;
        trace.failure = "solver failed at plant step " + std::to_string(p) +
                        ": " + e.what();
        break;
      }
      if (recorder) {
        for (Episode& ep : episodes) {
          ep.converged = result.report.converged;
          recorder(ep);
        }
      }
      if (config.controller == ControllerKind::kBlended) {
        w = blend_weight(result.report.cost, config.blend);
      }
      trace.solves.push_back({p, result.report, w});
      plan = std::move(result.trajectory.U);
    }

    const Vec& u_plan = plan[size_t(std::min(plan_index, T - 1))];
    Vec u = u_plan;
    if (config.controller == ControllerKind::kBlended) {
      const Vec u_lqr = cost.u_ref() - K_lqr * (x - cost.state_ref(p));
      u = blended_control(u_plan, u_lqr, w);
    }
    trace.rows.push_back({p * dt, x, u, cost.running_cost(x, u, p), w});
    Vec next = model.step(x, u);
    if (!next.allFinite()) {
      trace.truncated = true;
      trace.failure = "plant diverged at step " + std::to_string(p + 1);
      break;
    }
    x = std::move(next);
    ++plan_index;
  }
  trace.final_state = x;
  return trace;
}

double evaluate_mse(const ControlTrajectory& full,
                    const ControlTrajectory& hybrid) {
  if (full.size() != hybrid.size() || full.empty()) {
    throw InvalidInputError("MSE needs two non-empty trajectories of equal length");
  }
  double total = 0.0;
  Eigen::Index count = 0;
  for (size_t i = 0; i < full.size(); ++i) {
    if (full[i].size() != hybrid[i].size()) {
      throw InvalidInputError("MSE operands differ in control dimension");
    }
    total += (full[i] - hybrid[i]).squaredNorm();
    count += full[i].size();
  }
  return total / static_cast<double>(count);
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  const Eigen::Index nx = trace.rows.empty() ? trace.final_state.size()
                                             : trace.rows.front().state.size();
  const Eigen::Index nu =
      trace.rows.empty() ? 0 : trace.rows.front().control.size();
  out << "time";
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < nu; ++i) out << ",u_" << i;
  out << ",cost,blend_w\n";
  out << std::setprecision(9);
  for (const auto& row : trace.rows) {
    out << row.time;
    for (Eigen::Index i = 0; i < row.state.size(); ++i) out << ',' << row.state[i];
    for (Eigen::Index i = 0; i < row.control.size(); ++i) out << ',' << row.control[i];
    out << ',' << row.cost << ',' << row.blend_w << '\n';
  }
}

void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  write_file_atomic(path, out.str());
}

}  // namespace quattro
