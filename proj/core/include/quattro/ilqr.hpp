#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "quattro/cost.hpp"
#include "quattro/dynamics.hpp"

namespace quattro {

/// Feedforward k_i and feedback K_i for a run of consecutive time steps.
/// Entry 0 belongs to the first step the sequence covers.
struct GainSequence {
  std::vector<Vec> k;
  std::vector<Mat> K;

  int size() const { return static_cast<int>(k.size()); }
  bool all_finite() const;

  /// Entries [first, first + count).
  GainSequence slice(int first, int count) const;
  /// `head` followed by `tail`.
  static GainSequence concat(const GainSequence& head,
                             const GainSequence& tail);
  static GainSequence zeros(int horizon, int state_dim, int control_dim);
};

/// Local quadratic model of the cost-to-go: gradient s and Hessian S.
struct ValueExpansion {
  Vec s;
  Mat S;
};

/// Local quadratic model of the state-action cost.
struct QExpansion {
  Vec Q_x;
  Vec Q_u;
  Mat Q_xx;
  Mat Q_uu;
  Mat Q_ux;
};

/// Predicted cost change of the quadratic model for step size alpha is
/// alpha * linear + alpha^2 * quadratic.
struct ExpectedImprovement {
  double linear = 0.0;
  double quadratic = 0.0;
};

struct Trajectory {
  StateTrajectory X;  // T + 1 states
  ControlTrajectory U;  // T controls
  double cost = 0.0;

  int horizon() const { return static_cast<int>(U.size()); }
};

struct SolverOptions {
  int max_iters = 100;
  double tolerance = 1e-6;
  /// Tried in order; the first strictly decreasing candidate wins.
  std::vector<double> step_sizes = default_step_sizes();
  double mu_init = 1e-6;
  double mu_min = 1e-9;
  double mu_max = 1e10;
  double mu_increase = 10.0;
  double mu_decrease = 0.5;

  static std::vector<double> default_step_sizes();  // 0.5^j, j = 0..9
  void validate() const;
};

/// Rolls the dynamics out from x0 under U and evaluates J.
/// Throws DivergenceError naming the first non-finite step.
Trajectory rollout(const SystemModel& model, const CostModel& cost,
                   const Vec& x0, const ControlTrajectory& U);

struct BackwardPassResult {
  int start = 0;
  GainSequence gains;  // steps start .. T-1
  std::vector<ValueExpansion> values;  // steps start .. T
  std::vector<QExpansion> q;  // steps start .. T-1, Q_uu regularized
  ExpectedImprovement expected;
  int steps = 0;  // recursion steps executed, T - start
};

/// Riccati-style recursion from the terminal state down to `start`.
///
/// Executes exactly T - start steps, so the result for `start = s` is
/// bit-identical to the last T - s entries of a full pass. Throws
/// NotPositiveDefiniteError when Q_uu + mu I has no Cholesky factor.
BackwardPassResult backward_pass(const SystemModel& model,
                                 const CostModel& cost,
                                 const Trajectory& nominal, int start,
                                 double mu);

/// Closed-loop rollout u_i' = u_i + alpha k_i + K_i (x_i' - x_i).
/// Returns nullopt if the candidate diverges.
std::optional<Trajectory> forward_pass(const SystemModel& model,
                                       const CostModel& cost,
                                       const Trajectory& nominal,
                                       const GainSequence& gains,
                                       double alpha);

/// Gains for a full horizon plus timing of how they were obtained.
struct GainResult {
  GainSequence gains;
  ExpectedImprovement expected;
  int backward_steps = 0;
  double backward_ms = 0.0;
  double predict_ms = 0.0;
  bool used_fallback = false;
};

/// How an iteration obtains its gains. The vanilla solver runs a full
/// backward pass; other strategies can replace part of it.
using GainStrategy =
    std::function<GainResult(const Trajectory& nominal, double mu)>;

GainStrategy full_backward_strategy(const SystemModel& model,
                                    const CostModel& cost);

struct IterationOutcome {
  /// A candidate lowered the cost and replaced the nominal trajectory.
  bool accepted = false;
  /// |J_new - J| < tolerance.
  bool converged = false;
  Trajectory trajectory;  // new nominal (unchanged when not accepted)
  GainResult gains;
  double alpha = 0.0;
  double forward_ms = 0.0;
};

/// One iteration: gains from `strategy`, then line search. Not-PD factors and
/// failed line searches raise mu (x mu_increase) and retry; success lowers it
/// (x mu_decrease). Throws SolverFailure once mu exceeds mu_max.
IterationOutcome iterate(const SystemModel& model, const CostModel& cost,
                         const Trajectory& nominal,
                         const GainStrategy& strategy,
                         const SolverOptions& opts, double& mu);

struct IterationRecord {
  double cost = 0.0;
  double alpha = 0.0;
  int backward_steps = 0;
  double wall_ms = 0.0;
  double backward_ms = 0.0;
  double predict_ms = 0.0;
  double forward_ms = 0.0;
  bool used_fallback = false;
};

struct SolveReport {
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
};

struct SolveResult {
  Trajectory trajectory;
  GainSequence gains;  // gains of the last iteration
  SolveReport report;
};

/// Regularization ran past mu_max. Carries the best trajectory found.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, Trajectory best)
      : Error(what), best_(std::move(best)) {}
  const Trajectory& best() const { return best_; }

 private:
  Trajectory best_;
};

/// Called once per iteration with the trajectory the gains were computed on.
using IterationObserver = std::function<void(
    int iteration, const Trajectory& nominal, const GainSequence& gains)>;

/// Full solve. `strategy` defaults to the full backward pass.
SolveResult solve(const SystemModel& model, const CostModel& cost,
                  const Vec& x0, const ControlTrajectory& U0,
                  const SolverOptions& opts = {},
                  const GainStrategy& strategy = {},
                  const IterationObserver& observer = {});

}  // namespace quattro
