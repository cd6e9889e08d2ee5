#include "quattro/ilqr.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace quattro {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since)
      .count();
}

}  // namespace

bool GainSequence::all_finite() const {
  for (const Vec& v : k) {
    if (!v.allFinite()) return false;
  }
  for (const Mat& M : K) {
    if (!M.allFinite()) return false;
  }
  return k.size() == K.size();
}

GainSequence GainSequence::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > size()) {
    throw InvalidInputError("gain slice out of range");
  }
  GainSequence out;
  out.k.assign(k.begin() + first, k.begin() + first + count);
  out.K.assign(K.begin() + first, K.begin() + first + count);
  return out;
}

GainSequence GainSequence::concat(const GainSequence& head,
                                  const GainSequence& tail) {
  GainSequence out = head;
  out.k.insert(out.k.end(), tail.k.begin(), tail.k.end());
  out.K.insert(out.K.end(), tail.K.begin(), tail.K.end());
  return out;
}

GainSequence GainSequence::zeros(int horizon, int state_dim, int control_dim) {
  GainSequence out;
  out.k.assign(static_cast<size_t>(horizon), Vec::Zero(control_dim));
  out.K.assign(static_cast<size_t>(horizon), Mat::Zero(control_dim, state_dim));
  return out;
}

std::vector<double> SolverOptions::default_step_sizes() {
  std::vector<double> alphas;
  double a = 1.0;
  for (int j = 0; j < 10; ++j, a *= 0.5) alphas.push_back(a);
  return alphas;
}

void SolverOptions::validate() const {
  if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (!(tolerance > 0)) throw ConfigError("tolerance must be positive");
  if (step_sizes.empty()) throw ConfigError("step-size schedule is empty");
  for (size_t j = 0; j < step_sizes.size(); ++j) {
    if (!(step_sizes[j] > 0 && step_sizes[j] <= 1.0) ||
        (j > 0 && !(step_sizes[j] < step_sizes[j - 1]))) {
      throw ConfigError(
          "step sizes must lie in (0, 1] and strictly decrease");
    }
  }
  if (!(mu_min > 0 && mu_min <= mu_init && mu_init <= mu_max)) {
    throw ConfigError("regularization bounds must satisfy 0 < min <= init <= max");
  }
  if (!(mu_increase > 1.0) || !(mu_decrease > 0 && mu_decrease < 1.0)) {
    throw ConfigError("regularization factors out of range");
  }
}

Trajectory rollout(const SystemModel& model, const CostModel& cost,
                   const Vec& x0, const ControlTrajectory& U) {
  if (U.empty()) throw InvalidInputError("rollout needs at least one control");
  if (!x0.allFinite()) throw DivergenceError(0, "initial state is not finite");
  Trajectory traj;
  traj.U = U;
  traj.X.reserve(U.size() + 1);
  traj.X.push_back(x0);
  for (size_t i = 0; i < U.size(); ++i) {
    if (!U[i].allFinite()) {
      throw DivergenceError(static_cast<int>(i),
                            "non-finite control at step " + std::to_string(i));
    }
    Vec next = model.step(traj.X[i], U[i]);
    if (!next.allFinite()) {
      throw DivergenceError(static_cast<int>(i + 1),
                            "rollout diverged at step " + std::to_string(i + 1));
    }
    traj.X.push_back(std::move(next));
  }
  traj.cost = cost.trajectory_cost(traj.X, traj.U);
  return traj;
}

BackwardPassResult backward_pass(const SystemModel& model,
                                 const CostModel& cost,
                                 const Trajectory& nominal, int start,
                                 double mu) {
  const int T = nominal.horizon();
  if (T < 1 || static_cast<int>(nominal.X.size()) != T + 1) {
    throw InvalidInputError("nominal trajectory has inconsistent lengths");
  }
  if (start < 0 || start >= T) {
    throw InvalidInputError("backward pass start " + std::to_string(start) +
                            " outside [0, " + std::to_string(T) + ")");
  }
  const int m = model.control_dim();
  const int steps = T - start;

  BackwardPassResult out;
  out.start = start;
  out.steps = steps;
  out.gains.k.resize(static_cast<size_t>(steps));
  out.gains.K.resize(static_cast<size_t>(steps));
  out.values.resize(static_cast<size_t>(steps + 1));
  out.q.resize(static_cast<size_t>(steps));

  auto [s, S] = cost.terminal_expansion(nominal.X[T], T);
  out.values[steps] = {s, S};

  const Mat reg = mu * Mat::Identity(m, m);
  for (int i = T - 1; i >= start; --i) {
    const int slot = i - start;
    const LinearizedStep lin = model.linearize(nominal.X[i], nominal.U[i]);
    const CostExpansion l = cost.quadratize(nominal.X[i], nominal.U[i], i);

    QExpansion q;
    q.Q_x = l.l_x + lin.A.transpose() * s;
    q.Q_u = l.l_u + lin.B.transpose() * s;
    const Mat SA = S * lin.A;
    q.Q_xx = l.l_xx + lin.A.transpose() * SA;
    const Mat Q_uu = l.l_uu + lin.B.transpose() * S * lin.B;
    q.Q_ux = l.l_ux + lin.B.transpose() * SA;
    q.Q_uu = Q_uu + reg;

    Eigen::LLT<Mat> llt(q.Q_uu);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefiniteError(
          i, "Q_uu + mu I is not positive definite at step " +
                 std::to_string(i));
    }
    Vec k = -llt.solve(q.Q_u);
    Mat K = -llt.solve(q.Q_ux);

    s = q.Q_x + K.transpose() * Q_uu * k + K.transpose() * q.Q_u +
        q.Q_ux.transpose() * k;
    Mat S_new = q.Q_xx + K.transpose() * Q_uu * K + K.transpose() * q.Q_ux +
                q.Q_ux.transpose() * K;
    S = 0.5 * (S_new + S_new.transpose());

    out.expected.linear += k.dot(q.Q_u);
    out.expected.quadratic += 0.5 * k.dot(Q_uu * k);

    out.values[slot] = {s, S};
    out.gains.k[slot] = std::move(k);
    out.gains.K[slot] = std::move(K);
    out.q[slot] = std::move(q);
  }
  return out;
}

std::optional<Trajectory> forward_pass(const SystemModel& model,
                                       const CostModel& cost,
                                       const Trajectory& nominal,
                                       const GainSequence& gains,
                                       double alpha) {
  const int T = nominal.horizon();
  if (gains.size() != T || static_cast<int>(gains.K.size()) != T) {
    throw InvalidInputError("forward pass needs " + std::to_string(T) +
                            " gains, got " + std::to_string(gains.size()));
  }
  Trajectory out;
  out.X.reserve(static_cast<size_t>(T + 1));
  out.U.reserve(static_cast<size_t>(T));
  out.X.push_back(nominal.X[0]);
  for (int i = 0; i < T; ++i) {
    Vec u = nominal.U[i] + alpha * gains.k[i] +
            gains.K[i] * (out.X[i] - nominal.X[i]);
    if (!u.allFinite()) return std::nullopt;
    Vec next = model.step(out.X[i], u);
    if (!next.allFinite()) return std::nullopt;
    out.U.push_back(std::move(u));
    out.X.push_back(std::move(next));
  }
  out.cost = cost.trajectory_cost(out.X, out.U);
  if (!std::isfinite(out.cost)) return std::nullopt;
  return out;
}

GainStrategy full_backward_strategy(const SystemModel& model,
                                    const CostModel& cost) {
  return [&model, &cost](const Trajectory& nominal, double mu) {
    const auto t0 = Clock::now();
    BackwardPassResult bp = backward_pass(model, cost, nominal, 0, mu);
    GainResult r;
    r.backward_ms = elapsed_ms(t0);
    r.gains = std::move(bp.gains);
    r.expected = bp.expected;
    r.backward_steps = bp.steps;
    return r;
  };
}

IterationOutcome iterate(const SystemModel& model, const CostModel& cost,
                         const Trajectory& nominal,
                         const GainStrategy& strategy,
                         const SolverOptions& opts, double& mu) {
  while (true) {
    if (mu > opts.mu_max) {
      throw SolverFailure("regularization exceeded " +
                              std::to_string(opts.mu_max),
                          nominal);
    }
    IterationOutcome out;
    try {
      out.gains = strategy(nominal, mu);
    } catch (const NotPositiveDefiniteError&) {
      mu *= opts.mu_increase;
      continue;
    } catch (const LinearizationError& e) {
      throw SolverFailure(e.what(), nominal);
    }

    const auto t0 = Clock::now();
    std::optional<Trajectory> first_candidate;
    for (double alpha : opts.step_sizes) {
      auto candidate = forward_pass(model, cost, nominal, out.gains.gains, alpha);
      if (!candidate) continue;
      if (!first_candidate) first_candidate = *candidate;
      if (candidate->cost < nominal.cost) {
        out.forward_ms = elapsed_ms(t0);
        out.accepted = true;
        out.alpha = alpha;
        out.converged =
            std::abs(candidate->cost - nominal.cost) < opts.tolerance;
        out.trajectory = std::move(*candidate);
        mu = std::max(opts.mu_min, mu * opts.mu_decrease);
        return out;
      }
    }
    out.forward_ms = elapsed_ms(t0);

    // No candidate decreased the cost. If the full step leaves the cost
    // within tolerance the nominal is already a fixed point.
    if (first_candidate &&
        std::abs(first_candidate->cost - nominal.cost) < opts.tolerance) {
      out.converged = true;
      out.trajectory = nominal;
      return out;
    }
    mu *= opts.mu_increase;
  }
}

SolveResult solve(const SystemModel& model, const CostModel& cost,
                  const Vec& x0, const ControlTrajectory& U0,
                  const SolverOptions& opts, const GainStrategy& strategy,
                  const IterationObserver& observer) {
  opts.validate();
  const GainStrategy gains_for =
      strategy ? strategy : full_backward_strategy(model, cost);

  SolveResult result;
  result.trajectory = rollout(model, cost, x0, U0);
  result.report.cost = result.trajectory.cost;
  result.gains = GainSequence::zeros(result.trajectory.horizon(),
                                     model.state_dim(), model.control_dim());

  double mu = opts.mu_init;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const auto t0 = Clock::now();
    IterationOutcome step =
        iterate(model, cost, result.trajectory, gains_for, opts, mu);
    if (observer) observer(iter, result.trajectory, step.gains.gains);

    IterationRecord rec;
    rec.alpha = step.alpha;
    rec.backward_steps = step.gains.backward_steps;
    rec.backward_ms = step.gains.backward_ms;
    rec.predict_ms = step.gains.predict_ms;
    rec.forward_ms = step.forward_ms;
    rec.used_fallback = step.gains.used_fallback;
    result.gains = std::move(step.gains.gains);
    if (step.accepted) result.trajectory = std::move(step.trajectory);
    rec.cost = result.trajectory.cost;
    rec.wall_ms = elapsed_ms(t0);
    result.report.history.push_back(rec);
    result.report.iterations = iter + 1;
    result.report.cost = result.trajectory.cost;
    if (step.converged) {
      result.report.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace quattro
