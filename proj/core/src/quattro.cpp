#include "quattro/quattro.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

namespace quattro {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since)
      .count();
}

bool well_formed(const GainSequence& g, int count, int n, int m) {
  if (g.size() != count || static_cast<int>(g.K.size()) != count) return false;
  for (int i = 0; i < count; ++i) {
    if (g.k[size_t(i)].size() != m || g.K[size_t(i)].rows() != m ||
        g.K[size_t(i)].cols() != n) {
      return false;
    }
  }
  return g.all_finite();
}

}  // namespace

TransformerPredictor::TransformerPredictor(
    std::shared_ptr<const Transformer> model)
    : model_(std::move(model)) {
  if (!model_) throw ConfigError("transformer predictor needs a model");
}

GainSequence TransformerPredictor::predict(const PredictionRequest& req) const {
  if (req.nominal.horizon() != model_->config().horizon) {
    throw ConfigError("trajectory horizon " +
                      std::to_string(req.nominal.horizon()) +
                      " differs from model horizon " +
                      std::to_string(model_->config().horizon));
  }
  return model_->predict(req.nominal.X, req.suffix);
}

OraclePredictor::OraclePredictor(GainSequence full) : stored_(std::move(full)) {}

OraclePredictor::OraclePredictor(const SystemModel& model,
                                 const CostModel& cost)
    : model_(&model), cost_(&cost) {}

GainSequence OraclePredictor::predict(const PredictionRequest& req) const {
  const int T = req.nominal.horizon();
  const int count = T - req.suffix.size();
  if (stored_) {
    if (stored_->size() != T) {
      throw ConfigError("stored oracle gains do not cover the horizon");
    }
    return stored_->slice(0, count);
  }
  return backward_pass(*model_, *cost_, req.nominal, 0, req.mu)
      .gains.slice(0, count);
}

void SplitSpec::validate() const {
  if (horizon < 1 || ilqr_steps < 1 || ilqr_steps > horizon) {
    throw ConfigError("split needs 1 <= iLQR steps (" +
                      std::to_string(ilqr_steps) + ") <= horizon (" +
                      std::to_string(horizon) + ")");
  }
}

SplitSpec SplitSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("split '" + text + "' is not of the form S:P");
  }
  SplitSpec split;
  try {
    size_t used = 0;
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const int s = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    const int p = std::stoi(b, &used);
    if (used != b.size() || p < 0) throw std::invalid_argument(b);
    split.ilqr_steps = s;
    split.horizon = s + p;
  } catch (const std::logic_error&) {
    throw ConfigError("split '" + text + "' is not of the form S:P");
  }
  split.validate();
  return split;
}

GainStrategy quattro_strategy(const SystemModel& model, const CostModel& cost,
                              const GainPredictor& predictor, SplitSpec split) {
  split.validate();
  return [&model, &cost, &predictor, split](const Trajectory& nominal,
                                            double mu) {
    const int T = nominal.horizon();
    if (T != split.horizon) {
      throw ConfigError("split horizon " + std::to_string(split.horizon) +
                        " differs from trajectory horizon " + std::to_string(T));
    }
    GainResult r;
    auto t0 = Clock::now();
    BackwardPassResult bp =
        backward_pass(model, cost, nominal, T - split.ilqr_steps, mu);
    r.backward_ms = elapsed_ms(t0);
    r.backward_steps = bp.steps;
    r.expected = bp.expected;
    if (split.tf_steps() == 0) {
      r.gains = std::move(bp.gains);
      return r;
    }

    t0 = Clock::now();
    std::optional<GainSequence> prefix;
    try {
      GainSequence p = predictor.predict(PredictionRequest{nominal, bp.gains, mu});
      if (well_formed(p, split.tf_steps(), model.state_dim(),
                      model.control_dim())) {
        prefix = std::move(p);
      } else {
        std::clog << "[quattro] predictor returned malformed gains; "
                     "running the full backward pass\n";
      }
    } catch (const std::exception& e) {
      std::clog << "[quattro] predictor failed (" << e.what()
                << "); running the full backward pass\n";
    }
    r.predict_ms = elapsed_ms(t0);

    if (!prefix) {
      t0 = Clock::now();
      BackwardPassResult full = backward_pass(model, cost, nominal, 0, mu);
      r.backward_ms += elapsed_ms(t0);
      r.backward_steps += full.steps;
      r.gains = std::move(full.gains);
      r.expected = full.expected;
      r.used_fallback = true;
      return r;
    }
    r.gains = GainSequence::concat(*prefix, bp.gains);
    return r;
  };
}

IterationOutcome quattro_iteration(const SystemModel& model,
                                   const CostModel& cost,
                                   const Trajectory& nominal,
                                   const GainPredictor& predictor,
                                   SplitSpec split, const SolverOptions& opts,
                                   double& mu) {
  return iterate(model, cost, nominal,
                 quattro_strategy(model, cost, predictor, split), opts, mu);
}

Mat discrete_lqr(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  constexpr int kMaxSweeps = 10000;
  constexpr double kTolerance = 1e-10;
  Mat P = Q;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const Mat BtP = B.transpose() * P;
    const Mat gain = (R + BtP * B).ldlt().solve(BtP * A);
    Mat next = Q + A.transpose() * P * A - A.transpose() * P * B * gain;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw Error("Riccati iteration diverged");
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change < kTolerance) {
      const Mat BtPf = B.transpose() * P;
      return (R + BtPf * B).ldlt().solve(BtPf * A);
    }
  }
  throw Error("Riccati iteration did not converge in 10000 sweeps");
}

Mat lqr_gain(const SystemModel& model, const CostModel& cost, const Vec& x_ref,
             const Vec& u_ref) {
  const Vec drift = model.step(x_ref, u_ref) - x_ref;
  if (drift.norm() >= 1e-6) {
    throw ConfigError("LQR reference is not an equilibrium (drift " +
                      std::to_string(drift.norm()) + ")");
  }
  const LinearizedStep lin = model.linearize(x_ref, u_ref);
  return discrete_lqr(lin.A, lin.B, cost.Q(), cost.R());
}

void BlendConfig::validate() const {
  if (!(eps_low > 0 && eps_low < eps_high) || !std::isfinite(eps_high)) {
    throw ConfigError("blend thresholds need 0 < eps_low < eps_high");
  }
}

double blend_weight(double cost, const BlendConfig& cfg) {
  const double j = std::abs(cost);
  if (j <= cfg.eps_low) return 0.0;
  if (j >= cfg.eps_high) return 1.0;
  return (j - cfg.eps_low) / (cfg.eps_high - cfg.eps_low);
}

Vec blended_control(const Vec& u_tf, const Vec& u_lqr, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw InvalidInputError("blend weight outside [0, 1]");
  if (u_tf.size() != u_lqr.size()) throw InvalidInputError("control size mismatch");
  return w * u_tf + (1.0 - w) * u_lqr;
}

}  // namespace quattro
