#pragma once

#include <memory>
#include <optional>
#include <string>

#include "quattro/ilqr.hpp"
#include "quattro/transformer.hpp"

namespace quattro {

/// What a predictor sees: the nominal trajectory and the gains the partial
/// backward pass computed for its last `suffix.size()` steps.
struct PredictionRequest {
  const Trajectory& nominal;
  const GainSequence& suffix;
  double mu;
};

/// Supplies the gains for the time steps the backward pass skipped.
class GainPredictor {
 public:
  virtual ~GainPredictor() = default;
  /// Returns exactly T - suffix.size() gains for steps 0 .. T-1-|suffix|.
  virtual GainSequence predict(const PredictionRequest& req) const = 0;
};

class TransformerPredictor final : public GainPredictor {
 public:
  explicit TransformerPredictor(std::shared_ptr<const Transformer> model);
  GainSequence predict(const PredictionRequest& req) const override;

  const Transformer& model() const { return *model_; }

 private:
  std::shared_ptr<const Transformer> model_;
};

/// Replays ground-truth gains. Either holds a stored full-horizon sequence or
/// runs a full backward pass on each request's nominal trajectory.
class OraclePredictor final : public GainPredictor {
 public:
  explicit OraclePredictor(GainSequence full);
  OraclePredictor(const SystemModel& model, const CostModel& cost);

  GainSequence predict(const PredictionRequest& req) const override;

 private:
  std::optional<GainSequence> stored_;
  const SystemModel* model_ = nullptr;
  const CostModel* cost_ = nullptr;
};

/// How many backward steps are computed exactly versus predicted.
struct SplitSpec {
  int ilqr_steps = 1;
  int horizon = 1;

  int tf_steps() const { return horizon - ilqr_steps; }
  void validate() const;  // 1 <= ilqr_steps <= horizon

  /// Parses "S:P" with S + P = horizon.
  static SplitSpec parse(const std::string& text);
};

/// Gain strategy for the Quattro iteration: backward pass over the last
/// `split.ilqr_steps` steps, prediction for the rest. A predictor that throws
/// or returns malformed gains triggers a full backward pass instead.
GainStrategy quattro_strategy(const SystemModel& model, const CostModel& cost,
                              const GainPredictor& predictor, SplitSpec split);

/// One Quattro iteration (partial backward pass, prediction, line search).
IterationOutcome quattro_iteration(const SystemModel& model,
                                   const CostModel& cost,
                                   const Trajectory& nominal,
                                   const GainPredictor& predictor,
                                   SplitSpec split, const SolverOptions& opts,
                                   double& mu);

/// Infinite-horizon discrete LQR gain at an equilibrium, u = u_ref - K (x - x_ref).
/// Iterates the Riccati map until max |dP| < 1e-10 or 10000 sweeps.
Mat lqr_gain(const SystemModel& model, const CostModel& cost, const Vec& x_ref,
             const Vec& u_ref);

/// Same iteration on an explicit linear system.
Mat discrete_lqr(const Mat& A, const Mat& B, const Mat& Q, const Mat& R);

struct BlendConfig {
  double eps_low = 0.5;
  double eps_high = 5.0;
  void validate() const;  // 0 < eps_low < eps_high
};

/// 0 below eps_low, 1 above eps_high, linear in |J| in between.
double blend_weight(double cost, const BlendConfig& cfg);

/// w u_tf + (1 - w) u_lqr.
Vec blended_control(const Vec& u_tf, const Vec& u_lqr, double w);

}  // namespace quattro
