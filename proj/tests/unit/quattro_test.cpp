#include <gtest/gtest.h>

#include <cmath>

#include "quattro/quattro.hpp"
#include "support/oracles.hpp"

namespace quattro {
namespace {

struct Problem {
  std::unique_ptr<SystemModel> model;
  CostModel cost;
  Trajectory nominal;
  SplitSpec split;
};

Problem make_problem(SystemKind kind) {
  auto model = make_system(kind);
  const bool cart = kind == SystemKind::kCartPole;
  CostModel cost = cart ? default_cartpole_cost()
                        : default_quadrotor_cost(
                              dynamic_cast<const QuadrotorModel&>(*model).hover_thrust());
  const SplitSpec split = cart ? SplitSpec{5, 30} : SplitSpec{1, 50};
  Vec x0 = Vec::Zero(model->state_dim());
  x0.head(4) << 0.3, 0.3, 0.2, 0.1;
  Trajectory nom = rollout(*model, cost, x0,
                           ControlTrajectory(size_t(split.horizon), model->nominal_control()));
  return {std::move(model), std::move(cost), std::move(nom), split};
}

class OracleEquivalence : public ::testing::TestWithParam<SystemKind> {};

TEST_P(OracleEquivalence, QuattroIterationReproducesVanilla) {
  const Problem p = make_problem(GetParam());
  const SolverOptions opts;
  const OraclePredictor oracle(*p.model, p.cost);

  Trajectory a = p.nominal, b = p.nominal;
  double mu_a = opts.mu_init, mu_b = opts.mu_init;
  for (int iter = 0; iter < 3; ++iter) {
    const auto va = iterate(*p.model, p.cost, a, full_backward_strategy(*p.model, p.cost),
                            opts, mu_a);
    const auto vb = quattro_iteration(*p.model, p.cost, b, oracle, p.split, opts, mu_b);
    ASSERT_EQ(va.accepted, vb.accepted);
    EXPECT_EQ(vb.gains.backward_steps, p.split.ilqr_steps);
    EXPECT_FALSE(vb.gains.used_fallback);
    for (size_t i = 0; i < va.trajectory.U.size(); ++i) {
      EXPECT_LE((va.trajectory.U[i] - vb.trajectory.U[i]).cwiseAbs().maxCoeff(), 1e-12);
    }
    for (size_t i = 0; i < va.trajectory.X.size(); ++i) {
      EXPECT_LE((va.trajectory.X[i] - vb.trajectory.X[i]).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_NEAR(va.trajectory.cost, vb.trajectory.cost, 1e-12 * std::max(1.0, va.trajectory.cost));
    EXPECT_EQ(mu_a, mu_b);
    a = va.trajectory;
    b = vb.trajectory;
  }
}

INSTANTIATE_TEST_SUITE_P(Systems, OracleEquivalence,
                         ::testing::Values(SystemKind::kCartPole, SystemKind::kQuadrotor),
                         [](const auto& info) { return to_string(info.param); });

TEST(OraclePredictor, StoredGainsAreSliced) {
  const Problem p = make_problem(SystemKind::kCartPole);
  const auto full = backward_pass(*p.model, p.cost, p.nominal, 0, 1e-6);
  const OraclePredictor stored(full.gains);
  const auto suffix = full.gains.slice(25, 5);
  const GainSequence head = stored.predict({p.nominal, suffix, 1e-6});
  EXPECT_EQ(head.size(), 25);
  EXPECT_EQ(head.K, full.gains.slice(0, 25).K);
}

class ThrowingPredictor final : public GainPredictor {
 public:
  GainSequence predict(const PredictionRequest&) const override {
    throw Error("no model");
  }
};

class WrongSizePredictor final : public GainPredictor {
 public:
  explicit WrongSizePredictor(bool nan) : nan_(nan) {}
  GainSequence predict(const PredictionRequest& req) const override {
    const int n = int(req.nominal.X[0].size()), m = int(req.nominal.U[0].size());
    const int count = req.nominal.horizon() - req.suffix.size();
    GainSequence g = GainSequence::zeros(nan_ ? count : count - 1, n, m);
    if (nan_) g.k[0][0] = NAN;
    return g;
  }

 private:
  bool nan_;
};

TEST(QuattroStrategy, FallsBackToFullPassOnPredictorFailure) {
  const Problem p = make_problem(SystemKind::kCartPole);
  const auto full = backward_pass(*p.model, p.cost, p.nominal, 0, 1e-6);
  const ThrowingPredictor thrower;
  const WrongSizePredictor short_seq(false), nan_seq(true);
  for (const GainPredictor* pred : std::initializer_list<const GainPredictor*>{
           &thrower, &short_seq, &nan_seq}) {
    const GainResult r = quattro_strategy(*p.model, p.cost, *pred, p.split)(p.nominal, 1e-6);
    EXPECT_TRUE(r.used_fallback);
    EXPECT_EQ(r.backward_steps, 5 + 30);
    EXPECT_EQ(r.gains.k, full.gains.k);
    EXPECT_EQ(r.gains.K, full.gains.K);
  }
}

TEST(QuattroStrategy, TransformerPredictorSuppliesThePrefix) {
  const Problem p = make_problem(SystemKind::kCartPole);
  auto tf = std::make_shared<const Transformer>(
      TransformerConfig::cartpole(), random_weights(TransformerConfig::cartpole(), 9));
  const TransformerPredictor pred(tf);
  const GainResult r = quattro_strategy(*p.model, p.cost, pred, p.split)(p.nominal, 1e-6);
  EXPECT_FALSE(r.used_fallback);
  EXPECT_EQ(r.backward_steps, 5);
  ASSERT_EQ(r.gains.size(), 30);
  const auto part = backward_pass(*p.model, p.cost, p.nominal, 25, 1e-6);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.gains.K[25 + i], part.gains.K[i]);
  const auto direct = tf->predict(p.nominal.X, part.gains);
  for (int i = 0; i < 25; ++i) EXPECT_EQ(r.gains.K[i], direct.K[i]);
}

TEST(QuattroStrategy, HorizonMismatchIsAConfigError) {
  const Problem p = make_problem(SystemKind::kCartPole);
  const OraclePredictor oracle(*p.model, p.cost);
  const auto strategy = quattro_strategy(*p.model, p.cost, oracle, SplitSpec{5, 40});
  EXPECT_THROW(strategy(p.nominal, 1e-6), ConfigError);
}

TEST(SplitSpec, Parse) {
  const SplitSpec s = SplitSpec::parse("5:25");
  EXPECT_EQ(s.ilqr_steps, 5);
  EXPECT_EQ(s.horizon, 30);
  EXPECT_EQ(s.tf_steps(), 25);
  EXPECT_EQ(SplitSpec::parse("1:49").horizon, 50);
  EXPECT_EQ(SplitSpec::parse("30:0").tf_steps(), 0);
  for (const char* bad : {"0:30", "5", "a:3", "5:x", "5:-1", "-1:5", "5:25:1", ""}) {
    EXPECT_THROW(SplitSpec::parse(bad), ConfigError) << bad;
  }
}

TEST(Blend, BranchValues) {
  const BlendConfig cfg{0.5, 5.0};
  EXPECT_EQ(blend_weight(0.0, cfg), 0.0);
  EXPECT_EQ(blend_weight(0.5, cfg), 0.0);
  EXPECT_EQ(blend_weight(2.75, cfg), 0.5);
  EXPECT_EQ(blend_weight(5.0, cfg), 1.0);
  EXPECT_EQ(blend_weight(1e9, cfg), 1.0);
  EXPECT_EQ(blend_weight(-2.75, cfg), 0.5);
  EXPECT_NEAR(blend_weight(1.4, cfg), 0.2, 1e-15);
}

TEST(Blend, WeightIsMonotoneContinuousAndBounded) {
  const BlendConfig cfg{0.3, 2.0};
  double prev = blend_weight(0.0, cfg);
  for (int i = 1; i <= 3000; ++i) {
    const double w = blend_weight(i * 1e-3, cfg);
    EXPECT_GE(w, prev);
    EXPECT_LE(w - prev, 1e-3 / (2.0 - 0.3) + 1e-12);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    prev = w;
  }
}

TEST(Blend, ControlStaysOnTheSegment) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec a = oracle::random_vec(gen, Vec::Constant(4, -5), Vec::Constant(4, 5));
    const Vec b = oracle::random_vec(gen, Vec::Constant(4, -5), Vec::Constant(4, 5));
    const double w = double(trial) / 99.0;
    const Vec u = blended_control(a, b, w);
    for (int i = 0; i < 4; ++i) {
      EXPECT_GE(u[i], std::min(a[i], b[i]) - 1e-12);
      EXPECT_LE(u[i], std::max(a[i], b[i]) + 1e-12);
    }
  }
  const Vec tf = Vec::Constant(1, 2.0), lqr = Vec::Zero(1);
  EXPECT_EQ(blended_control(tf, lqr, 0.25)[0], 0.5);
  EXPECT_EQ(blended_control(tf, lqr, 1.0), tf);
  EXPECT_EQ(blended_control(tf, lqr, 0.0), lqr);
  EXPECT_THROW(blended_control(tf, lqr, 1.5), InvalidInputError);
}

TEST(Blend, ConfigValidation) {
  EXPECT_NO_THROW((BlendConfig{0.5, 5.0}.validate()));
  EXPECT_THROW((BlendConfig{5.0, 0.5}.validate()), ConfigError);
  EXPECT_THROW((BlendConfig{0.0, 1.0}.validate()), ConfigError);
}

TEST(Lqr, MatchesLongHorizonRiccati) {
  const LinearModel di = make_double_integrator(0.1);
  const Mat Q = Mat::Identity(2, 2), R = Mat::Identity(1, 1);
  const Mat K = discrete_lqr(di.A(), di.B(), Q, R);
  const auto tv = oracle::riccati_gains(di.A(), di.B(), Q, R, Q, 2000);
  EXPECT_LT((K - tv[0]).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Lqr, StabilizesUprightCartPole) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Mat K = lqr_gain(model, cost, Vec::Zero(4), Vec::Zero(1));
  const LinearizedStep lin = model.linearize(Vec::Zero(4), Vec::Zero(1));
  const Mat closed = lin.A - lin.B * K;
  const double radius = closed.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_LT(radius, 1.0);
  Vec off = Vec::Zero(4);
  off[1] = 0.5;
  EXPECT_THROW(lqr_gain(model, cost, off, Vec::Zero(1)), ConfigError);
}

}  // namespace
}  // namespace quattro
