#include <gtest/gtest.h>

#include "quattro/ilqr.hpp"
#include "support/oracles.hpp"

namespace quattro {
namespace {

struct DoubleIntegratorProblem {
  LinearModel model = make_double_integrator(0.1);
  CostModel cost{Mat::Identity(2, 2), Mat::Identity(1, 1), Mat::Identity(2, 2),
                 Vec::Zero(2), Vec::Zero(1)};
  Vec x0 = (Vec(2) << 1.0, -0.5).finished();
  int T = 50;
};

Trajectory nominal_for(const SystemModel& model, const CostModel& cost,
                       const Vec& x0, int T) {
  return rollout(model, cost, x0, ControlTrajectory(size_t(T), model.nominal_control()));
}

TEST(Riccati, BackwardPassGainsMatchTimeVaryingRiccati) {
  DoubleIntegratorProblem p;
  const Trajectory nom = nominal_for(p.model, p.cost, p.x0, p.T);
  const auto bp = backward_pass(p.model, p.cost, nom, 0, 0.0);
  const auto K = oracle::riccati_gains(p.model.A(), p.model.B(), p.cost.Q(),
                                       p.cost.R(), p.cost.Qf(), p.T);
  for (int i = 0; i < p.T; ++i) {
    EXPECT_LE((bp.gains.K[i] + K[i]).cwiseAbs().maxCoeff(), 1e-8) << "step " << i;
  }
}

TEST(Riccati, SolverConvergesToLqrInTwoIterations) {
  DoubleIntegratorProblem p;
  const SolveResult r = solve(p.model, p.cost, p.x0,
                              ControlTrajectory(size_t(p.T), Vec::Zero(1)));
  EXPECT_TRUE(r.report.converged);
  EXPECT_LE(r.report.iterations, 2);

  const auto K = oracle::riccati_gains(p.model.A(), p.model.B(), p.cost.Q(),
                                       p.cost.R(), p.cost.Qf(), p.T);
  Vec x = p.x0;
  for (int i = 0; i < p.T; ++i) {
    const Vec u = -K[i] * x;
    EXPECT_NEAR(r.trajectory.U[i][0], u[0], 1e-6) << "step " << i;
    x = p.model.A() * x + p.model.B() * u;
  }
}

class SuffixProperty : public ::testing::TestWithParam<SystemKind> {};

TEST_P(SuffixProperty, PartialPassIsBitIdenticalToFullPassSuffix) {
  const auto model = make_system(GetParam());
  const bool cart = GetParam() == SystemKind::kCartPole;
  const int T = cart ? 30 : 50;
  const CostModel cost =
      cart ? default_cartpole_cost()
           : default_quadrotor_cost(dynamic_cast<const QuadrotorModel&>(*model).hover_thrust());
  Vec x0 = Vec::Zero(model->state_dim());
  x0.head(3) << 0.3, 0.2, 0.1;
  const Trajectory nom = nominal_for(*model, cost, x0, T);

  const auto full = backward_pass(*model, cost, nom, 0, 1e-6);
  EXPECT_EQ(full.steps, T);
  for (int s : {1, T / 2, T - 1}) {
    const auto part = backward_pass(*model, cost, nom, s, 1e-6);
    EXPECT_EQ(part.steps, T - s);
    for (int i = s; i < T; ++i) {
      EXPECT_EQ(part.gains.k[i - s], full.gains.k[i]);
      EXPECT_EQ(part.gains.K[i - s], full.gains.K[i]);
      EXPECT_EQ(part.values[i - s].S, full.values[i].S);
      EXPECT_EQ(part.q[i - s].Q_uu, full.q[i].Q_uu);
    }
    EXPECT_EQ(part.values.back().s, full.values.back().s);
  }
}

INSTANTIATE_TEST_SUITE_P(Systems, SuffixProperty,
                         ::testing::Values(SystemKind::kCartPole, SystemKind::kQuadrotor),
                         [](const auto& info) { return to_string(info.param); });

TEST(BackwardPass, GainsAreStationaryPointsOfTheQModel) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Trajectory nom = nominal_for(model, cost, (Vec(4) << 0.2, 0.4, 0, 0).finished(), 30);
  const auto bp = backward_pass(model, cost, nom, 0, 1e-3);
  for (int i = 0; i < 30; ++i) {
    const QExpansion& q = bp.q[i];
    EXPECT_LT((q.Q_u + q.Q_uu * bp.gains.k[i]).norm(), 1e-9);
    EXPECT_LT((q.Q_ux + q.Q_uu * bp.gains.K[i]).norm(), 1e-9);
    EXPECT_LT((bp.values[i].S - bp.values[i].S.transpose()).norm(), 1e-15);
  }
  EXPECT_LE(bp.expected.linear, 0.0);
}

TEST(BackwardPass, RejectsBadArguments) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Trajectory nom = nominal_for(model, cost, Vec::Zero(4), 10);
  EXPECT_THROW(backward_pass(model, cost, nom, 10, 0.0), InvalidInputError);
  EXPECT_THROW(backward_pass(model, cost, nom, -1, 0.0), InvalidInputError);
  EXPECT_THROW(backward_pass(model, cost, nom, 0, -10.0), NotPositiveDefiniteError);
}

TEST(ForwardPass, ZeroStepReproducesNominal) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Trajectory nom = nominal_for(model, cost, (Vec(4) << 0.1, 0.1, 0, 0).finished(), 20);
  const auto bp = backward_pass(model, cost, nom, 0, 1e-6);
  const auto same = forward_pass(model, cost, nom, bp.gains, 0.0);
  ASSERT_TRUE(same);
  EXPECT_EQ(same->U, nom.U);
  EXPECT_EQ(same->X, nom.X);
  EXPECT_THROW(forward_pass(model, cost, nom, bp.gains.slice(0, 5), 1.0), InvalidInputError);
}

TEST(Rollout, ReportsDivergingStep) {
  const LinearModel blowup(Mat::Constant(1, 1, 1e300), Mat::Identity(1, 1), 0.1);
  const CostModel cost(Mat::Identity(1, 1), Mat::Identity(1, 1), Mat::Identity(1, 1),
                       Vec::Zero(1), Vec::Zero(1));
  try {
    rollout(blowup, cost, Vec::Constant(1, 10.0), ControlTrajectory(5, Vec::Zero(1)));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 2);
  }
}

TEST(Solve, CostDecreasesMonotonically) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Vec x0 = (Vec(4) << 0.3, 0.3, 0, 0).finished();
  const Trajectory nom = nominal_for(model, cost, x0, 30);
  int observed = 0;
  const SolveResult r = solve(model, cost, x0, nom.U, {}, {},
                              [&](int iter, const Trajectory& t, const GainSequence& g) {
                                EXPECT_EQ(iter, observed++);
                                EXPECT_EQ(g.size(), 30);
                                EXPECT_EQ(t.horizon(), 30);
                              });
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(observed, r.report.iterations);
  double prev = nom.cost;
  for (const auto& rec : r.report.history) {
    EXPECT_LE(rec.cost, prev);
    EXPECT_EQ(rec.backward_steps, 30);
    prev = rec.cost;
  }
  EXPECT_LT(r.report.cost, nom.cost);
}

TEST(Iterate, NotPositiveDefiniteRaisesMu) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Trajectory nom = nominal_for(model, cost, (Vec(4) << 0.1, 0.1, 0, 0).finished(), 10);
  const GainStrategy full = full_backward_strategy(model, cost);
  int calls = 0;
  const GainStrategy flaky = [&](const Trajectory& t, double mu) {
    if (calls++ < 2) throw NotPositiveDefiniteError(3, "forced");
    return full(t, mu);
  };
  SolverOptions opts;
  double mu = 1e-6;
  const auto out = iterate(model, cost, nom, flaky, opts, mu);
  EXPECT_TRUE(out.accepted);
  // Two increases, then one decrease on success.
  EXPECT_NEAR(mu, 1e-6 * 100 * 0.5, 1e-18);
}

TEST(Iterate, GivesUpPastMuMaxWithBestTrajectory) {
  const CartPoleModel model;
  const CostModel cost = default_cartpole_cost();
  const Trajectory nom = nominal_for(model, cost, Vec::Zero(4), 5);
  const GainStrategy never = [](const Trajectory&, double) -> GainResult {
    throw NotPositiveDefiniteError(0, "forced");
  };
  double mu = 1e-6;
  try {
    iterate(model, cost, nom, never, SolverOptions{}, mu);
    FAIL() << "expected SolverFailure";
  } catch (const SolverFailure& e) {
    EXPECT_EQ(e.best().U, nom.U);
    EXPECT_GT(mu, SolverOptions{}.mu_max);
  }
}

TEST(SolverOptions, Validation) {
  EXPECT_NO_THROW(SolverOptions{}.validate());
  const auto steps = SolverOptions::default_step_sizes();
  ASSERT_EQ(steps.size(), 10u);
  EXPECT_EQ(steps.front(), 1.0);
  EXPECT_EQ(steps.back(), 1.0 / 512.0);
  SolverOptions bad;
  bad.step_sizes = {0.5, 1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.mu_init = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.tolerance = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(GainSequence, SliceConcatZeros) {
  const GainSequence z = GainSequence::zeros(6, 4, 1);
  EXPECT_EQ(z.size(), 6);
  EXPECT_TRUE(z.all_finite());
  GainSequence g = z;
  for (int i = 0; i < 6; ++i) g.k[i][0] = i;
  const GainSequence head = g.slice(0, 2), tail = g.slice(2, 4);
  EXPECT_EQ(tail.k[0][0], 2.0);
  const GainSequence both = GainSequence::concat(head, tail);
  EXPECT_EQ(both.k, g.k);
  EXPECT_EQ(both.K, g.K);
  EXPECT_THROW(g.slice(4, 3), InvalidInputError);
  g.K[1](0, 0) = NAN;
  EXPECT_FALSE(g.all_finite());
}

}  // namespace
}  // namespace quattro
