#pragma once

#include <memory>
#include <string>

#include "quattro/types.hpp"

namespace quattro {

/// Local linear model of the discrete step map: dx' = A dx + B du.
struct LinearizedStep {
  Mat A;
  Mat B;
};

/// Discrete-time system x_{i+1} = f(x_i, u_i).
///
/// Continuous models implement `derivative` and inherit the RK4 `step`.
/// Purely discrete models override `step` directly. All members are const
/// and the objects are immutable after construction, so one instance can be
/// shared across threads.
class SystemModel {
 public:
  SystemModel(int state_dim, int control_dim, double dt);
  virtual ~SystemModel() = default;

  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  double dt() const { return dt_; }

  virtual std::string name() const = 0;

  /// Continuous-time state derivative. Only used by the default `step`.
  virtual Vec derivative(const Vec& x, const Vec& u) const;

  /// One step of the discrete map. Throws InvalidInputError on wrong sizes
  /// or non-finite entries.
  Vec step(const Vec& x, const Vec& u) const;

  /// Central finite differences of `step`, perturbation
  /// h = 1e-6 * max(1, |component|).
  LinearizedStep linearize(const Vec& x, const Vec& u) const;

  /// The control a solver starts from when nothing better is known.
  virtual Vec nominal_control() const;

 protected:
  /// Step without the input checks; `step` validates and forwards here.
  virtual Vec step_unchecked(const Vec& x, const Vec& u) const;

 private:
  void check_inputs(const Vec& x, const Vec& u) const;

  int state_dim_;
  int control_dim_;
  double dt_;
};

/// Classic fourth-order Runge-Kutta step of a continuous vector field.
template <typename Field>
Vec rk4_step(const Field& f, const Vec& x, double dt) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * dt * k1);
  const Vec k3 = f(x + 0.5 * dt * k2);
  const Vec k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gravity = 9.81;
};

/// Cart-pole with state (x, theta, x_dot, theta_dot), theta = 0 upright,
/// and a single horizontal force input in newtons.
class CartPoleModel final : public SystemModel {
 public:
  explicit CartPoleModel(CartPoleParams params = {}, double dt = 0.01);

  std::string name() const override { return "cartpole"; }
  Vec derivative(const Vec& x, const Vec& u) const override;

  const CartPoleParams& params() const { return params_; }

 private:
  CartPoleParams params_;
};

struct QuadrotorParams {
  double mass = 0.5;
  double arm_length = 0.1725;
  Eigen::Vector3d inertia{2.3e-3, 2.3e-3, 4.0e-3};
  /// Rotor drag torque per newton of thrust (m).
  double yaw_moment_coeff = 0.016;
  double max_thrust = 6.0;
  double gravity = 9.81;
};

/// Rigid-body quadrotor in "+" configuration.
///
/// State: position (3), roll/pitch/yaw (3), world-frame linear velocity (3),
/// body angular rates (3). Controls: rotor thrusts, front (+x), left (+y),
/// back, right; each is clamped to [0, max_thrust] before it acts.
class QuadrotorModel final : public SystemModel {
 public:
  explicit QuadrotorModel(QuadrotorParams params = {}, double dt = 0.01);

  std::string name() const override { return "quadrotor"; }
  Vec derivative(const Vec& x, const Vec& u) const override;
  Vec nominal_control() const override;

  double hover_thrust() const;
  const QuadrotorParams& params() const { return params_; }

 private:
  QuadrotorParams params_;
};

/// Discrete linear system x' = A x + B u. Used as a test model with an exact
/// Riccati solution.
class LinearModel final : public SystemModel {
 public:
  LinearModel(Mat A, Mat B, double dt);

  std::string name() const override { return "linear"; }

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }

 protected:
  Vec step_unchecked(const Vec& x, const Vec& u) const override;

 private:
  Mat A_;
  Mat B_;
};

/// Exact zero-order-hold discretization of the double integrator p'' = u.
LinearModel make_double_integrator(double dt);

enum class SystemKind { kCartPole = 1, kQuadrotor = 2 };

std::unique_ptr<SystemModel> make_system(SystemKind kind, double dt = 0.01);
SystemKind parse_system_kind(const std::string& name);
std::string to_string(SystemKind kind);

}  // namespace quattro
