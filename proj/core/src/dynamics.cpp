#include "quattro/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace quattro {

SystemModel::SystemModel(int state_dim, int control_dim, double dt)
    : state_dim_(state_dim), control_dim_(control_dim), dt_(dt) {
  if (state_dim <= 0 || control_dim <= 0) {
    throw ConfigError("system dimensions must be positive");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("time step must be positive");
  }
}

Vec SystemModel::derivative(const Vec& /*x*/, const Vec& /*u*/) const {
  throw Error(name() + " has no continuous-time derivative");
}

Vec SystemModel::nominal_control() const { return Vec::Zero(control_dim_); }

void SystemModel::check_inputs(const Vec& x, const Vec& u) const {
  if (x.size() != state_dim_) {
    throw InvalidInputError("state has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(state_dim_));
  }
  if (u.size() != control_dim_) {
    throw InvalidInputError("control has dimension " +
                            std::to_string(u.size()) + ", expected " +
                            std::to_string(control_dim_));
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw InvalidInputError("non-finite state or control");
  }
}

Vec SystemModel::step(const Vec& x, const Vec& u) const {
  check_inputs(x, u);
  return step_unchecked(x, u);
}

Vec SystemModel::step_unchecked(const Vec& x, const Vec& u) const {
  return rk4_step([&](const Vec& s) { return derivative(s, u); }, x, dt_);
}

LinearizedStep SystemModel::linearize(const Vec& x, const Vec& u) const {
  check_inputs(x, u);
  const int n = state_dim_;
  const int m = control_dim_;
  LinearizedStep lin{Mat(n, n), Mat(n, m)};

  Vec xp = x;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const Vec plus = step_unchecked(xp, u);
    xp[j] = x[j] - h;
    const Vec minus = step_unchecked(xp, u);
    xp[j] = x[j];
    lin.A.col(j) = (plus - minus) / (2.0 * h);
  }
  Vec up = u;
  for (int j = 0; j < m; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
    up[j] = u[j] + h;
    const Vec plus = step_unchecked(x, up);
    up[j] = u[j] - h;
    const Vec minus = step_unchecked(x, up);
    up[j] = u[j];
    lin.B.col(j) = (plus - minus) / (2.0 * h);
  }
  if (!lin.A.allFinite() || !lin.B.allFinite()) {
    throw LinearizationError(name() + ": non-finite Jacobian entries");
  }
  return lin;
}

// ---------------------------------------------------------------------------

CartPoleModel::CartPoleModel(CartPoleParams params, double dt)
    : SystemModel(4, 1, dt), params_(params) {
  if (!(params_.cart_mass > 0 && params_.pole_mass > 0 &&
        params_.half_length > 0 && params_.gravity > 0)) {
    throw ConfigError("cart-pole parameters must be positive");
  }
}

Vec CartPoleModel::derivative(const Vec& x, const Vec& u) const {
  const double M = params_.cart_mass;
  const double m = params_.pole_mass;
  const double l = params_.half_length;
  const double g = params_.gravity;
  const double total = M + m;

  const double theta = x[1];
  const double omega = x[3];
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double force = u[0];

  const double temp = (force + m * l * omega * omega * s) / total;
  const double theta_acc =
      (g * s - c * temp) / (l * (4.0 / 3.0 - m * c * c / total));
  const double x_acc = temp - m * l * theta_acc * c / total;

  Vec dx(4);
  dx << x[2], omega, x_acc, theta_acc;
  return dx;
}

// ---------------------------------------------------------------------------

QuadrotorModel::QuadrotorModel(QuadrotorParams params, double dt)
    : SystemModel(12, 4, dt), params_(std::move(params)) {
  if (!(params_.mass > 0 && params_.arm_length > 0 &&
        (params_.inertia.array() > 0).all() && params_.max_thrust > 0 &&
        params_.gravity > 0)) {
    throw ConfigError("quadrotor parameters must be positive");
  }
}

double QuadrotorModel::hover_thrust() const {
  return params_.mass * params_.gravity / 4.0;
}

Vec QuadrotorModel::nominal_control() const {
  return Vec::Constant(4, hover_thrust());
}

Vec QuadrotorModel::derivative(const Vec& x, const Vec& u) const {
  const auto& p = params_;
  Eigen::Vector4d thrust;
  for (int i = 0; i < 4; ++i) thrust[i] = std::clamp(u[i], 0.0, p.max_thrust);

  const double roll = x[3], pitch = x[4], yaw = x[5];
  const Eigen::Vector3d rates = x.segment<3>(9);

  const double sr = std::sin(roll), cr = std::cos(roll);
  const double sp = std::sin(pitch), cp = std::cos(pitch);
  const double sy = std::sin(yaw), cy = std::cos(yaw);

  // Z-Y-X body-to-world rotation; only the body z-axis is needed.
  const Eigen::Vector3d body_z(cy * sp * cr + sy * sr, sy * sp * cr - cy * sr,
                               cp * cr);
  const double total_thrust = thrust.sum();
  Eigen::Vector3d accel = body_z * (total_thrust / p.mass);
  accel.z() -= p.gravity;

  // Euler angle rates from body rates.
  const double tp = sp / cp;
  Eigen::Vector3d euler_rates;
  euler_rates << rates.x() + sr * tp * rates.y() + cr * tp * rates.z(),
      cr * rates.y() - sr * rates.z(),
      (sr * rates.y() + cr * rates.z()) / cp;

  const double L = p.arm_length;
  const Eigen::Vector3d torque(
      L * (thrust[1] - thrust[3]), L * (thrust[2] - thrust[0]),
      p.yaw_moment_coeff * (thrust[0] - thrust[1] + thrust[2] - thrust[3]));
  const Eigen::Vector3d& I = p.inertia;
  const Eigen::Vector3d momentum = I.cwiseProduct(rates);
  const Eigen::Vector3d rate_dot =
      (torque - rates.cross(momentum)).cwiseQuotient(I);

  Vec dx(12);
  dx << x.segment<3>(6), euler_rates, accel, rate_dot;
  return dx;
}

// ---------------------------------------------------------------------------

LinearModel::LinearModel(Mat A, Mat B, double dt)
    : SystemModel(static_cast<int>(A.rows()), static_cast<int>(B.cols()), dt),
      A_(std::move(A)),
      B_(std::move(B)) {
  if (A_.rows() != A_.cols() || B_.rows() != A_.rows()) {
    throw ConfigError("linear model matrices have inconsistent shapes");
  }
}

Vec LinearModel::step_unchecked(const Vec& x, const Vec& u) const {
  return A_ * x + B_ * u;
}

LinearModel make_double_integrator(double dt) {
  Mat A(2, 2);
  A << 1.0, dt, 0.0, 1.0;
  Mat B(2, 1);
  B << 0.5 * dt * dt, dt;
  return LinearModel(std::move(A), std::move(B), dt);
}

std::unique_ptr<SystemModel> make_system(SystemKind kind, double dt) {
  switch (kind) {
    case SystemKind::kCartPole:
      return std::make_unique<CartPoleModel>(CartPoleParams{}, dt);
    case SystemKind::kQuadrotor:
      return std::make_unique<QuadrotorModel>(QuadrotorParams{}, dt);
  }
  throw ConfigError("unknown system kind");
}

SystemKind parse_system_kind(const std::string& name) {
  if (name == "cartpole") return SystemKind::kCartPole;
  if (name == "quadrotor") return SystemKind::kQuadrotor;
  throw ConfigError("unknown system '" + name +
                    "' (expected cartpole or quadrotor)");
}

std::string to_string(SystemKind kind) {
  return kind == SystemKind::kCartPole ? "cartpole" : "quadrotor";
}

}  // namespace quattro
