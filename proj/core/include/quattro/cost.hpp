#pragma once

#include "quattro/types.hpp"

namespace quattro {

/// Second-order expansion of the running cost at one knot point.
struct CostExpansion {
  Vec l_x;
  Vec l_u;
  Mat l_xx;
  Mat l_uu;
  Mat l_ux;
};

/// Quadratic tracking cost
///
///   l(x, u, i) = 1/2 (x - r_i)' Q (x - r_i) + 1/2 (u - u_ref)' R (u - u_ref)
///   l_N(x)     = 1/2 (x - r_N)' Q_f (x - r_N)
///
/// The state reference r_i is either one constant state or a sequence. When
/// a sequence is shorter than the index asked for, its last entry is held.
class CostModel {
 public:
  /// Validates shapes, symmetry, Q and Q_f PSD, R PD.
  CostModel(Mat Q, Mat R, Mat Qf, Vec x_ref, Vec u_ref);
  CostModel(Mat Q, Mat R, Mat Qf, StateTrajectory x_ref, Vec u_ref);

  int state_dim() const { return static_cast<int>(Q_.rows()); }
  int control_dim() const { return static_cast<int>(R_.rows()); }

  const Mat& Q() const { return Q_; }
  const Mat& R() const { return R_; }
  const Mat& Qf() const { return Qf_; }
  const Vec& u_ref() const { return u_ref_; }
  const Vec& state_ref(int i) const;

  double running_cost(const Vec& x, const Vec& u, int i) const;
  double terminal_cost(const Vec& x, int terminal_index) const;

  CostExpansion quadratize(const Vec& x, const Vec& u, int i) const;

  /// Gradient and Hessian of the terminal cost.
  std::pair<Vec, Mat> terminal_expansion(const Vec& x,
                                         int terminal_index) const;

  /// J(X, U) = sum_i l(x_i, u_i, i) + l_N(x_T). Requires |X| = |U| + 1.
  double trajectory_cost(const StateTrajectory& X,
                         const ControlTrajectory& U) const;

  /// Copy whose reference starts `offset` steps later (receding horizon).
  CostModel shifted(int offset) const;

 private:
  void validate() const;
  void check_dims(const Vec& x, const Vec& u) const;

  Mat Q_, R_, Qf_;
  StateTrajectory x_ref_;
  Vec u_ref_;
};

/// Default weights: Q = diag(1, 10, 0.1, 0.1), R = 0.1, Q_f = 10 Q, target
/// upright at the origin.
CostModel default_cartpole_cost();

/// Default weights: Q = diag(10,10,10, 1,1,1, 0.1 x 6), R = 0.1 I, Q_f = 10 Q,
/// target hover at the origin with u_ref = hover thrust.
CostModel default_quadrotor_cost(double hover_thrust);

}  // namespace quattro
