#include "quattro/cost.hpp"

#include <algorithm>
#include <string>

namespace quattro {
namespace {

bool is_symmetric(const Mat& M) {
  return (M - M.transpose()).cwiseAbs().maxCoeff() <=
         1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
}

double min_eigenvalue(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_weight(const Mat& M, int dim, const char* name, bool definite) {
  if (M.rows() != dim || M.cols() != dim) {
    throw ConfigError(std::string(name) + " must be " + std::to_string(dim) +
                      "x" + std::to_string(dim));
  }
  if (!M.allFinite() || !is_symmetric(M)) {
    throw ConfigError(std::string(name) + " must be finite and symmetric");
  }
  const double tol = 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
  const double lo = min_eigenvalue(M);
  if (definite ? !(lo > tol) : lo < -tol) {
    throw ConfigError(std::string(name) + " must be positive " +
                      (definite ? "definite" : "semi-definite"));
  }
}

}  // namespace

CostModel::CostModel(Mat Q, Mat R, Mat Qf, Vec x_ref, Vec u_ref)
    : CostModel(std::move(Q), std::move(R), std::move(Qf),
                StateTrajectory{std::move(x_ref)}, std::move(u_ref)) {}

CostModel::CostModel(Mat Q, Mat R, Mat Qf, StateTrajectory x_ref, Vec u_ref)
    : Q_(std::move(Q)),
      R_(std::move(R)),
      Qf_(std::move(Qf)),
      x_ref_(std::move(x_ref)),
      u_ref_(std::move(u_ref)) {
  validate();
}

void CostModel::validate() const {
  const int n = static_cast<int>(Q_.rows());
  const int m = static_cast<int>(R_.rows());
  require_weight(Q_, n, "Q", false);
  require_weight(R_, m, "R", true);
  require_weight(Qf_, n, "Q_f", false);
  if (x_ref_.empty()) throw ConfigError("state reference is empty");
  for (const Vec& r : x_ref_) {
    if (r.size() != n || !r.allFinite()) {
      throw ConfigError("state reference entries must be finite, dimension " +
                        std::to_string(n));
    }
  }
  if (u_ref_.size() != m || !u_ref_.allFinite()) {
    throw ConfigError("control reference must be finite, dimension " +
                      std::to_string(m));
  }
}

const Vec& CostModel::state_ref(int i) const {
  const auto last = static_cast<int>(x_ref_.size()) - 1;
  return x_ref_[static_cast<size_t>(std::clamp(i, 0, last))];
}

void CostModel::check_dims(const Vec& x, const Vec& u) const {
  if (x.size() != state_dim() || u.size() != control_dim()) {
    throw InvalidInputError("cost evaluated with mismatched dimensions");
  }
}

double CostModel::running_cost(const Vec& x, const Vec& u, int i) const {
  check_dims(x, u);
  const Vec dx = x - state_ref(i);
  const Vec du = u - u_ref_;
  return 0.5 * dx.dot(Q_ * dx) + 0.5 * du.dot(R_ * du);
}

double CostModel::terminal_cost(const Vec& x, int terminal_index) const {
  if (x.size() != state_dim()) {
    throw InvalidInputError("terminal cost evaluated with mismatched state");
  }
  const Vec dx = x - state_ref(terminal_index);
  return 0.5 * dx.dot(Qf_ * dx);
}

CostExpansion CostModel::quadratize(const Vec& x, const Vec& u, int i) const {
  check_dims(x, u);
  return CostExpansion{Q_ * (x - state_ref(i)), R_ * (u - u_ref_), Q_, R_,
                       Mat::Zero(control_dim(), state_dim())};
}

std::pair<Vec, Mat> CostModel::terminal_expansion(const Vec& x,
                                                  int terminal_index) const {
  if (x.size() != state_dim()) {
    throw InvalidInputError("terminal expansion with mismatched state");
  }
  return {Qf_ * (x - state_ref(terminal_index)), Qf_};
}

double CostModel::trajectory_cost(const StateTrajectory& X,
                                  const ControlTrajectory& U) const {
  if (X.size() != U.size() + 1) {
    throw InvalidInputError("trajectory needs one more state than controls");
  }
  double total = 0.0;
  const int T = static_cast<int>(U.size());
  for (int i = 0; i < T; ++i) total += running_cost(X[i], U[i], i);
  return total + terminal_cost(X[T], T);
}

CostModel CostModel::shifted(int offset) const {
  if (x_ref_.size() == 1 || offset == 0) return *this;
  StateTrajectory refs;
  const int len = static_cast<int>(x_ref_.size());
  for (int i = std::min(offset, len - 1); i < len; ++i) refs.push_back(x_ref_[i]);
  return CostModel(Q_, R_, Qf_, std::move(refs), u_ref_);
}

CostModel default_cartpole_cost() {
  Vec q(4);
  q << 1.0, 10.0, 0.1, 0.1;
  const Mat Q = q.asDiagonal();
  return CostModel(Q, Mat::Constant(1, 1, 0.1), 10.0 * Q, Vec::Zero(4),
                   Vec::Zero(1));
}

CostModel default_quadrotor_cost(double hover_thrust) {
  Vec q(12);
  q << 10, 10, 10, 1, 1, 1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1;
  const Mat Q = q.asDiagonal();
  return CostModel(Q, 0.1 * Mat::Identity(4, 4), 10.0 * Q, Vec::Zero(12),
                   Vec::Constant(4, hover_thrust));
}

}  // namespace quattro
