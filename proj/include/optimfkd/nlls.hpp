#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimfkd/fkd.hpp"
#include "optimfkd/types.hpp"

namespace optimfkd {

/// Abstract residual evaluation for the damped Gauss-Newton core. Cost is
/// 0.5 * ||r||^2 throughout.
class ResidualProblem {
 public:
  virtual ~ResidualProblem() = default;
  virtual int num_residuals() const = 0;
  virtual int num_params() const = 0;
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& p) const = 0;
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const = 0;
  /// Override when residual and Jacobian share work (one rollout here).
  virtual void evaluate_with_jacobian(const Eigen::VectorXd& p,
                                      Eigen::VectorXd& r,
                                      Eigen::MatrixXd& j) const {
    r = evaluate(p);
    j = jacobian(p);
  }
};

struct LMConfig {
  int max_iters = 50;
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 1.0 / 3.0;
  double lambda_max = 1e12;
  double grad_tol = 1e-8;  // on ||J^T r||_inf
  double step_tol = 1e-8;  // on ||dx|| relative to ||x||
  double cost_tol = 1e-8;  // absolute cost threshold
};

enum class LMStop { gradient, step, cost, max_iters };
const char* lm_stop_name(LMStop reason);

struct LMResult {
  Eigen::VectorXd params;
  double cost = 0.0;  // 0.5 * ||r||^2
  int iterations = 0; // accepted steps
  LMStop reason = LMStop::max_iters;
  std::vector<double> cost_history;  // cost after each accepted step
};

/// Damped normal equations: solve (J^T J + lambda diag(J^T J)) dx = -J^T r,
/// accept on cost decrease (shrinking lambda), otherwise grow lambda.
/// Throws NumericalFailureError if the damped system stays unusable up to
/// lambda_max.
LMResult lm_solve(const ResidualProblem& problem, const Eigen::VectorXd& x0,
                  const LMConfig& cfg);

/// Unbounded-variable parameterization of box-bounded controls:
/// c = lo + (hi - lo) * (tanh(z) + 1) / 2 per channel, applied cyclically
/// over the parameter vector.
struct SquashMap {
  struct Channel {
    double lo = 0.0;
    double hi = 1.0;
  };
  std::vector<Channel> channels;

  static SquashMap control_bounds(double v_max, double psi_max) {
    return {{{0.0, v_max}, {-psi_max, psi_max}}};
  }
  Eigen::VectorXd squash(const Eigen::VectorXd& z,
                         Eigen::VectorXd* dcdz = nullptr) const;
  Eigen::VectorXd unsquash(const Eigen::VectorXd& c) const;
};

std::vector<Control> to_controls(const Eigen::VectorXd& flat);
Eigen::VectorXd from_controls(const std::vector<Control>& controls);

struct PathWeights {
  double w_x = 1.0;
  double w_y = 1.0;
  double w_theta = 0.5;
};

/// Path following: residual block i is the weighted pose error between
/// target i and predicted state i (heading wrapped); optimization runs in
/// squash space so the solver is unconstrained.
class PathFollowingProblem : public ResidualProblem {
 public:
  PathFollowingProblem(const FkdModel& model, std::vector<RobotState> history,
                       std::vector<Pose> targets, PathWeights weights,
                       SquashMap squash);
  int num_residuals() const override { return 3 * static_cast<int>(targets_.size()); }
  int num_params() const override { return 2 * static_cast<int>(targets_.size()); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const override;
  void evaluate_with_jacobian(const Eigen::VectorXd& z, Eigen::VectorXd& r,
                              Eigen::MatrixXd& j) const override;

 private:
  Eigen::VectorXd residuals_from(const RolloutResult& roll) const;
  const FkdModel* model_;
  std::vector<RobotState> history_;
  std::vector<Pose> targets_;
  PathWeights w_;
  SquashMap squash_;
};

struct ConnectivityWeights {
  double w_x = 1.0, w_y = 1.0, w_theta = 0.5;
  double w_vx = 0.3, w_vy = 0.3, w_omega = 0.1;
};

/// Optimal connectivity for a fixed step count n: six weighted terminal
/// residuals plus the constant time residual alpha * n * tau.
class ConnectivityProblem : public ResidualProblem {
 public:
  ConnectivityProblem(const FkdModel& model, std::vector<RobotState> history,
                      RobotState goal, int n, double alpha,
                      ConnectivityWeights weights, SquashMap squash);
  int num_residuals() const override { return 7; }
  int num_params() const override { return 2 * n_; }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const override;
  void evaluate_with_jacobian(const Eigen::VectorXd& z, Eigen::VectorXd& r,
                              Eigen::MatrixXd& j) const override;
  double time_term() const;

 private:
  Eigen::VectorXd residuals_from(const RolloutResult& roll) const;
  const FkdModel* model_;
  std::vector<RobotState> history_;
  RobotState goal_;
  int n_;
  double alpha_;
  ConnectivityWeights w_;
  SquashMap squash_;
};

struct ConnectivityCostRow {
  int n = 0;
  double cost = 0.0;          // 0.5 * ||r||^2 including the time residual
  double terminal_err = 0.0;  // ||weighted terminal residual||
  double time_term = 0.0;     // alpha * n * tau
  int iters = 0;
  LMStop reason = LMStop::max_iters;
};

struct ConnectivitySolution {
  std::vector<Control> controls;
  Eigen::VectorXd z;
  int n = 0;
  double cost = 0.0;
  std::vector<ConnectivityCostRow> table;
};

void write_cost_table_csv(const std::string& path,
                          const std::vector<ConnectivityCostRow>& table);

/// Discrete outer search over the step count: candidate n are multiples of
/// steps_per_window in [n_min, n_max], swept on a coarse grid and refined
/// around the best entry, each solve warm-started from the previous n's
/// padded or truncated solution. Throws NumericalFailureError if every
/// candidate fails.
ConnectivitySolution solve_optimal_connectivity(
    const FkdModel& model, const std::vector<RobotState>& history,
    const RobotState& goal, double alpha, int n_min, int n_max,
    const ConnectivityWeights& weights, const SquashMap& squash,
    const LMConfig& cfg, const Eigen::VectorXd* warm_z = nullptr);

}  // namespace optimfkd
