#include "optimfkd/nlls.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <Eigen/Cholesky>

#include "optimfkd/errors.hpp"

namespace optimfkd {

const char* lm_stop_name(LMStop reason) {
  switch (reason) {
    case LMStop::gradient: return "gradient";
    case LMStop::step: return "step";
    case LMStop::cost: return "cost";
    case LMStop::max_iters: return "max_iters";
  }
  return "unknown";
}

LMResult lm_solve(const ResidualProblem& problem, const Eigen::VectorXd& x0,
                  const LMConfig& cfg) {
  if (x0.size() != problem.num_params())
    throw std::invalid_argument("lm_solve: x0 dimension mismatch");
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = problem.evaluate(x);
  if (r.size() != problem.num_residuals())
    throw std::invalid_argument("lm_solve: residual dimension mismatch");
  double cost = 0.5 * r.squaredNorm();
  LMResult res;
  res.cost_history.push_back(cost);
  if (!std::isfinite(cost))
    throw NumericalFailureError("lm_solve: non-finite initial cost");
  if (cost <= cfg.cost_tol) {
    res.params = x;
    res.cost = cost;
    res.reason = LMStop::cost;
    return res;
  }

  double lambda = cfg.lambda0;
  Eigen::VectorXd r_jac;
  Eigen::MatrixXd jac;
  LMStop reason = LMStop::max_iters;
  int accepted = 0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    problem.evaluate_with_jacobian(x, r_jac, jac);
    const Eigen::VectorXd g = jac.transpose() * r_jac;
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      reason = LMStop::gradient;
      break;
    }
    const Eigen::MatrixXd h = jac.transpose() * jac;
    const Eigen::VectorXd d = h.diagonal().cwiseMax(1e-12);

    bool stepped = false;
    while (lambda <= cfg.lambda_max) {
      Eigen::MatrixXd damped = h;
      damped.diagonal() += lambda * d;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd dx = ldlt.solve(-g);
        if (dx.allFinite()) {
          const Eigen::VectorXd x_new = x + dx;
          const Eigen::VectorXd r_new = problem.evaluate(x_new);
          const double cost_new = 0.5 * r_new.squaredNorm();
          if (std::isfinite(cost_new) && cost_new < cost) {
            x = x_new;
            cost = cost_new;
            accepted += 1;
            res.cost_history.push_back(cost);
            lambda = std::max(lambda * cfg.lambda_down, 1e-15);
            stepped = true;
            if (cost <= cfg.cost_tol) reason = LMStop::cost;
            else if (dx.norm() <= cfg.step_tol * (x.norm() + cfg.step_tol))
              reason = LMStop::step;
            break;
          }
        }
      }
      lambda *= cfg.lambda_up;
    }
    if (!stepped)
      throw NumericalFailureError("lm_solve: no usable step up to lambda_max");
    if (reason != LMStop::max_iters) break;
  }
  res.params = x;
  res.cost = cost;
  res.iterations = accepted;
  res.reason = reason;
  return res;
}

// --- squash -----------------------------------------------------------------

Eigen::VectorXd SquashMap::squash(const Eigen::VectorXd& z,
                                  Eigen::VectorXd* dcdz) const {
  const int nc = static_cast<int>(channels.size());
  Eigen::VectorXd c(z.size());
  if (dcdz != nullptr) dcdz->resize(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const Channel& ch = channels[i % nc];
    const double t = std::tanh(z(i));
    c(i) = ch.lo + (ch.hi - ch.lo) * 0.5 * (t + 1.0);
    if (dcdz != nullptr) (*dcdz)(i) = (ch.hi - ch.lo) * 0.5 * (1.0 - t * t);
  }
  return c;
}

Eigen::VectorXd SquashMap::unsquash(const Eigen::VectorXd& c) const {
  const int nc = static_cast<int>(channels.size());
  Eigen::VectorXd z(c.size());
  for (int i = 0; i < c.size(); ++i) {
    const Channel& ch = channels[i % nc];
    double t = 2.0 * (c(i) - ch.lo) / (ch.hi - ch.lo) - 1.0;
    t = std::clamp(t, -1.0 + 1e-12, 1.0 - 1e-12);
    z(i) = std::atanh(t);
  }
  return z;
}

std::vector<Control> to_controls(const Eigen::VectorXd& flat) {
  if (flat.size() % 2 != 0)
    throw std::invalid_argument("to_controls: odd-length control vector");
  std::vector<Control> out;
  out.reserve(flat.size() / 2);
  for (int i = 0; i < flat.size(); i += 2) out.push_back({flat(i), flat(i + 1)});
  return out;
}

Eigen::VectorXd from_controls(const std::vector<Control>& controls) {
  Eigen::VectorXd flat(2 * controls.size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    flat(2 * i) = controls[i].delta;
    flat(2 * i + 1) = controls[i].psi;
  }
  return flat;
}

// --- path following ----------------------------------------------------------

PathFollowingProblem::PathFollowingProblem(const FkdModel& model,
                                           std::vector<RobotState> history,
                                           std::vector<Pose> targets,
                                           PathWeights weights, SquashMap squash)
    : model_(&model),
      history_(std::move(history)),
      targets_(std::move(targets)),
      w_(weights),
      squash_(std::move(squash)) {}

Eigen::VectorXd PathFollowingProblem::residuals_from(const RolloutResult& roll) const {
  const int n = static_cast<int>(targets_.size());
  Eigen::VectorXd r(3 * n);
  for (int i = 0; i < n; ++i) {
    r(3 * i) = w_.w_x * (targets_[i].x - roll.states[i].x);
    r(3 * i + 1) = w_.w_y * (targets_[i].y - roll.states[i].y);
    r(3 * i + 2) = w_.w_theta * wrap_angle(targets_[i].theta - roll.states[i].theta);
  }
  return r;
}

Eigen::VectorXd PathFollowingProblem::evaluate(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd u = squash_.squash(z);
  return residuals_from(fkd_rollout(*model_, history_, to_controls(u)));
}

void PathFollowingProblem::evaluate_with_jacobian(const Eigen::VectorXd& z,
                                                  Eigen::VectorXd& r,
                                                  Eigen::MatrixXd& j) const {
  Eigen::VectorXd dcdz;
  const Eigen::VectorXd u = squash_.squash(z, &dcdz);
  Eigen::MatrixXd roll_jac;
  const RolloutResult roll =
      fkd_rollout_jacobian(*model_, history_, to_controls(u), roll_jac);
  r = residuals_from(roll);
  const int n = static_cast<int>(targets_.size());
  j.resize(3 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    j.row(3 * i) = -w_.w_x * roll_jac.row(6 * i);
    j.row(3 * i + 1) = -w_.w_y * roll_jac.row(6 * i + 1);
    j.row(3 * i + 2) = -w_.w_theta * roll_jac.row(6 * i + 2);
  }
  j = j * dcdz.asDiagonal();
}

Eigen::MatrixXd PathFollowingProblem::jacobian(const Eigen::VectorXd& z) const {
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  evaluate_with_jacobian(z, r, j);
  return j;
}

// --- optimal connectivity -----------------------------------------------------

ConnectivityProblem::ConnectivityProblem(const FkdModel& model,
                                         std::vector<RobotState> history,
                                         RobotState goal, int n, double alpha,
                                         ConnectivityWeights weights,
                                         SquashMap squash)
    : model_(&model),
      history_(std::move(history)),
      goal_(goal),
      n_(n),
      alpha_(alpha),
      w_(weights),
      squash_(std::move(squash)) {
  if (n_ < 1 || n_ % model.spec.steps_per_window() != 0)
    throw std::invalid_argument(
        "ConnectivityProblem: n must be a positive multiple of steps_per_window");
}

double ConnectivityProblem::time_term() const {
  return alpha_ * static_cast<double>(n_) * model_->spec.tau;
}

Eigen::VectorXd ConnectivityProblem::residuals_from(const RolloutResult& roll) const {
  const RobotState& xn = roll.states.back();
  Eigen::VectorXd r(7);
  r(0) = w_.w_x * (goal_.x - xn.x);
  r(1) = w_.w_y * (goal_.y - xn.y);
  r(2) = w_.w_theta * wrap_angle(goal_.theta - xn.theta);
  r(3) = w_.w_vx * (goal_.v_x - xn.v_x);
  r(4) = w_.w_vy * (goal_.v_y - xn.v_y);
  r(5) = w_.w_omega * (goal_.omega - xn.omega);
  r(6) = time_term();
  return r;
}

Eigen::VectorXd ConnectivityProblem::evaluate(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd u = squash_.squash(z);
  return residuals_from(fkd_rollout(*model_, history_, to_controls(u)));
}

void ConnectivityProblem::evaluate_with_jacobian(const Eigen::VectorXd& z,
                                                 Eigen::VectorXd& r,
                                                 Eigen::MatrixXd& j) const {
  Eigen::VectorXd dcdz;
  const Eigen::VectorXd u = squash_.squash(z, &dcdz);
  Eigen::MatrixXd roll_jac;
  const RolloutResult roll =
      fkd_rollout_jacobian(*model_, history_, to_controls(u), roll_jac);
  r = residuals_from(roll);
  const double w[6] = {w_.w_x, w_.w_y, w_.w_theta, w_.w_vx, w_.w_vy, w_.w_omega};
  j.setZero(7, 2 * n_);
  const int last = 6 * (n_ - 1);
  for (int c = 0; c < 6; ++c) j.row(c) = -w[c] * roll_jac.row(last + c);
  j = j * dcdz.asDiagonal();  // last row stays zero: time term is constant in u
}

Eigen::MatrixXd ConnectivityProblem::jacobian(const Eigen::VectorXd& z) const {
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  evaluate_with_jacobian(z, r, j);
  return j;
}

void write_cost_table_csv(const std::string& path,
                          const std::vector<ConnectivityCostRow>& table) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "n,cost,terminal_err,time_term,iters,reason\n";
  for (const ConnectivityCostRow& row : table) {
    f << row.n << ',' << row.cost << ',' << row.terminal_err << ','
      << row.time_term << ',' << row.iters << ',' << lm_stop_name(row.reason)
      << "\n";
  }
}

namespace {

// Pad by repeating the final control's z pair, truncate from the tail.
Eigen::VectorXd resize_warm(const Eigen::VectorXd& z, int n_params) {
  Eigen::VectorXd out(n_params);
  if (z.size() == 0) return Eigen::VectorXd::Zero(n_params);
  const int keep = std::min<int>(static_cast<int>(z.size()), n_params);
  out.head(keep) = z.head(keep);
  for (int i = keep; i < n_params; i += 2) {
    out(i) = z(z.size() - 2);
    if (i + 1 < n_params) out(i + 1) = z(z.size() - 1);
  }
  return out;
}

}  // namespace

ConnectivitySolution solve_optimal_connectivity(
    const FkdModel& model, const std::vector<RobotState>& history,
    const RobotState& goal, double alpha, int n_min, int n_max,
    const ConnectivityWeights& weights, const SquashMap& squash,
    const LMConfig& cfg, const Eigen::VectorXd* warm_z) {
  const int spw = model.spec.steps_per_window();
  if (n_min < spw || n_max < n_min || n_min % spw != 0 || n_max % spw != 0)
    throw std::invalid_argument(
        "solve_optimal_connectivity: n range must be multiples of steps_per_window");

  std::vector<int> all_n;
  for (int n = n_min; n <= n_max; n += spw) all_n.push_back(n);

  struct Entry {
    LMResult lm;
    ConnectivityCostRow row;
  };
  std::map<int, Entry> solved;
  Eigen::VectorXd last_z = warm_z != nullptr ? *warm_z : Eigen::VectorXd();

  auto solve_n = [&](int n) -> bool {
    if (solved.count(n)) return true;
    ConnectivityProblem prob(model, history, goal, n, alpha, weights, squash);
    Eigen::VectorXd z0;
    if (last_z.size() > 0) {
      z0 = resize_warm(last_z, 2 * n);
    } else {
      // gentle start: slow forward, zero turn. Keeps the degenerate
      // already-at-goal case near zero controls while leaving gradient
      // signal for distant goals (delta = 0 would sit on a squash plateau).
      std::vector<Control> init(n, Control{0.5, 0.0});
      z0 = squash.unsquash(from_controls(init));
    }
    try {
      Entry e;
      e.lm = lm_solve(prob, z0, cfg);
      e.row.n = n;
      e.row.cost = e.lm.cost;
      e.row.time_term = prob.time_term();
      const Eigen::VectorXd r = prob.evaluate(e.lm.params);
      e.row.terminal_err = r.head(6).norm();
      e.row.iters = e.lm.iterations;
      e.row.reason = e.lm.reason;
      // chain warm starts away from the squash plateaus
      last_z = e.lm.params.cwiseMax(-4.0).cwiseMin(4.0);
      solved.emplace(n, std::move(e));
      return true;
    } catch (const NumericalFailureError&) {
      return false;
    }
  };

  // Coarse sweep (every other multiple, endpoints included), then refine
  // the best candidate's unexplored neighbors.
  for (std::size_t i = 0; i < all_n.size(); i += 2) solve_n(all_n[i]);
  if (all_n.size() > 1 && all_n.size() % 2 == 0) solve_n(all_n.back());
  if (solved.empty())
    throw NumericalFailureError("solve_optimal_connectivity: all candidates failed");

  auto best_it = [&]() {
    auto best = solved.begin();
    for (auto it = solved.begin(); it != solved.end(); ++it)
      if (it->second.row.cost < best->second.row.cost) best = it;
    return best;
  };
  for (int pass = 0; pass < static_cast<int>(all_n.size()); ++pass) {
    const int nb = best_it()->first;
    bool expanded = false;
    for (int cand : {nb - spw, nb + spw}) {
      if (cand >= n_min && cand <= n_max && !solved.count(cand)) {
        last_z = best_it()->second.lm.params;
        expanded = solve_n(cand) || expanded;
      }
    }
    if (!expanded) break;
  }

  const auto best = best_it();
  ConnectivitySolution sol;
  sol.n = best->first;
  sol.z = best->second.lm.params;
  sol.cost = best->second.row.cost;
  sol.controls = to_controls(squash.squash(sol.z));
  for (const auto& [n, e] : solved) sol.table.push_back(e.row);
  return sol;
}

}  // namespace optimfkd
