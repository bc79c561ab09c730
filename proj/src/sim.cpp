#include "optimfkd/sim.hpp"

#include <algorithm>
#include <cmath>

#include "optimfkd/errors.hpp"

namespace optimfkd {

StateDerivative sim_derivative(const RobotState& state, const Control& u,
                               const SimParams& params) {
  const double v_x_dot =
      std::clamp((u.delta - state.v_x) / params.t_v, -params.a_max, params.a_max);
  const double omega_bound = params.mu_g / std::max(state.v_x, 0.1);
  const double omega_target = std::clamp(u.psi, -omega_bound, omega_bound);
  const double omega_dot = (omega_target - state.omega) / params.t_w;
  const double v_y_dot =
      (-params.k_slip * state.v_x * state.omega - state.v_y) / params.t_slip;
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  return {state.v_x * c - state.v_y * s,
          state.v_x * s + state.v_y * c,
          state.omega, v_x_dot, v_y_dot, omega_dot};
}

namespace {

RobotState apply(const RobotState& s, const StateDerivative& d, double h) {
  return {s.x + h * d.x_dot,         s.y + h * d.y_dot,
          s.theta + h * d.theta_dot, s.v_x + h * d.v_x_dot,
          s.v_y + h * d.v_y_dot,     s.omega + h * d.omega_dot};
}

RobotState rk4_substep(const RobotState& s, const Control& u, double h,
                       const SimParams& params, const double* disturbance) {
  auto deriv = [&](const RobotState& q) {
    StateDerivative d = sim_derivative(q, u, params);
    if (disturbance != nullptr) {
      d.v_x_dot += disturbance[0];
      d.omega_dot += disturbance[1];
    }
    return d;
  };
  const StateDerivative k1 = deriv(s);
  const StateDerivative k2 = deriv(apply(s, k1, 0.5 * h));
  const StateDerivative k3 = deriv(apply(s, k2, 0.5 * h));
  const StateDerivative k4 = deriv(apply(s, k3, h));
  const double w = h / 6.0;
  return {s.x + w * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot),
          s.y + w * (k1.y_dot + 2.0 * k2.y_dot + 2.0 * k3.y_dot + k4.y_dot),
          s.theta + w * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot +
                         k4.theta_dot),
          s.v_x + w * (k1.v_x_dot + 2.0 * k2.v_x_dot + 2.0 * k3.v_x_dot + k4.v_x_dot),
          s.v_y + w * (k1.v_y_dot + 2.0 * k2.v_y_dot + 2.0 * k3.v_y_dot + k4.v_y_dot),
          s.omega +
              w * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot +
                   k4.omega_dot)};
}

}  // namespace

RobotState sim_step(const RobotState& state, const Control& u, double tau,
                    const SimParams& params, const double* disturbance) {
  if (!state.finite()) throw std::invalid_argument("sim_step: non-finite state");
  if (!(tau > 0.0)) throw std::invalid_argument("sim_step: tau must be positive");
  const int n_sub = static_cast<int>(std::llround(tau / params.dt_sub));
  if (n_sub < 1 || std::abs(n_sub * params.dt_sub - tau) > 1e-9)
    throw std::invalid_argument("sim_step: dt_sub must divide tau");
  RobotState s = state;
  for (int i = 0; i < n_sub; ++i)
    s = rk4_substep(s, u, params.dt_sub, params, disturbance);
  s.theta = wrap_angle(s.theta);
  return s;
}

std::vector<RobotState> sim_rollout(const RobotState& state,
                                    const std::vector<Control>& controls,
                                    double tau, const SimParams& params) {
  std::vector<RobotState> out;
  out.reserve(controls.size());
  RobotState s = state;
  for (const Control& u : controls) {
    s = sim_step(s, u, tau, params);
    out.push_back(s);
  }
  return out;
}

TimedState observe_delayed(const std::vector<TimedState>& history, double now,
                           double epsilon) {
  const double t = now - epsilon;
  if (history.empty() || history.front().stamp > t + 1e-12)
    throw HistoryGapError("observe_delayed: history does not cover requested time");
  if (t >= history.back().stamp) return {history.back().state, t};
  // First sample with stamp >= t; the bracketing pair is [it-1, it].
  auto it = std::lower_bound(
      history.begin(), history.end(), t,
      [](const TimedState& a, double v) { return a.stamp < v; });
  if (it == history.begin()) return {it->state, t};
  const TimedState& b = *it;
  const TimedState& a = *(it - 1);
  const double span = b.stamp - a.stamp;
  const double f = span > 0.0 ? (t - a.stamp) / span : 0.0;
  const RobotState& sa = a.state;
  const RobotState& sb = b.state;
  RobotState s;
  s.x = sa.x + f * (sb.x - sa.x);
  s.y = sa.y + f * (sb.y - sa.y);
  s.theta = wrap_angle(sa.theta + f * wrap_angle(sb.theta - sa.theta));
  s.v_x = sa.v_x + f * (sb.v_x - sa.v_x);
  s.v_y = sa.v_y + f * (sb.v_y - sa.v_y);
  s.omega = sa.omega + f * (sb.omega - sa.omega);
  return {s, t};
}

}  // namespace optimfkd
