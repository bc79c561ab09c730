#pragma once

#include <optional>
#include <vector>

#include "optimfkd/types.hpp"

namespace optimfkd {

/// Ground-truth plant parameters. First-order tracking of the velocity and
/// yaw commands, a lateral-acceleration limit on achievable yaw rate, and
/// first-order lateral slip proportional to v_x * omega.
struct SimParams {
  double t_v = 0.3;      // velocity tracking time constant [s]
  double t_w = 0.2;      // yaw tracking time constant [s]
  double t_slip = 0.15;  // lateral slip time constant [s]
  double k_slip = 0.25;  // slip gain [-]
  double mu_g = 4.0;     // lateral acceleration limit [m/s^2]
  double a_max = 4.0;    // longitudinal acceleration limit [m/s^2]
  double v_max = 4.0;    // command bound for delta [m/s]
  double psi_max = 4.0;  // command bound for |psi| [rad/s]
  double dt_sub = 0.005; // RK4 substep [s]; must divide the step duration

  // Optional seeded process noise on the v_x and omega derivatives,
  // off by default.
  double noise_accel = 0.0;  // std of extra v_x-dot noise [m/s^2]
  double noise_yaw = 0.0;    // std of extra omega-dot noise [rad/s^2]
};

struct StateDerivative {
  double x_dot, y_dot, theta_dot, v_x_dot, v_y_dot, omega_dot;
};

/// Continuous-time plant dynamics at (state, control).
StateDerivative sim_derivative(const RobotState& state, const Control& u,
                               const SimParams& params);

/// Integrates the plant over tau with RK4 at dt_sub substeps and re-wraps
/// theta. Deterministic: identical inputs give bitwise-identical outputs.
/// `disturbance`, when non-null, is added to (v_x_dot, omega_dot) on every
/// substep; the closed-loop harness uses it for seeded process noise.
RobotState sim_step(const RobotState& state, const Control& u, double tau,
                    const SimParams& params,
                    const double* disturbance = nullptr);

/// Applies each control for tau; element i is the state after i+1 steps.
std::vector<RobotState> sim_rollout(const RobotState& state,
                                    const std::vector<Control>& controls,
                                    double tau, const SimParams& params);

/// Emulates a delayed state estimate: linear interpolation of `history` at
/// time now - epsilon, stamped now - epsilon. Interpolates past the last
/// sample by clamping to it. Throws HistoryGapError if the history starts
/// after the query time.
TimedState observe_delayed(const std::vector<TimedState>& history, double now,
                           double epsilon);

}  // namespace optimfkd
