#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "optimfkd/fkd.hpp"
#include "optimfkd/ikd.hpp"
#include "optimfkd/nlls.hpp"
#include "optimfkd/pathmap.hpp"
#include "optimfkd/sim.hpp"

namespace optimfkd {

/// Fixed-capacity ring of timestamped state estimates. Single writer (the
/// estimator), any number of readers; stamps must strictly increase.
class StateBuffer {
 public:
  explicit StateBuffer(std::size_t capacity);
  void push(const TimedState& ts);
  std::vector<TimedState> snapshot() const;  // oldest to newest
  std::optional<TimedState> latest() const;
  std::size_t capacity() const { return capacity_; }

 private:
  mutable std::mutex mutex_;
  std::vector<TimedState> ring_;
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

struct ScheduledControl {
  Control u;
  double stamp = 0.0;  // earliest execution time
};

/// Queue of scheduled controls. The updater atomically replaces the whole
/// contents; the executor pops one due control per tick.
class ControlBuffer {
 public:
  void replace(std::vector<ScheduledControl> controls);
  std::optional<ScheduledControl> pop_due(double now);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::deque<ScheduledControl> queue_;
};

struct RuntimeConfig {
  double delta_t = 1.0;           // optimization horizon [s]
  double epsilon = 0.05;          // state-estimate latency [s]
  double v_desired = 1.5;         // [m/s]
  double optimizer_period = 0.5;  // [s]
  double executor_period = 0.05;  // [s], equals tau
  double estimator_period = 0.02; // [s]
  double gamma_sim = 0.1;         // simulated optimization duration (virtual clock)
  bool compensate = true;         // apply the discard rule (off = ablation)
  int state_buffer_capacity = 128;
  int starvation_hold_ticks = 5;

  void validate(double dt_sub) const;
};

/// Drops the first ceil((gamma_i + epsilon) / tau) controls of a fresh
/// solution, where gamma_i = now - xi_stamp, and atomically replaces the
/// control buffer with the remainder scheduled from `now` on. Throws
/// StaleSolutionError (buffer untouched) when gamma_i + epsilon covers the
/// whole plan. Returns the number of controls dropped.
int updater_apply(const std::vector<Control>& u_star, double xi_stamp,
                  double now, double epsilon, double tau, ControlBuffer& cbuf);

/// One executor tick: pops the control scheduled at or before `now`; on an
/// empty buffer holds the previous control for up to `hold_ticks` ticks,
/// then commands zero.
class Executor {
 public:
  explicit Executor(int hold_ticks) : hold_ticks_(hold_ticks) {}
  Control step(ControlBuffer& cbuf, double now);

 private:
  Control last_{};
  int starved_ = 0;
  int hold_ticks_;
};

// --- objectives and controllers --------------------------------------------

struct FollowObjective {
  PathMap path;
  double v_desired = 1.5;
};

struct ConnectObjective {
  RobotState goal;
  double alpha = 0.5;
  int n_min = 10;
  int n_max = 160;
  double pos_tol = 0.2;    // [m]
  double speed_tol = 0.2;  // [m/s]
};

/// Racing-line tracking with a per-vertex speed profile (the IKD arm of the
/// connectivity task). Ends when the goal ball is reached.
struct LineObjective {
  PathMap line;
  std::vector<double> speeds;  // one per vertex
  RobotState goal;
  double pos_tol = 0.2;
  double speed_tol = 0.2;
};

using Objective = std::variant<FollowObjective, ConnectObjective, LineObjective>;

struct FkdControllerConfig {
  // Warm-started cycles take a few damped steps each, real-time-iteration
  // style; long solves mine the model's out-of-distribution regions.
  LMConfig lm{.max_iters = 12};
  PathWeights path_weights;
  ConnectivityWeights conn_weights;
};

struct Plan {
  std::vector<Control> controls;
  TimedState xi_used;
  double cost = 0.0;
  int iters = 0;
};

/// Per-run planner: owns warm starts and the path-progress cursor. For
/// path following it localizes the latest estimate on the path, builds the
/// tau-spaced target window ahead at v_desired, and solves the pose-error
/// problem; for connectivity it runs the variable-n search.
class Planner {
 public:
  Planner(const FkdModel* fkd, const IkdModel* ikd, Objective objective,
          const FkdControllerConfig& fkd_cfg, const RuntimeConfig& runtime,
          double v_max, double psi_max);

  Plan plan_once(const StateBuffer& buf, double now);
  /// Progress cursor on the followed path (for traversal accounting).
  int cursor() const { return cursor_; }

 private:
  Plan plan_follow_fkd(const std::vector<RobotState>& history, const TimedState& xi);
  Plan plan_follow_ikd(const std::vector<RobotState>& history, const TimedState& xi);
  Plan plan_connect_fkd(const std::vector<RobotState>& history, const TimedState& xi,
                        double now);
  Plan plan_line_ikd(const std::vector<RobotState>& history, const TimedState& xi);
  int localize(const PathMap& path, const RobotState& state);

  const FkdModel* fkd_;
  const IkdModel* ikd_;
  Objective objective_;
  FkdControllerConfig cfg_;
  RuntimeConfig runtime_;
  SquashMap squash_;
  Eigen::VectorXd warm_z_;
  double warm_stamp_ = -1.0;
  int warm_n_ = 0;
  int cursor_ = -1;
};

// --- closed loop --------------------------------------------------------------

struct TraceRow {
  double t = 0.0;
  RobotState truth;
  Control exec;
  int plan_id = -1;
  double gamma = 0.0;
  int dropped = 0;
};

struct PlanLog {
  int id = 0;
  double t_start = 0.0;
  double t_apply = 0.0;
  double gamma = 0.0;
  int dropped = 0;
  int n_controls = 0;
  double cost = 0.0;
  int iters = 0;
  bool stale = false;
  std::string error;  // empty when the cycle succeeded
};

struct ExecutionTrace {
  std::vector<TraceRow> rows;
  std::vector<TimedState> observations;
  std::vector<PlanLog> plans;
  bool goal_reached = false;
  double time_to_goal = -1.0;
  double max_speed = 0.0;
  double progress = 0.0;  // arc length covered on the followed path

  void write_csv(const std::string& path) const;
  static std::vector<TraceRow> read_csv(const std::string& path);
};

struct ClosedLoopSetup {
  SimParams sim;
  RuntimeConfig runtime;
  const FkdModel* fkd = nullptr;  // exactly one of fkd/ikd drives the run
  const IkdModel* ikd = nullptr;
  FkdControllerConfig fkd_cfg;
  Objective objective;
  RobotState start;
  double duration = 30.0;
  std::uint64_t seed = 0;  // process-noise stream
};

/// Deterministic virtual-clock run of the four actors (estimator,
/// optimizer, updater, executor) against the simulator. Identical
/// (setup, seed) produce bitwise-identical traces.
ExecutionTrace run_closed_loop(const ClosedLoopSetup& setup);

/// Wall-clock variant: the four actors run as real threads and gamma_i is
/// genuinely measured. Non-deterministic; for demonstration and smoke
/// testing.
ExecutionTrace run_closed_loop_wallclock(const ClosedLoopSetup& setup);

}  // namespace optimfkd
