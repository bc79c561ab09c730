#include "optimfkd/runtime.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "optimfkd/errors.hpp"

namespace optimfkd {

// --- buffers -----------------------------------------------------------------

StateBuffer::StateBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 2) throw std::invalid_argument("StateBuffer: capacity too small");
  ring_.resize(capacity_);
}

void StateBuffer::push(const TimedState& ts) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (size_ > 0) {
    const std::size_t newest = (head_ + capacity_ - 1) % capacity_;
    if (ts.stamp <= ring_[newest].stamp)
      throw std::invalid_argument("StateBuffer: stamps must strictly increase");
  }
  ring_[head_] = ts;
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<TimedState> StateBuffer::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<TimedState> out;
  out.reserve(size_);
  const std::size_t first = (head_ + capacity_ - size_) % capacity_;
  for (std::size_t i = 0; i < size_; ++i) out.push_back(ring_[(first + i) % capacity_]);
  return out;
}

std::optional<TimedState> StateBuffer::latest() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (size_ == 0) return std::nullopt;
  return ring_[(head_ + capacity_ - 1) % capacity_];
}

void ControlBuffer::replace(std::vector<ScheduledControl> controls) {
  std::deque<ScheduledControl> fresh(controls.begin(), controls.end());
  std::lock_guard<std::mutex> lock(mutex_);
  queue_.swap(fresh);
}

std::optional<ScheduledControl> ControlBuffer::pop_due(double now) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (queue_.empty() || queue_.front().stamp > now + 1e-9) return std::nullopt;
  ScheduledControl c = queue_.front();
  queue_.pop_front();
  return c;
}

std::size_t ControlBuffer::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return queue_.size();
}

void RuntimeConfig::validate(double dt_sub) const {
  auto check_mult = [&](double v, const char* name) {
    if (v <= 0.0 || std::abs(std::round(v / dt_sub) * dt_sub - v) > 1e-9)
      throw ConfigError(std::string("RuntimeConfig: ") + name +
                        " must be a positive multiple of dt_sub");
  };
  check_mult(executor_period, "executor_period");
  check_mult(estimator_period, "estimator_period");
  check_mult(optimizer_period, "optimizer_period");
  if (gamma_sim < 0.0 ||
      std::abs(std::round(gamma_sim / dt_sub) * dt_sub - gamma_sim) > 1e-9)
    throw ConfigError("RuntimeConfig: gamma_sim must be a non-negative multiple of dt_sub");
  if (gamma_sim >= optimizer_period)
    throw ConfigError("RuntimeConfig: gamma_sim must be below the optimizer period");
  if (epsilon < 0.0) throw ConfigError("RuntimeConfig: negative epsilon");
  if (delta_t <= 0.0) throw ConfigError("RuntimeConfig: delta_t must be positive");
  if (state_buffer_capacity < 8) throw ConfigError("RuntimeConfig: buffer too small");
}

// --- updater / executor -------------------------------------------------------

namespace {

std::vector<ScheduledControl> schedule_from(const std::vector<Control>& u,
                                            std::size_t skip, double now, double tau) {
  std::vector<ScheduledControl> out;
  out.reserve(u.size() - skip);
  for (std::size_t i = skip; i < u.size(); ++i)
    out.push_back({u[i], now + static_cast<double>(i - skip) * tau});
  return out;
}

}  // namespace

int updater_apply(const std::vector<Control>& u_star, double xi_stamp,
                  double now, double epsilon, double tau, ControlBuffer& cbuf) {
  const double gamma = now - xi_stamp;
  const double stale_for = gamma + epsilon;
  const double plan_span = static_cast<double>(u_star.size()) * tau;
  if (stale_for >= plan_span - 1e-9)
    throw StaleSolutionError("updater_apply: solution older than its own horizon");
  const int drop = std::max(0, static_cast<int>(std::ceil(stale_for / tau - 1e-9)));
  if (drop >= static_cast<int>(u_star.size()))
    throw StaleSolutionError("updater_apply: nothing left after discard");
  cbuf.replace(schedule_from(u_star, static_cast<std::size_t>(drop), now, tau));
  return drop;
}

Control Executor::step(ControlBuffer& cbuf, double now) {
  const std::optional<ScheduledControl> due = cbuf.pop_due(now);
  if (due.has_value()) {
    starved_ = 0;
    last_ = due->u;
    return last_;
  }
  starved_ += 1;
  if (starved_ > hold_ticks_) last_ = Control{0.0, 0.0};
  return last_;
}

// --- planner -----------------------------------------------------------------

namespace {

Eigen::VectorXd shift_pad(const Eigen::VectorXd& z, int shift_steps, int n_params) {
  if (z.size() == 0) return Eigen::VectorXd::Zero(n_params);
  const int drop = std::min<int>(2 * std::max(0, shift_steps), static_cast<int>(z.size()));
  const Eigen::VectorXd tail = z.tail(z.size() - drop);
  Eigen::VectorXd out(n_params);
  const int keep = std::min<int>(static_cast<int>(tail.size()), n_params);
  if (keep > 0) out.head(keep) = tail.head(keep);
  const double zl_d = z(z.size() - 2);
  const double zl_p = z(z.size() - 1);
  for (int i = keep; i < n_params; i += 2) {
    out(i) = zl_d;
    if (i + 1 < n_params) out(i + 1) = zl_p;
  }
  // keep warm starts off the squash plateaus, where the tanh gradient dies
  return out.cwiseMax(-4.0).cwiseMin(4.0);
}

int snap_down(int n, int m) { return (n / m) * m; }

}  // namespace

Planner::Planner(const FkdModel* fkd, const IkdModel* ikd, Objective objective,
                 const FkdControllerConfig& fkd_cfg, const RuntimeConfig& runtime,
                 double v_max, double psi_max)
    : fkd_(fkd),
      ikd_(ikd),
      objective_(std::move(objective)),
      cfg_(fkd_cfg),
      runtime_(runtime),
      squash_(SquashMap::control_bounds(v_max, psi_max)) {
  if ((fkd_ == nullptr) == (ikd_ == nullptr))
    throw ConfigError("Planner: exactly one of fkd/ikd must be set");
  const WindowSpec& spec = fkd_ != nullptr ? fkd_->spec : ikd_->spec;
  spec.validate();
  if (std::abs(runtime_.executor_period - spec.tau) > 1e-9)
    throw ConfigError("Planner: executor period must equal tau");
  if (fkd_ != nullptr && std::holds_alternative<FollowObjective>(objective_)) {
    const double ratio = runtime_.delta_t / spec.t_model;
    if (std::abs(std::round(ratio) - ratio) > 1e-9)
      throw ConfigError("Planner: delta_t must be a multiple of t_model");
  }
}

int Planner::localize(const PathMap& path, const RobotState& state) {
  cursor_ = cursor_ < 0 ? localize_on_path(path, state)
                        : localize_on_path_windowed(path, state, cursor_, 1.0, 3.0);
  return cursor_;
}

Plan Planner::plan_once(const StateBuffer& buf, double now) {
  const std::optional<TimedState> latest = buf.latest();
  if (!latest.has_value()) throw HistoryGapError("plan_once: empty state buffer");
  const WindowSpec& spec = fkd_ != nullptr ? fkd_->spec : ikd_->spec;
  const std::vector<RobotState> history =
      time_sync_states(buf.snapshot(), latest->stamp, spec);
  if (fkd_ != nullptr) {
    if (std::holds_alternative<FollowObjective>(objective_))
      return plan_follow_fkd(history, *latest);
    if (std::holds_alternative<ConnectObjective>(objective_))
      return plan_connect_fkd(history, *latest, now);
    throw ConfigError("plan_once: unsupported objective for the FKD controller");
  }
  if (std::holds_alternative<FollowObjective>(objective_))
    return plan_follow_ikd(history, *latest);
  if (std::holds_alternative<LineObjective>(objective_))
    return plan_line_ikd(history, *latest);
  throw ConfigError("plan_once: unsupported objective for the IKD controller");
}

Plan Planner::plan_follow_fkd(const std::vector<RobotState>& history,
                              const TimedState& xi) {
  const FollowObjective& obj = std::get<FollowObjective>(objective_);
  const WindowSpec& spec = fkd_->spec;
  const int n = static_cast<int>(std::llround(runtime_.delta_t / spec.tau));
  const int idx = localize(obj.path, history.back());
  std::vector<Pose> targets;
  targets.reserve(n);
  for (int k = 1; k <= n; ++k)
    targets.push_back(lookahead(obj.path, idx, obj.v_desired * spec.tau * k));

  Eigen::VectorXd z0;
  if (warm_n_ == n && warm_stamp_ >= 0.0) {
    const int shift = static_cast<int>(std::llround((xi.stamp - warm_stamp_) / spec.tau));
    z0 = shift_pad(warm_z_, shift, 2 * n);
  } else {
    const std::vector<Control> init(n, Control{obj.v_desired, 0.0});
    z0 = squash_.unsquash(from_controls(init));
  }
  PathFollowingProblem prob(*fkd_, history, targets, cfg_.path_weights, squash_);
  const LMResult lm = lm_solve(prob, z0, cfg_.lm);
  warm_z_ = lm.params.cwiseMax(-4.0).cwiseMin(4.0);
  warm_stamp_ = xi.stamp;
  warm_n_ = n;
  return {to_controls(squash_.squash(lm.params)), xi, lm.cost, lm.iterations};
}

Plan Planner::plan_follow_ikd(const std::vector<RobotState>& history,
                              const TimedState& xi) {
  const FollowObjective& obj = std::get<FollowObjective>(objective_);
  const WindowSpec& spec = ikd_->spec;
  const int w = spec.steps_per_window();
  const int idx = localize(obj.path, history.back());
  std::vector<RobotState> desired;
  desired.reserve(w);
  Pose prev = lookahead(obj.path, idx, 0.0);
  for (int k = 1; k <= w; ++k) {
    const Pose p = lookahead(obj.path, idx, obj.v_desired * spec.tau * k);
    RobotState d;
    d.x = p.x;
    d.y = p.y;
    d.theta = p.theta;
    d.v_x = obj.v_desired;
    d.v_y = 0.0;
    d.omega = wrap_angle(p.theta - prev.theta) / spec.tau;
    desired.push_back(d);
    prev = p;
  }
  return {ikd_track_step(*ikd_, history, desired), xi, 0.0, 0};
}

Plan Planner::plan_connect_fkd(const std::vector<RobotState>& history,
                               const TimedState& xi, double /*now*/) {
  const ConnectObjective& obj = std::get<ConnectObjective>(objective_);
  const WindowSpec& spec = fkd_->spec;
  const int spw = spec.steps_per_window();
  int n_lo = std::max(spw, snap_down(obj.n_min, spw));
  int n_hi = std::max(n_lo, snap_down(obj.n_max, spw));
  const Eigen::VectorXd* warm = nullptr;
  Eigen::VectorXd shifted;
  if (warm_n_ > 0 && warm_stamp_ >= 0.0) {
    const int shift = static_cast<int>(std::llround((xi.stamp - warm_stamp_) / spec.tau));
    const int n_exp = std::max(spw, snap_down(warm_n_ - shift + spw - 1, spw));
    n_lo = std::max(n_lo, std::max(spw, n_exp - spw));
    n_hi = std::min(n_hi, n_exp + spw);
    if (n_hi < n_lo) n_hi = n_lo;
    shifted = shift_pad(warm_z_, shift, 2 * n_exp);
    warm = &shifted;
  }
  const ConnectivitySolution sol =
      solve_optimal_connectivity(*fkd_, history, obj.goal, obj.alpha, n_lo, n_hi,
                                 cfg_.conn_weights, squash_, cfg_.lm, warm);
  warm_z_ = sol.z.cwiseMax(-4.0).cwiseMin(4.0);
  warm_n_ = sol.n;
  warm_stamp_ = xi.stamp;
  return {sol.controls, xi, sol.cost, 0};
}

Plan Planner::plan_line_ikd(const std::vector<RobotState>& history,
                            const TimedState& xi) {
  const LineObjective& obj = std::get<LineObjective>(objective_);
  const WindowSpec& spec = ikd_->spec;
  const int w = spec.steps_per_window();
  if (obj.speeds.size() != obj.line.points.size())
    throw ConfigError("plan_line_ikd: speed profile size mismatch");
  const int idx = localize(obj.line, history.back());
  const double total = obj.line.arc.back();
  auto speed_at = [&](double s) {
    s = std::clamp(s, 0.0, total);
    const auto it = std::upper_bound(obj.line.arc.begin(), obj.line.arc.end(), s);
    const std::size_t j = std::min(obj.line.points.size() - 1,
                                   static_cast<std::size_t>(it - obj.line.arc.begin()));
    if (j == 0) return obj.speeds[0];
    const double span = obj.line.arc[j] - obj.line.arc[j - 1];
    const double f = span > 0.0 ? (s - obj.line.arc[j - 1]) / span : 0.0;
    return obj.speeds[j - 1] + f * (obj.speeds[j] - obj.speeds[j - 1]);
  };

  std::vector<RobotState> desired;
  desired.reserve(w);
  double s = obj.line.arc[idx];
  Pose prev = lookahead(obj.line, idx, 0.0);
  for (int k = 0; k < w; ++k) {
    const double v = speed_at(s);
    s = std::min(total, s + v * spec.tau);
    const Pose p = lookahead(obj.line, idx, s - obj.line.arc[idx]);
    RobotState d;
    d.x = p.x;
    d.y = p.y;
    d.theta = p.theta;
    d.v_x = speed_at(s);
    d.v_y = 0.0;
    d.omega = wrap_angle(p.theta - prev.theta) / spec.tau;
    desired.push_back(d);
    prev = p;
  }
  return {ikd_track_step(*ikd_, history, desired), xi, 0.0, 0};
}

// --- trace io ----------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ExecutionTrace::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "t,x,y,theta,v_x,v_y,omega,delta_exec,psi_exec,plan_id,gamma,dropped\n";
  for (const TraceRow& r : rows) {
    f << fmt_double(r.t) << ',' << fmt_double(r.truth.x) << ','
      << fmt_double(r.truth.y) << ',' << fmt_double(r.truth.theta) << ','
      << fmt_double(r.truth.v_x) << ',' << fmt_double(r.truth.v_y) << ','
      << fmt_double(r.truth.omega) << ',' << fmt_double(r.exec.delta) << ','
      << fmt_double(r.exec.psi) << ',' << r.plan_id << ',' << fmt_double(r.gamma)
      << ',' << r.dropped << "\n";
  }
}

std::vector<TraceRow> ExecutionTrace::read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for read: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty trace file: " + path);
  std::vector<TraceRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) throw IoError("bad trace row in " + path);
    TraceRow r;
    r.t = std::stod(cells[0]);
    r.truth.x = std::stod(cells[1]);
    r.truth.y = std::stod(cells[2]);
    r.truth.theta = std::stod(cells[3]);
    r.truth.v_x = std::stod(cells[4]);
    r.truth.v_y = std::stod(cells[5]);
    r.truth.omega = std::stod(cells[6]);
    r.exec.delta = std::stod(cells[7]);
    r.exec.psi = std::stod(cells[8]);
    r.plan_id = std::stoi(cells[9]);
    r.gamma = std::stod(cells[10]);
    r.dropped = std::stoi(cells[11]);
    rows.push_back(r);
  }
  return rows;
}

// --- closed loop, virtual clock ------------------------------------------------

namespace {

using i64 = long long;

i64 to_us(double seconds) { return static_cast<i64>(std::llround(seconds * 1e6)); }
double to_s(i64 us) { return static_cast<double>(us) * 1e-6; }

struct GoalCheck {
  bool enabled = false;
  RobotState goal;
  double pos_tol = 0.2;
  double speed_tol = 0.2;
};

}  // namespace

ExecutionTrace run_closed_loop(const ClosedLoopSetup& setup) {
  const WindowSpec& spec = setup.fkd != nullptr ? setup.fkd->spec
                                                : setup.ikd->spec;
  setup.runtime.validate(setup.sim.dt_sub);
  SimParams plant_params = setup.sim;
  const double noise_accel = plant_params.noise_accel;
  const double noise_yaw = plant_params.noise_yaw;

  const i64 sub_us = to_us(setup.sim.dt_sub);
  const i64 est_us = to_us(setup.runtime.estimator_period);
  const i64 opt_us = to_us(setup.runtime.optimizer_period);
  const i64 exec_us = to_us(setup.runtime.executor_period);
  const i64 gamma_us = to_us(setup.runtime.gamma_sim);
  const i64 t_end = to_us(setup.duration);

  StateBuffer buf(static_cast<std::size_t>(setup.runtime.state_buffer_capacity));
  ControlBuffer cbuf;
  Executor executor(setup.runtime.starvation_hold_ticks);
  Planner planner(setup.fkd, setup.ikd, setup.objective, setup.fkd_cfg,
                  setup.runtime, setup.sim.v_max, setup.sim.psi_max);

  ExecutionTrace trace;
  std::vector<TimedState> plant_history;
  RobotState state = setup.start;
  Control current_u{};
  std::mt19937_64 rng(setup.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double disturbance[2] = {0.0, 0.0};
  const bool noisy = noise_accel > 0.0 || noise_yaw > 0.0;

  struct Pending {
    Plan plan;
    int id;
    double t_start;
    i64 t_finish;
  };
  std::optional<Pending> pending;
  int next_plan_id = 0;
  int cur_plan_id = -1;
  double cur_gamma = 0.0;
  int cur_dropped = 0;

  const FollowObjective* follow = std::get_if<FollowObjective>(&setup.objective);
  GoalCheck goal_check;
  if (const ConnectObjective* c = std::get_if<ConnectObjective>(&setup.objective)) {
    goal_check = {true, c->goal, c->pos_tol, c->speed_tol};
  } else if (const LineObjective* l = std::get_if<LineObjective>(&setup.objective)) {
    goal_check = {true, l->goal, l->pos_tol, l->speed_tol};
  }
  int prog_cursor = -1;
  const double path_len = follow != nullptr ? follow->path.length() : 0.0;

  bool done = false;
  for (i64 t = 0; !done; t += sub_us) {
    const double now = to_s(t);
    plant_history.push_back({state, now});

    if (t % est_us == 0) {
      try {
        const TimedState obs =
            observe_delayed(plant_history, now, setup.runtime.epsilon);
        buf.push({obs.state, now});  // stamped with production time
        trace.observations.push_back({obs.state, now});
      } catch (const HistoryGapError&) {
        // warmup: the plant history does not reach back epsilon yet
      }
    }

    auto apply_pending = [&]() {
      PlanLog log;
      log.id = pending->id;
      log.t_start = pending->t_start;
      log.t_apply = now;
      log.gamma = now - pending->plan.xi_used.stamp;
      log.n_controls = static_cast<int>(pending->plan.controls.size());
      log.cost = pending->plan.cost;
      log.iters = pending->plan.iters;
      try {
        if (setup.runtime.compensate) {
          log.dropped = updater_apply(pending->plan.controls,
                                      pending->plan.xi_used.stamp, now,
                                      setup.runtime.epsilon, spec.tau, cbuf);
        } else {
          cbuf.replace(schedule_from(pending->plan.controls, 0, now, spec.tau));
          log.dropped = 0;
        }
        cur_plan_id = log.id;
        cur_gamma = log.gamma;
        cur_dropped = log.dropped;
      } catch (const StaleSolutionError& e) {
        log.stale = true;
        log.error = e.what();
      }
      trace.plans.push_back(log);
      pending.reset();
    };
    if (pending.has_value() && t == pending->t_finish) apply_pending();

    if (t % opt_us == 0 && !pending.has_value()) {
      try {
        Plan plan = planner.plan_once(buf, now);
        pending = Pending{std::move(plan), next_plan_id++, now, t + gamma_us};
        if (pending->t_finish == t) apply_pending();
      } catch (const HistoryGapError& e) {
        PlanLog log;
        log.id = next_plan_id++;
        log.t_start = now;
        log.error = e.what();
        trace.plans.push_back(log);
      } catch (const NumericalFailureError& e) {
        PlanLog log;
        log.id = next_plan_id++;
        log.t_start = now;
        log.error = e.what();
        trace.plans.push_back(log);
      }
    }

    if (t % exec_us == 0) {
      current_u = executor.step(cbuf, now);
      trace.rows.push_back({now, state, current_u, cur_plan_id, cur_gamma, cur_dropped});
      trace.max_speed = std::max(trace.max_speed, std::hypot(state.v_x, state.v_y));
      if (noisy) {
        disturbance[0] = noise_accel * gauss(rng);
        disturbance[1] = noise_yaw * gauss(rng);
      }
      if (follow != nullptr) {
        const int idx = prog_cursor < 0
                            ? localize_on_path(follow->path, state)
                            : localize_on_path_windowed(follow->path, state,
                                                        prog_cursor, 1.0, 3.0);
        if (prog_cursor >= 0) {
          double ds = follow->path.arc[idx] - follow->path.arc[prog_cursor];
          if (follow->path.closed) ds = std::remainder(ds, path_len);
          trace.progress += ds;
        }
        prog_cursor = idx;
        if (trace.progress >= path_len - 0.05) done = true;
      }
      if (goal_check.enabled) {
        const double dist = std::hypot(state.x - goal_check.goal.x,
                                       state.y - goal_check.goal.y);
        const double speed = std::hypot(state.v_x, state.v_y);
        if (dist <= goal_check.pos_tol && speed <= goal_check.speed_tol) {
          trace.goal_reached = true;
          trace.time_to_goal = now;
          done = true;
        }
      }
    }

    if (t >= t_end) done = true;
    if (!done)
      state = sim_step(state, current_u, setup.sim.dt_sub, plant_params,
                       noisy ? disturbance : nullptr);
  }
  return trace;
}

// --- closed loop, wall clock ----------------------------------------------------

ExecutionTrace run_closed_loop_wallclock(const ClosedLoopSetup& setup) {
  const WindowSpec& spec = setup.fkd != nullptr ? setup.fkd->spec : setup.ikd->spec;
  setup.runtime.validate(setup.sim.dt_sub);

  StateBuffer buf(static_cast<std::size_t>(setup.runtime.state_buffer_capacity));
  ControlBuffer cbuf;
  Executor executor(setup.runtime.starvation_hold_ticks);
  Planner planner(setup.fkd, setup.ikd, setup.objective, setup.fkd_cfg,
                  setup.runtime, setup.sim.v_max, setup.sim.psi_max);

  ExecutionTrace trace;
  std::mutex plant_mutex;
  std::vector<TimedState> plant_history;
  RobotState state = setup.start;
  Control current_u{};
  std::mutex meta_mutex;
  int cur_plan_id = -1;
  double cur_gamma = 0.0;
  int cur_dropped = 0;
  int next_plan_id = 0;
  std::atomic<bool> stop{false};

  const auto t0 = std::chrono::steady_clock::now();
  auto sim_now = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  std::thread executor_thread([&]() {
    auto next = t0;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(setup.runtime.executor_period));
    while (!stop.load()) {
      const double now = sim_now();
      const Control u = executor.step(cbuf, now);
      {
        std::lock_guard<std::mutex> lock(plant_mutex);
        current_u = u;
        plant_history.push_back({state, now});
        std::lock_guard<std::mutex> mlock(meta_mutex);
        trace.rows.push_back({now, state, u, cur_plan_id, cur_gamma, cur_dropped});
        trace.max_speed = std::max(trace.max_speed, std::hypot(state.v_x, state.v_y));
      }
      {
        std::lock_guard<std::mutex> lock(plant_mutex);
        state = sim_step(state, current_u, setup.runtime.executor_period, setup.sim);
      }
      if (now >= setup.duration) stop.store(true);
      next += period;
      std::this_thread::sleep_until(next);
    }
  });

  std::thread estimator_thread([&]() {
    auto next = t0;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(setup.runtime.estimator_period));
    while (!stop.load()) {
      const double now = sim_now();
      std::vector<TimedState> history;
      {
        std::lock_guard<std::mutex> lock(plant_mutex);
        history = plant_history;
      }
      try {
        const TimedState obs = observe_delayed(history, now, setup.runtime.epsilon);
        buf.push({obs.state, now});
      } catch (const HistoryGapError&) {
      } catch (const std::invalid_argument&) {
        // an older stamp can race in right after a push; skip the sample
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  });

  std::thread optimizer_thread([&]() {
    auto next = t0;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(setup.runtime.optimizer_period));
    while (!stop.load()) {
      PlanLog log;
      log.t_start = sim_now();
      try {
        const Plan plan = planner.plan_once(buf, log.t_start);
        const double now = sim_now();  // gamma is genuinely measured here
        log.t_apply = now;
        log.gamma = now - plan.xi_used.stamp;
        log.n_controls = static_cast<int>(plan.controls.size());
        log.cost = plan.cost;
        log.iters = plan.iters;
        log.dropped = updater_apply(plan.controls, plan.xi_used.stamp, now,
                                    setup.runtime.epsilon, spec.tau, cbuf);
        std::lock_guard<std::mutex> mlock(meta_mutex);
        log.id = next_plan_id++;
        cur_plan_id = log.id;
        cur_gamma = log.gamma;
        cur_dropped = log.dropped;
        trace.plans.push_back(log);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> mlock(meta_mutex);
        log.id = next_plan_id++;
        log.error = e.what();
        trace.plans.push_back(log);
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  });

  executor_thread.join();
  estimator_thread.join();
  optimizer_thread.join();
  return trace;
}

}  // namespace optimfkd
