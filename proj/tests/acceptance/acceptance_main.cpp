// Acceptance suite: each criterion runs standalone against a work
// directory prepared by `acceptance setup` (dataset + trained models) and
// prints one PASS/FAIL line. `acceptance all` runs every criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <Eigen/Dense>

#include "optimfkd/config.hpp"
#include "optimfkd/eval.hpp"
#include "optimfkd/fkd.hpp"
#include "optimfkd/ikd.hpp"
#include "optimfkd/metrics.hpp"
#include "optimfkd/nlls.hpp"
#include "optimfkd/paths_builtin.hpp"
#include "optimfkd/runtime.hpp"
#include "optimfkd/trajectory.hpp"

namespace fs = std::filesystem;
using namespace optimfkd;

namespace {

struct Check {
  std::string label;
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("FAILED: " + what);
    } else {
      notes.push_back("ok: " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

struct Fixture {
  GlobalConfig cfg;
  Dataset dataset;
  FkdModel fkd;
  IkdModel ikd;
  nlohmann::json fkd_metrics;
  std::string work;
};

Fixture load_fixture(const std::string& work) {
  Fixture fx;
  fx.work = work;
  fx.cfg = GlobalConfig{};
  fx.dataset = load_dataset((fs::path(work) / "dataset").string());
  fx.fkd = load_fkd((fs::path(work) / "fkd.json").string());
  fx.ikd = load_ikd((fs::path(work) / "ikd.json").string());
  std::ifstream mf((fs::path(work) / "fkd.json.metrics.json").string());
  if (mf) mf >> fx.fkd_metrics;
  return fx;
}

int run_setup(const std::string& work) {
  const GlobalConfig cfg;
  fs::create_directories(work);
  const std::string ds = (fs::path(work) / "dataset").string();
  std::printf("[setup] generating dataset under %s\n", ds.c_str());
  generate_dataset(ds, cfg.data, cfg.sim);
  const Dataset dataset = load_dataset(ds);

  std::printf("[setup] training fkd model (%ld steps)\n", cfg.train.steps);
  TrainReport fkd_report;
  const FkdModel fkd =
      train_fkd(dataset.train, dataset.val, cfg.model, cfg.train, &fkd_report);
  const double rmse = fkd_open_loop_rmse(fkd, dataset.val, cfg.train.k_windows, 3.0);
  save_fkd((fs::path(work) / "fkd.json").string(), fkd, cfg.train.seed,
           fkd_report.steps);
  {
    nlohmann::json j;
    j["train_loss"] = fkd_report.train_loss;
    j["val_loss"] = fkd_report.val_loss;
    j["steps"] = fkd_report.steps;
    j["open_loop_rmse"] = rmse;
    std::ofstream f((fs::path(work) / "fkd.json.metrics.json").string());
    f << j.dump(2) << "\n";
  }
  std::printf("[setup] fkd val loss %.6g -> %.6g, open-loop rmse %.4f m\n",
              fkd_report.val_loss.front(), fkd_report.val_loss.back(), rmse);

  std::printf("[setup] training ikd baseline (%ld steps)\n", cfg.train.steps);
  TrainReport ikd_report;
  const IkdModel ikd = train_ikd(dataset.train, dataset.val, cfg.model, cfg.train,
                                 cfg.sim.v_max, cfg.sim.psi_max, &ikd_report);
  save_ikd((fs::path(work) / "ikd.json").string(), ikd, cfg.train.seed,
           ikd_report.steps);
  std::printf("[setup] ikd val loss %.6g -> %.6g\n", ikd_report.val_loss.front(),
              ikd_report.val_loss.back());
  return 0;
}

std::vector<RobotState> history_from(const Trajectory& traj, int idx_end, int w) {
  std::vector<RobotState> h;
  for (int i = idx_end - w + 1; i <= idx_end; ++i) h.push_back(traj.samples[i].state);
  return h;
}

std::vector<Control> controls_from(const Trajectory& traj, int idx_start, int n) {
  std::vector<Control> u;
  for (int i = idx_start; i < idx_start + n; ++i) u.push_back(traj.samples[i].control);
  return u;
}

double state_component(const RobotState& s, int c) {
  switch (c) {
    case 0: return s.x;
    case 1: return s.y;
    case 2: return s.theta;
    case 3: return s.v_x;
    case 4: return s.v_y;
    default: return s.omega;
  }
}

// ---- criterion 1: gradient exactness ---------------------------------------

void criterion_1(const Fixture& fx, Check& check) {
  // net_backward on the trained network, random coordinates, rel 1e-6
  const NetParams& params = fx.fkd.params;
  const Trajectory& traj = fx.dataset.val.front();
  const WindowSpec& spec = fx.fkd.spec;
  const int w = spec.steps_per_window();
  const int a = traj.index_at(5.0);
  Eigen::VectorXd x(params.input_size());
  {
    const TrainingWindow win = extract_training_window(traj, 5.0, spec);
    for (int k = 0; k < w; ++k) {
      x(6 * k) = win.past_states[k].x;
      x(6 * k + 1) = win.past_states[k].y;
      x(6 * k + 2) = win.past_states[k].theta;
      x(6 * k + 3) = win.past_states[k].v_x;
      x(6 * k + 4) = win.past_states[k].v_y;
      x(6 * k + 5) = win.past_states[k].omega;
    }
    for (int k = 0; k < w; ++k) {
      x(6 * w + 2 * k) = win.controls[k].delta;
      x(6 * w + 2 * k + 1) = win.controls[k].psi;
    }
  }
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd g(params.output_size());
  for (int i = 0; i < g.size(); ++i) g(i) = gauss(rng);
  ForwardCache cache;
  net_forward(params, x, &cache);
  const GradBundle grads = net_backward(params, cache, g);
  auto loss_of = [&](const NetParams& p) { return g.dot(net_forward(p, x).col(0)); };
  const double h = 1e-5;
  double worst_net = 0.0;
  for (int l = 0; l < params.num_layers(); ++l) {
    for (int k = 0; k < 8; ++k) {
      const int r = std::uniform_int_distribution<int>(0, params.weights[l].rows() - 1)(rng);
      const int c = std::uniform_int_distribution<int>(0, params.weights[l].cols() - 1)(rng);
      NetParams pp = params;
      pp.weights[l](r, c) += h;
      NetParams pm = params;
      pm.weights[l](r, c) -= h;
      const double fd = (loss_of(pp) - loss_of(pm)) / (2.0 * h);
      const double an = grads.d_weights[l](r, c);
      worst_net = std::max(worst_net, std::abs(fd - an) /
                                          std::max({1.0, std::abs(fd), std::abs(an)}));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "net_backward rel error %.3g <= 1e-6", worst_net);
  check.require(worst_net <= 1e-6, buf);

  // rollout jacobian on the trained model, 1.0 s horizon, rel 1e-5
  const auto history = history_from(traj, a, w);
  const auto controls = controls_from(traj, a, 20);
  Eigen::MatrixXd jac;
  fkd_rollout_jacobian(fx.fkd, history, controls, jac);
  double worst_roll = 0.0;
  for (int ci = 0; ci < 40; ++ci) {
    auto up_c = controls;
    auto dn_c = controls;
    if (ci % 2 == 0) {
      up_c[ci / 2].delta += h;
      dn_c[ci / 2].delta -= h;
    } else {
      up_c[ci / 2].psi += h;
      dn_c[ci / 2].psi -= h;
    }
    const RolloutResult up = fkd_rollout(fx.fkd, history, up_c);
    const RolloutResult dn = fkd_rollout(fx.fkd, history, dn_c);
    for (int ri = 0; ri < jac.rows(); ++ri) {
      const double fd = (state_component(up.states[ri / 6], ri % 6) -
                         state_component(dn.states[ri / 6], ri % 6)) /
                        (2.0 * h);
      const double an = jac(ri, ci);
      worst_roll = std::max(worst_roll, std::abs(fd - an) /
                                            std::max({1.0, std::abs(fd), std::abs(an)}));
    }
  }
  std::snprintf(buf, sizeof(buf), "fkd_rollout_jacobian rel error %.3g <= 1e-5",
                worst_roll);
  check.require(worst_roll <= 1e-5, buf);
}

// ---- criterion 2: solver oracle ---------------------------------------------

class LinearProblem final : public ResidualProblem {
 public:
  LinearProblem(Eigen::MatrixXd a, Eigen::VectorXd b) : a_(std::move(a)), b_(std::move(b)) {}
  int num_residuals() const override { return static_cast<int>(a_.rows()); }
  int num_params() const override { return static_cast<int>(a_.cols()); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& p) const override { return a_ * p - b_; }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

class RosenbrockProblem final : public ResidualProblem {
 public:
  int num_residuals() const override { return 2; }
  int num_params() const override { return 2; }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& p) const override {
    Eigen::VectorXd r(2);
    r << 1.0 - p(0), 10.0 * (p(1) - p(0) * p(0));
    return r;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const override {
    Eigen::MatrixXd j(2, 2);
    j << -1.0, 0.0, -20.0 * p(0), 10.0;
    return j;
  }
};

void criterion_2(const Fixture&, Check& check) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(12, 6);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 6; ++c) m(r, c) = gauss(rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv(6);
  for (int i = 0; i < 6; ++i) sv(i) = 1.0 + 0.06 * i;
  const Eigen::MatrixXd a = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
  Eigen::VectorXd u_star(6);
  u_star << 0.31, -0.22, 0.14, 0.27, -0.18, 0.09;
  Eigen::VectorXd b = a * u_star;
  b(1) += 0.013;
  b(4) -= 0.007;
  const LinearProblem lin(a, b);
  const Eigen::VectorXd closed = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  const LMResult lin_res = lm_solve(lin, Eigen::VectorXd::Zero(6), LMConfig{});
  char buf[128];
  std::snprintf(buf, sizeof(buf), "linear LS error %.3g <= 1e-10 in %d iters",
                (lin_res.params - closed).norm(), lin_res.iterations);
  check.require((lin_res.params - closed).norm() <= 1e-10 && lin_res.iterations <= 3, buf);

  LMConfig rb_cfg;
  rb_cfg.max_iters = 200;
  rb_cfg.grad_tol = 1e-14;
  rb_cfg.step_tol = 1e-14;
  rb_cfg.cost_tol = 1e-22;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const LMResult rb = lm_solve(RosenbrockProblem{}, x0, rb_cfg);
  const double err = std::max(std::abs(rb.params(0) - 1.0), std::abs(rb.params(1) - 1.0));
  std::snprintf(buf, sizeof(buf), "rosenbrock error %.3g <= 1e-8", err);
  check.require(err <= 1e-8, buf);
}

// ---- criterion 3: hausdorff oracle -------------------------------------------

double brute_hausdorff(const Polyline& a, const Polyline& b, double step) {
  auto densify = [step](const Polyline& line) {
    Polyline out;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const double len = (line[i + 1] - line[i]).norm();
      const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
      for (int k = 0; k < n; ++k)
        out.push_back(line[i] + (static_cast<double>(k) / n) * (line[i + 1] - line[i]));
    }
    out.push_back(line.back());
    return out;
  };
  const Polyline da = densify(a);
  const Polyline db = densify(b);
  double h = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    const Polyline& from = dir == 0 ? da : db;
    const Polyline& to = dir == 0 ? db : da;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, (p - q).norm());
      h = std::max(h, best);
    }
  }
  return h;
}

void criterion_3(const Fixture&, Check& check) {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> ud(-2.0, 2.0);
  const double step = 0.01;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto make = [&](int n) {
      Polyline line;
      line.emplace_back(ud(rng), ud(rng));
      for (int i = 1; i < n; ++i)
        line.push_back(line.back() + Eigen::Vector2d(0.4 * ud(rng), 0.4 * ud(rng)));
      return line;
    };
    const Polyline a = make(8 + trial % 5);
    const Polyline b = make(6 + trial % 7);
    const double fast = hausdorff_distance(a, b, step);
    const double oracle = brute_hausdorff(a, b, step / 2.0);
    worst = std::max(worst, std::abs(fast - oracle));
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "20 random pairs, worst deviation %.4g <= %.4g",
                worst, 2.0 * step);
  check.require(worst <= 2.0 * step, buf);
}

// ---- criterion 4: learning objective -----------------------------------------

void criterion_4(const Fixture& fx, Check& check) {
  char buf[160];
  const auto& val = fx.fkd_metrics.at("val_loss");
  const double first = val.front().get<double>();
  const double last = val.back().get<double>();
  std::snprintf(buf, sizeof(buf),
                "validation loss reduced %.1fx (%.4g -> %.4g) >= 10x within %zu epochs",
                first / last, first, last, val.size());
  check.require(val.size() <= 200 && first / last >= 10.0, buf);

  const double rmse =
      fkd_open_loop_rmse(fx.fkd, fx.dataset.val, fx.cfg.train.k_windows, 3.0);
  std::snprintf(buf, sizeof(buf), "held-out 3 s open-loop position rmse %.4f m < 0.15 m",
                rmse);
  check.require(rmse < 0.15, buf);
}

// ---- criterion 5: experiment 1 trend -----------------------------------------

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double u : v) {
        if (u < v[i]) less += 1.0;
        if (u == v[i]) equal += 1.0;
      }
      r[i] = less + 0.5 * (equal - 1.0) + 1.0;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

void criterion_5(const Fixture& fx, Check& check) {
  GlobalConfig cfg = fx.cfg;
  const std::string out = (fs::path(fx.work) / "experiment1").string();
  const FollowReport report = eval_path_following(&fx.fkd, &fx.ikd, cfg, out);
  char buf[192];
  std::map<std::string, std::map<double, double>> fkd_mean, ikd_mean;
  for (const FollowCell& cell : report.cells) {
    if (cell.method == "optim_fkd")
      fkd_mean[cell.path][cell.speed] = cell.mean_hausdorff;
    else
      ikd_mean[cell.path][cell.speed] = cell.mean_hausdorff;
  }
  for (const std::string& path : cfg.eval.paths) {
    for (double speed : cfg.eval.speeds) {
      std::snprintf(buf, sizeof(buf), "%s @%.1f m/s: optim-fkd %.3f m < ikd %.3f m",
                    path.c_str(), speed, fkd_mean[path][speed], ikd_mean[path][speed]);
      check.require(fkd_mean[path][speed] < ikd_mean[path][speed], buf);
    }
    std::vector<double> fh, ih;
    for (double speed : cfg.eval.speeds) {
      fh.push_back(fkd_mean[path][speed]);
      ih.push_back(ikd_mean[path][speed]);
    }
    const double sf = spearman(cfg.eval.speeds, fh);
    const double si = spearman(cfg.eval.speeds, ih);
    std::snprintf(buf, sizeof(buf),
                  "%s speed monotonicity: spearman fkd %.2f, ikd %.2f >= 0.6",
                  path.c_str(), sf, si);
    check.require(sf >= 0.6 && si >= 0.6, buf);
  }
}

// ---- criterion 6: experiment 2 trend -----------------------------------------

void criterion_6(const Fixture& fx, Check& check) {
  const std::string out = (fs::path(fx.work) / "experiment2").string();
  const ConnectReport report =
      eval_connectivity(&fx.fkd, &fx.ikd, "demo_racing_line", fx.cfg, out);
  const ConnectArm* fkd_arm = nullptr;
  const ConnectArm* ikd_arm = nullptr;
  for (const ConnectArm& arm : report.arms) {
    if (arm.method == "optim_fkd") fkd_arm = &arm;
    if (arm.method == "ikd") ikd_arm = &arm;
  }
  check.require(fkd_arm != nullptr && fkd_arm->reached, "optim-fkd reaches the goal");
  check.require(ikd_arm != nullptr && ikd_arm->reached, "ikd reaches the goal");
  if (fkd_arm == nullptr || ikd_arm == nullptr || !fkd_arm->reached || !ikd_arm->reached)
    return;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "time-to-goal %.2f s <= 0.85 x %.2f s",
                fkd_arm->time_to_goal, ikd_arm->time_to_goal);
  check.require(fkd_arm->time_to_goal <= 0.85 * ikd_arm->time_to_goal, buf);
  std::snprintf(buf, sizeof(buf), "peak speed %.2f m/s > baseline %.2f m/s",
                fkd_arm->max_speed, ikd_arm->max_speed);
  check.require(fkd_arm->max_speed > ikd_arm->max_speed, buf);
}

// ---- criterion 7: latency compensation ablation --------------------------------

void criterion_7(const Fixture& fx, Check& check) {
  for (const std::string& path_name : {std::string("rounded_rectangle"),
                                       std::string("figure8")}) {
    const PathMap path = builtin_path(path_name);
    double h[2] = {0.0, 0.0};
    for (int mode = 0; mode < 2; ++mode) {
      ClosedLoopSetup setup;
      setup.sim = fx.cfg.sim;
      setup.sim.noise_accel = fx.cfg.eval.noise_accel;
      setup.sim.noise_yaw = fx.cfg.eval.noise_yaw;
      setup.runtime = fx.cfg.runtime;
      setup.runtime.epsilon = 0.2;
      setup.runtime.v_desired = 2.0;
      setup.runtime.compensate = mode == 0;
      setup.fkd = &fx.fkd;
      setup.fkd_cfg = {fx.cfg.solver.lm, fx.cfg.solver.path_weights,
                       fx.cfg.solver.conn_weights};
      setup.fkd_cfg.lm.max_iters = fx.cfg.solver.runtime_max_iters;
      setup.objective = FollowObjective{path, 2.0};
      RobotState start;
      start.x = path.points[0].x;
      start.y = path.points[0].y;
      start.theta = path.points[0].theta;
      setup.start = start;
      setup.duration = path.length() / 2.0 * 1.6 + 8.0;
      setup.seed = 20707;  // same seed for both modes
      const ExecutionTrace trace = run_closed_loop(setup);
      h[mode] = hausdorff_distance(trace_polyline(trace.rows), path_polyline(path),
                                   fx.cfg.eval.sample_step);
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%s @2.0 m/s eps=0.2: hausdorff %.3f m (compensated) < %.3f m (off)",
                  path_name.c_str(), h[0], h[1]);
    check.require(h[0] < h[1], buf);
  }
}

// ---- criterion 8: real-time budget --------------------------------------------

void criterion_8(const Fixture& fx, Check& check) {
  const PathMap path = builtin_path("rounded_rectangle");
  RuntimeConfig rt = fx.cfg.runtime;
  rt.v_desired = 2.0;
  FkdControllerConfig fcfg{fx.cfg.solver.lm, fx.cfg.solver.path_weights,
                           fx.cfg.solver.conn_weights};
  fcfg.lm.max_iters = fx.cfg.solver.runtime_max_iters;
  Planner planner(&fx.fkd, nullptr, FollowObjective{path, 2.0}, fcfg, rt,
                  fx.cfg.sim.v_max, fx.cfg.sim.psi_max);
  // steady motion along the first straight of the path
  StateBuffer buf(128);
  for (int i = 0; i <= 60; ++i) {
    RobotState s;
    s.x = path.points[0].x + 2.0 * 0.02 * i;
    s.y = path.points[0].y;
    s.theta = 0.0;
    s.v_x = 2.0;
    buf.push({s, 0.02 * i});
  }
  double worst = 0.0, total = 0.0;
  const int cycles = 20;
  for (int i = 0; i < cycles; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    planner.plan_once(buf, 1.2);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    worst = std::max(worst, dt);
    total += dt;
  }
  char buf2[160];
  std::snprintf(buf2, sizeof(buf2),
                "plan_once: mean %.1f ms, worst %.1f ms < 500 ms (0.5 x delta_t)",
                1e3 * total / cycles, 1e3 * worst);
  check.require(worst < 0.5 * rt.delta_t, buf2);
}

// ---- criterion 9: determinism ---------------------------------------------------

void criterion_9(const Fixture& fx, Check& check) {
  ClosedLoopSetup setup;
  setup.sim = fx.cfg.sim;
  setup.sim.noise_accel = 0.03;
  setup.sim.noise_yaw = 0.03;
  setup.runtime = fx.cfg.runtime;
  setup.runtime.v_desired = 1.5;
  setup.fkd = &fx.fkd;
  setup.fkd_cfg = {fx.cfg.solver.lm, fx.cfg.solver.path_weights,
                   fx.cfg.solver.conn_weights};
  setup.fkd_cfg.lm.max_iters = fx.cfg.solver.runtime_max_iters;
  const PathMap path = builtin_path("rounded_rectangle");
  setup.objective = FollowObjective{path, 1.5};
  RobotState start;
  start.x = path.points[0].x;
  start.y = path.points[0].y;
  setup.start = start;
  setup.duration = 6.0;
  setup.seed = 99;
  const std::string fa = (fs::path(fx.work) / "det_a.csv").string();
  const std::string fb = (fs::path(fx.work) / "det_b.csv").string();
  run_closed_loop(setup).write_csv(fa);
  run_closed_loop(setup).write_csv(fb);
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(fa);
  check.require(!a.empty() && a == slurp(fb),
                "two closed-loop traces with identical (seed, config) are byte-identical");
}

// ---- criterion 10: alpha monotonicity -------------------------------------------

void criterion_10(const Fixture& fx, Check& check) {
  const RobotState start = connectivity_start();
  const RobotState goal = connectivity_goal();
  std::vector<RobotState> history(fx.fkd.spec.steps_per_window(), start);
  const SquashMap squash =
      SquashMap::control_bounds(fx.cfg.sim.v_max, fx.cfg.sim.psi_max);
  int prev_n = std::numeric_limits<int>::max();
  for (double alpha : {0.1, 0.3, 1.0}) {
    const ConnectivitySolution sol = solve_optimal_connectivity(
        fx.fkd, history, goal, alpha, fx.cfg.solver.n_min, fx.cfg.solver.n_max,
        fx.cfg.solver.conn_weights, squash, fx.cfg.solver.lm);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "alpha %.1f: n* = %d (<= previous %s)", alpha,
                  sol.n, prev_n == std::numeric_limits<int>::max()
                            ? "-"
                            : std::to_string(prev_n).c_str());
    check.require(sol.n <= prev_n, buf);
    prev_n = sol.n;
  }
}

// ---- driver ---------------------------------------------------------------------

const std::vector<std::pair<std::string, std::function<void(const Fixture&, Check&)>>>
    kCriteria = {
        {"gradient exactness vs central finite differences", criterion_1},
        {"levenberg-marquardt solver oracle", criterion_2},
        {"hausdorff brute-force oracle", criterion_3},
        {"recurrent learning objective quality", criterion_4},
        {"path following: optim-fkd beats ikd at every speed", criterion_5},
        {"optimal connectivity: faster and quicker than the baseline", criterion_6},
        {"latency compensation ablation", criterion_7},
        {"real-time planning budget", criterion_8},
        {"closed-loop determinism", criterion_9},
        {"time-cost weight drives the step count down", criterion_10},
};

int run_criterion(const Fixture& fx, int idx, bool verbose) {
  Check check;
  const auto t0 = std::chrono::steady_clock::now();
  bool threw = false;
  std::string what;
  try {
    kCriteria[idx - 1].second(fx, check);
  } catch (const std::exception& e) {
    threw = true;
    what = e.what();
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = check.ok && !threw;
  std::printf("[%s] criterion %d: %s (%.1f s)\n", pass ? "PASS" : "FAIL", idx,
              kCriteria[idx - 1].first.c_str(), dt);
  if (threw) std::printf("    exception: %s\n", what.c_str());
  if (verbose || !pass)
    for (const std::string& note : check.notes) std::printf("    %s\n", note.c_str());
  std::fflush(stdout);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "all";
  std::string work = "acceptance_work";
  bool verbose = false;
  for (int i = 2; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) work = argv[++i];
    if (arg == "--verbose") verbose = true;
  }
  try {
    if (mode == "setup") return run_setup(work);
    const Fixture fx = load_fixture(work);
    if (mode == "all") {
      int failures = 0;
      for (std::size_t i = 1; i <= kCriteria.size(); ++i)
        failures += run_criterion(fx, static_cast<int>(i), verbose);
      return failures == 0 ? 0 : 1;
    }
    const int idx = std::stoi(mode);
    if (idx < 1 || idx > static_cast<int>(kCriteria.size())) {
      std::fprintf(stderr, "usage: acceptance [setup|all|1..%zu] [--work DIR]\n",
                   kCriteria.size());
      return 2;
    }
    return run_criterion(fx, idx, verbose);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 1;
  }
}
