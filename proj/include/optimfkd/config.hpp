#pragma once

#include <string>
#include <vector>

#include "optimfkd/nlls.hpp"
#include "optimfkd/runtime.hpp"
#include "optimfkd/sim.hpp"
#include "optimfkd/train.hpp"
#include "optimfkd/trajectory.hpp"

namespace optimfkd {

struct SolverConfig {
  LMConfig lm;
  PathWeights path_weights;
  ConnectivityWeights conn_weights;
  int runtime_max_iters = 12;  // per-cycle LM budget inside the control loop
  double alpha = 0.5;
  int n_min = 10;
  int n_max = 160;
};

struct EvalConfig {
  std::vector<std::string> paths = {"rounded_rectangle", "figure8"};
  std::vector<double> speeds = {1.0, 1.5, 2.0, 2.5, 3.0};
  int rollouts = 5;
  std::uint64_t seed = 97;
  double sample_step = 0.01;      // hausdorff resampling step [m]
  double noise_accel = 0.03;      // process noise during experiments
  double noise_yaw = 0.03;
  double goal_pos_tol = 0.2;      // [m]
  double goal_speed_tol = 0.2;    // [m/s]
  double goal_timeout = 15.0;     // [s]
  double line_v_cap = 2.0;        // demonstrator line speed cap [m/s]
  double line_accel = 2.0;        // demonstrator accel budget [m/s^2]
  double ikd_optimizer_period = 0.25;  // IKD replans per its own horizon
  double ikd_gamma_sim = 0.02;
};

/// Every tunable of the stack, JSON-overridable section by section:
/// {"sim": {...}, "data": {...}, "model": {...}, "train": {...},
///  "solver": {...}, "runtime": {...}, "eval": {...}}.
struct GlobalConfig {
  SimParams sim;
  DataConfig data;
  WindowSpec model;
  TrainConfig train;
  SolverConfig solver;
  RuntimeConfig runtime;
  EvalConfig eval;
};

/// Defaults overlaid with whatever keys the file provides. Unknown keys
/// raise ConfigError, as do malformed values.
GlobalConfig load_config(const std::string& path);
GlobalConfig default_config();
void write_config_json(const std::string& path, const GlobalConfig& cfg);

}  // namespace optimfkd
