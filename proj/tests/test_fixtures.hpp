#pragma once

// Shared test fixtures: a small dataset and quickly trained small models,
// built once per test binary.

#include <vector>

#include "optimfkd/fkd.hpp"
#include "optimfkd/ikd.hpp"
#include "optimfkd/sim.hpp"
#include "optimfkd/trajectory.hpp"

namespace optimfkd::testfix {

inline const SimParams& sim_params() {
  static const SimParams params;
  return params;
}

inline const std::vector<Trajectory>& train_trajs() {
  static const std::vector<Trajectory> trajs = [] {
    std::vector<Trajectory> out;
    const SimParams sim = sim_params();
    for (int i = 0; i < 8; ++i) {
      ExcitationConfig ex;
      ex.seed = 1000 + i;
      ex.duration = 40.0;
      out.push_back(
          record_trajectory(RobotState{}, generate_excitation_controls(ex), ex.tau, sim));
    }
    return out;
  }();
  return trajs;
}

inline const std::vector<Trajectory>& val_trajs() {
  static const std::vector<Trajectory> trajs = [] {
    std::vector<Trajectory> out;
    const SimParams sim = sim_params();
    for (int i = 0; i < 2; ++i) {
      ExcitationConfig ex;
      ex.seed = 2000 + i;
      ex.duration = 40.0;
      out.push_back(
          record_trajectory(RobotState{}, generate_excitation_controls(ex), ex.tau, sim));
    }
    return out;
  }();
  return trajs;
}

inline TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.steps = 2200;
  cfg.batch = 64;
  cfg.hidden_layers = 4;
  cfg.hidden_width = 128;
  cfg.k_windows = 48;
  cfg.lr_decay_every = 900;
  return cfg;
}

inline const FkdModel& small_fkd() {
  static const FkdModel model =
      train_fkd(train_trajs(), val_trajs(), WindowSpec{}, small_train_config());
  return model;
}

inline const IkdModel& small_ikd() {
  static const IkdModel model =
      train_ikd(train_trajs(), val_trajs(), WindowSpec{}, small_train_config(),
                sim_params().v_max, sim_params().psi_max);
  return model;
}

}  // namespace optimfkd::testfix
