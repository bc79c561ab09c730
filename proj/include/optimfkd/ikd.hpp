#pragma once

#include <string>
#include <vector>

#include "optimfkd/net.hpp"
#include "optimfkd/train.hpp"
#include "optimfkd/trajectory.hpp"
#include "optimfkd/types.hpp"

namespace optimfkd {

/// Inverse kinodynamic baseline: maps (past window, desired next window),
/// both in the body frame of the first past state, to the controls that
/// should realize the desired window. Input 2 * steps_per_window states,
/// output steps_per_window controls; inference clamps to the control
/// bounds stored with the model.
struct IkdModel {
  NetParams params;
  WindowSpec spec;
  double v_max = 4.0;
  double psi_max = 4.0;

  int input_size() const { return 2 * spec.steps_per_window() * kStateDim; }
  int output_size() const { return spec.steps_per_window() * kControlDim; }
};

/// Supervised regression on the same windows the FKD trainer consumes:
/// every chunk contributes one (past block, next block) -> logged-controls
/// sample. Architecture and iteration budget come from the same TrainConfig.
IkdModel train_ikd(const std::vector<Trajectory>& train_trajs,
                   const std::vector<Trajectory>& val_trajs,
                   const WindowSpec& spec, const TrainConfig& cfg,
                   double v_max, double psi_max, TrainReport* report = nullptr);

/// One tracking step: re-frames history and the desired window onto the
/// first history state, runs the network, clamps to bounds.
std::vector<Control> ikd_track_step(const IkdModel& model,
                                    const std::vector<RobotState>& history,
                                    const std::vector<RobotState>& desired);

void save_ikd(const std::string& path, const IkdModel& model,
              std::uint64_t seed, long train_iters);
IkdModel load_ikd(const std::string& path, long* train_iters = nullptr);

}  // namespace optimfkd
