#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimfkd/net.hpp"
#include "optimfkd/train.hpp"
#include "optimfkd/trajectory.hpp"
#include "optimfkd/types.hpp"

namespace optimfkd {

/// Forward kinodynamic model. One network call maps the last
/// steps_per_window states (body frame of the first of them) and the next
/// steps_per_window controls to the next steps_per_window states in the
/// same frame.
///
/// Input layout (fixed contract, guarded by a golden-vector test):
///   [ s_0 .. s_{w-1} | u_0 .. u_{w-1} ]  with s = (x, y, theta, v_x, v_y,
///   omega) and u = (delta, psi); output [ o_1 .. o_w ] in input order.
/// Output state k is the state k+1 steps after the last input state, so a
/// call anchored at time t consumes states over (t - t_model, t] plus
/// controls over [t, t + t_model) and yields states over (t, t + t_model].
struct FkdModel {
  NetParams params;
  WindowSpec spec;

  int input_size() const { return spec.steps_per_window() * (kStateDim + kControlDim); }
  int output_size() const { return spec.steps_per_window() * kStateDim; }
};

/// Single-chunk predictor in body frame; lets tests swap the network for a
/// ground-truth oracle while reusing the rollout recurrence.
class WindowPredictor {
 public:
  virtual ~WindowPredictor() = default;
  virtual int steps() const = 0;
  virtual std::vector<RobotState> predict(
      const std::vector<RobotState>& past_body,
      const std::vector<Control>& controls) const = 0;
};

class NetWindowPredictor final : public WindowPredictor {
 public:
  explicit NetWindowPredictor(const FkdModel& model) : model_(&model) {}
  int steps() const override { return model_->spec.steps_per_window(); }
  std::vector<RobotState> predict(const std::vector<RobotState>& past_body,
                                  const std::vector<Control>& controls) const override;

 private:
  const FkdModel* model_;
};

std::vector<RobotState> fkd_predict_window(const FkdModel& model,
                                           const std::vector<RobotState>& past_body,
                                           const std::vector<Control>& controls);

struct RolloutResult {
  std::vector<RobotState> states;            // world frame, one per control
  std::vector<Eigen::VectorXd> raw_chunks;   // per-chunk body-frame outputs
  std::vector<Pose> anchors;                 // world pose each chunk rolls from
  int net_calls = 0;
};

/// Chains chunk predictions: chunk 0 conditions on `history` (the last
/// steps_per_window world-frame states), chunk j >= 1 on chunk j-1's
/// predictions, each re-framed onto its own first input state.
RolloutResult fkd_rollout(const WindowPredictor& predictor,
                          const std::vector<RobotState>& history,
                          const std::vector<Control>& controls);
RolloutResult fkd_rollout(const FkdModel& model,
                          const std::vector<RobotState>& history,
                          const std::vector<Control>& controls);

/// Rollout plus the exact Jacobian of every predicted world-frame state
/// with respect to every control, accumulated through the network and the
/// frame compositions. J is (n*6) x (n*2) for n controls.
RolloutResult fkd_rollout_jacobian(const FkdModel& model,
                                   const std::vector<RobotState>& history,
                                   const std::vector<Control>& controls,
                                   Eigen::MatrixXd& jacobian);

/// Recurrent training-loss evaluation over a batch of windows: each window
/// rolls all chunks on the model's own previous predictions and sums
/// weighted squared errors against ground truth (heading residuals
/// wrapped). Returns the summed loss; optionally parameter gradients
/// (summed over the batch) and per-window control gradients.
struct FkdBatchEval {
  double loss_sum = 0.0;
  GradBundle grads;
  std::vector<Eigen::VectorXd> control_grads;
};
FkdBatchEval fkd_batch_eval(const NetParams& params, const WindowSpec& spec,
                            const TrainingWindow* const* windows, int count,
                            const std::array<double, 6>& weights,
                            bool want_grads, bool want_control_grads = false);

FkdModel train_fkd(const std::vector<Trajectory>& train_trajs,
                   const std::vector<Trajectory>& val_trajs,
                   const WindowSpec& spec, const TrainConfig& cfg,
                   TrainReport* report = nullptr);

/// Open-loop check: rolls the model with ground-truth history and logged
/// controls over full t_pred horizons on held-out trajectories and returns
/// the position RMSE, skipping windows whose |v_x| exceeds speed_cap.
double fkd_open_loop_rmse(const FkdModel& model,
                          const std::vector<Trajectory>& trajs, int k,
                          double speed_cap);

void save_fkd(const std::string& path, const FkdModel& model,
              std::uint64_t seed, long train_iters);
FkdModel load_fkd(const std::string& path, long* train_iters = nullptr);

}  // namespace optimfkd
