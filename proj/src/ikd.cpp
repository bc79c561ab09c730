#include "optimfkd/ikd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "optimfkd/errors.hpp"
#include "net_json.hpp"

namespace optimfkd {

using nlohmann::json;

namespace {

struct IkdSample {
  Eigen::VectorXd input;   // 2 * w * 6
  Eigen::VectorXd target;  // w * 2
};

void pack_states_rel(const Pose& frame, const std::vector<RobotState>& states,
                     double* dst) {
  for (std::size_t k = 0; k < states.size(); ++k) {
    const RobotState r = relative_state(frame, states[k]);
    dst[6 * k] = r.x;
    dst[6 * k + 1] = r.y;
    dst[6 * k + 2] = r.theta;
    dst[6 * k + 3] = r.v_x;
    dst[6 * k + 4] = r.v_y;
    dst[6 * k + 5] = r.omega;
  }
}

// Every chunk of a training window becomes one sample: the block before it
// (in window coordinates) is the past, the chunk itself is the desired
// window, the logged controls are the regression target.
std::vector<IkdSample> ikd_samples(const std::vector<TrainingWindow>& windows,
                                   const WindowSpec& spec) {
  const int w = spec.steps_per_window();
  const int n_chunks = spec.chunks();
  std::vector<IkdSample> out;
  out.reserve(windows.size() * static_cast<std::size_t>(n_chunks));
  std::vector<RobotState> past_w(w), desired_w(w);
  for (const TrainingWindow& win : windows) {
    // Reconstruct the blocks in the window frame once.
    std::vector<std::vector<RobotState>> chunk_w(n_chunks);
    for (int j = 0; j < n_chunks; ++j) {
      chunk_w[j].reserve(w);
      for (int k = 0; k < w; ++k)
        chunk_w[j].push_back(compose_state(win.chunks[j].anchor, win.chunks[j].targets[k]));
    }
    for (int j = 0; j < n_chunks; ++j) {
      const std::vector<RobotState>& past = (j == 0) ? win.past_states : chunk_w[j - 1];
      const std::vector<RobotState>& desired = chunk_w[j];
      IkdSample s;
      s.input.resize(2 * w * kStateDim);
      const Pose frame = past.front().pose();
      pack_states_rel(frame, past, s.input.data());
      pack_states_rel(frame, desired, s.input.data() + 6 * w);
      s.target.resize(w * kControlDim);
      for (int k = 0; k < w; ++k) {
        const Control& u = win.controls[static_cast<std::size_t>(j) * w + k];
        s.target(2 * k) = u.delta;
        s.target(2 * k + 1) = u.psi;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

double eval_mse(const NetParams& params, const std::vector<IkdSample>& set) {
  if (set.empty()) return 0.0;
  double total = 0.0;
  const int in_dim = static_cast<int>(set.front().input.size());
  const int out_dim = static_cast<int>(set.front().target.size());
  const std::size_t chunk = 512;
  for (std::size_t i = 0; i < set.size(); i += chunk) {
    const std::size_t m = std::min(chunk, set.size() - i);
    Eigen::MatrixXd x(in_dim, m), t(out_dim, m);
    for (std::size_t b = 0; b < m; ++b) {
      x.col(b) = set[i + b].input;
      t.col(b) = set[i + b].target;
    }
    total += (net_forward(params, x) - t).squaredNorm();
  }
  // mean squared error per control component
  return total / (static_cast<double>(set.size()) * out_dim);
}

}  // namespace

IkdModel train_ikd(const std::vector<Trajectory>& train_trajs,
                   const std::vector<Trajectory>& val_trajs,
                   const WindowSpec& spec, const TrainConfig& cfg,
                   double v_max, double psi_max, TrainReport* report) {
  spec.validate();
  if (train_trajs.empty()) throw std::invalid_argument("train_ikd: empty dataset");
  const std::vector<IkdSample> train_s =
      ikd_samples(windows_from_trajectories(train_trajs, cfg.k_windows, spec), spec);
  const std::vector<IkdSample> val_s =
      ikd_samples(windows_from_trajectories(val_trajs, cfg.k_windows, spec), spec);

  const int w = spec.steps_per_window();
  std::vector<int> sizes;
  sizes.push_back(2 * w * kStateDim);
  for (int i = 0; i < cfg.hidden_layers; ++i) sizes.push_back(cfg.hidden_width);
  sizes.push_back(w * kControlDim);

  IkdModel model;
  model.params = net_init(cfg.seed + 1, sizes);
  model.spec = spec;
  model.v_max = v_max;
  model.psi_max = psi_max;
  AdamState adam = AdamState::zeros_like(model.params, cfg.lr);
  std::mt19937_64 rng(cfg.seed ^ 0x1cd0f00dULL);

  const int in_dim = 2 * w * kStateDim;
  const int out_dim = w * kControlDim;
  std::vector<std::size_t> order(train_s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  double epoch_loss = 0.0;
  long epoch_batches = 0;

  Eigen::MatrixXd x(in_dim, cfg.batch), t(out_dim, cfg.batch);
  for (long step = 1; step <= cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
        if (epoch_batches > 0 && report != nullptr) {
          report->train_loss.push_back(epoch_loss / static_cast<double>(epoch_batches));
          report->val_loss.push_back(eval_mse(model.params, val_s));
        }
        epoch_loss = 0.0;
        epoch_batches = 0;
      }
      x.col(b) = train_s[order[cursor]].input;
      t.col(b) = train_s[order[cursor]].target;
      ++cursor;
    }
    ForwardCache cache;
    const Eigen::MatrixXd y = net_forward(model.params, x, &cache);
    const Eigen::MatrixXd diff = y - t;
    GradBundle grads = net_backward(model.params, cache, 2.0 * diff);
    grads.scale_params(1.0 / static_cast<double>(cfg.batch));
    adam_step(model.params, grads, adam);
    epoch_loss += diff.squaredNorm() / static_cast<double>(cfg.batch * out_dim);
    epoch_batches += 1;
    if (cfg.lr_decay_every > 0 && step % cfg.lr_decay_every == 0)
      adam.lr *= cfg.lr_decay;
  }
  if (report != nullptr) {
    if (epoch_batches > 0) {
      report->train_loss.push_back(epoch_loss / static_cast<double>(epoch_batches));
      report->val_loss.push_back(eval_mse(model.params, val_s));
    }
    report->steps = cfg.steps;
  }
  return model;
}

std::vector<Control> ikd_track_step(const IkdModel& model,
                                    const std::vector<RobotState>& history,
                                    const std::vector<RobotState>& desired) {
  const int w = model.spec.steps_per_window();
  if (static_cast<int>(history.size()) != w || static_cast<int>(desired.size()) != w)
    throw std::invalid_argument("ikd_track_step: window shape mismatch");
  Eigen::VectorXd x(2 * w * kStateDim);
  const Pose frame = history.front().pose();
  pack_states_rel(frame, history, x.data());
  pack_states_rel(frame, desired, x.data() + 6 * w);
  const Eigen::VectorXd y = net_forward(model.params, x);
  std::vector<Control> out;
  out.reserve(w);
  for (int k = 0; k < w; ++k) {
    Control u;
    u.delta = std::clamp(y(2 * k), 0.0, model.v_max);
    u.psi = std::clamp(y(2 * k + 1), -model.psi_max, model.psi_max);
    out.push_back(u);
  }
  return out;
}

void save_ikd(const std::string& path, const IkdModel& model,
              std::uint64_t seed, long train_iters) {
  json j = net_to_json(model.params, seed);
  j["kind"] = "ikd";
  j["spec"] = {{"tau", model.spec.tau},
               {"t_model", model.spec.t_model},
               {"t_pred", model.spec.t_pred}};
  j["bounds"] = {{"v_max", model.v_max}, {"psi_max", model.psi_max}};
  j["train_iters"] = train_iters;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

IkdModel load_ikd(const std::string& path, long* train_iters) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for read: " + path);
  json j;
  f >> j;
  if (j.value("kind", "") != "ikd") throw IoError("not an ikd model file: " + path);
  IkdModel model;
  model.params = net_from_json(j);
  model.spec.tau = j.at("spec").at("tau").get<double>();
  model.spec.t_model = j.at("spec").at("t_model").get<double>();
  model.spec.t_pred = j.at("spec").at("t_pred").get<double>();
  model.spec.validate();
  model.v_max = j.at("bounds").at("v_max").get<double>();
  model.psi_max = j.at("bounds").at("psi_max").get<double>();
  if (train_iters != nullptr) *train_iters = j.value("train_iters", 0L);
  return model;
}

}  // namespace optimfkd
