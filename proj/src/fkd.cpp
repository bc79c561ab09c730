#include "optimfkd/fkd.hpp"

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

void pack_state(const RobotState& s, double* dst) {
  dst[0] = s.x;
  dst[1] = s.y;
  dst[2] = s.theta;
  dst[3] = s.v_x;
  dst[4] = s.v_y;
  dst[5] = s.omega;
}

RobotState unpack_state(const double* src) {
  return {src[0], src[1], src[2], src[3], src[4], src[5]};
}

Eigen::VectorXd pack_input(const std::vector<RobotState>& past_body,
                           const std::vector<Control>& controls) {
  const int w = static_cast<int>(past_body.size());
  Eigen::VectorXd x(w * (kStateDim + kControlDim));
  for (int k = 0; k < w; ++k) pack_state(past_body[k], x.data() + 6 * k);
  double* u = x.data() + 6 * w;
  for (int k = 0; k < w; ++k) {
    u[2 * k] = controls[k].delta;
    u[2 * k + 1] = controls[k].psi;
  }
  return x;
}

std::vector<RobotState> unpack_states(const Eigen::VectorXd& v, int count) {
  std::vector<RobotState> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(unpack_state(v.data() + 6 * k));
  return out;
}

}  // namespace

std::vector<RobotState> NetWindowPredictor::predict(
    const std::vector<RobotState>& past_body,
    const std::vector<Control>& controls) const {
  return fkd_predict_window(*model_, past_body, controls);
}

std::vector<RobotState> fkd_predict_window(const FkdModel& model,
                                           const std::vector<RobotState>& past_body,
                                           const std::vector<Control>& controls) {
  const int w = model.spec.steps_per_window();
  if (static_cast<int>(past_body.size()) != w ||
      static_cast<int>(controls.size()) != w)
    throw std::invalid_argument("fkd_predict_window: window shape mismatch");
  const Eigen::VectorXd y = net_forward(model.params, pack_input(past_body, controls));
  return unpack_states(y, w);
}

RolloutResult fkd_rollout(const WindowPredictor& predictor,
                          const std::vector<RobotState>& history,
                          const std::vector<Control>& controls) {
  const int w = predictor.steps();
  if (static_cast<int>(history.size()) != w)
    throw std::invalid_argument("fkd_rollout: history must hold steps_per_window states");
  if (controls.empty() || static_cast<int>(controls.size()) % w != 0)
    throw std::invalid_argument("fkd_rollout: horizon must be a positive multiple of t_model");
  for (const RobotState& s : history)
    if (!s.finite()) throw std::invalid_argument("fkd_rollout: non-finite history");

  const int n_chunks = static_cast<int>(controls.size()) / w;
  RolloutResult res;
  res.states.reserve(controls.size());
  std::vector<RobotState> input = history;
  std::vector<Control> chunk_controls(w);
  for (int j = 0; j < n_chunks; ++j) {
    res.anchors.push_back(input.back().pose());
    const Pose frame = input.front().pose();
    std::vector<RobotState> body_in(w);
    for (int k = 0; k < w; ++k) body_in[k] = relative_state(frame, input[k]);
    std::copy(controls.begin() + static_cast<long>(j) * w,
              controls.begin() + static_cast<long>(j + 1) * w, chunk_controls.begin());
    std::vector<RobotState> body_out = predictor.predict(body_in, chunk_controls);
    res.net_calls += 1;
    Eigen::VectorXd raw(6 * w);
    for (int k = 0; k < w; ++k) pack_state(body_out[k], raw.data() + 6 * k);
    res.raw_chunks.push_back(std::move(raw));
    for (int k = 0; k < w; ++k) input[k] = compose_state(frame, body_out[k]);
    res.states.insert(res.states.end(), input.begin(), input.end());
  }
  return res;
}

RolloutResult fkd_rollout(const FkdModel& model,
                          const std::vector<RobotState>& history,
                          const std::vector<Control>& controls) {
  return fkd_rollout(NetWindowPredictor(model), history, controls);
}

RolloutResult fkd_rollout_jacobian(const FkdModel& model,
                                   const std::vector<RobotState>& history,
                                   const std::vector<Control>& controls,
                                   Eigen::MatrixXd& jacobian) {
  const int w = model.spec.steps_per_window();
  if (static_cast<int>(history.size()) != w)
    throw std::invalid_argument("fkd_rollout_jacobian: bad history length");
  if (controls.empty() || static_cast<int>(controls.size()) % w != 0)
    throw std::invalid_argument("fkd_rollout_jacobian: horizon must be a multiple of t_model");
  const int n = static_cast<int>(controls.size());
  const int n_chunks = n / w;
  const int n_u = 2 * n;

  RolloutResult res;
  res.states.reserve(n);
  jacobian.setZero(6 * n, n_u);
  // d(flattened input block)/d(controls); zero for chunk 0 (history fixed).
  Eigen::MatrixXd p_prev = Eigen::MatrixXd::Zero(6 * w, n_u);
  Eigen::MatrixXd p_cur(6 * w, n_u);
  Eigen::MatrixXd g_in(6 * w, n_u);

  std::vector<RobotState> input = history;
  std::vector<Control> chunk_controls(w);
  for (int j = 0; j < n_chunks; ++j) {
    res.anchors.push_back(input.back().pose());
    const Pose frame = input.front().pose();
    const double c = std::cos(frame.theta);
    const double s = std::sin(frame.theta);

    std::vector<RobotState> body_in(w);
    for (int k = 0; k < w; ++k) body_in[k] = relative_state(frame, input[k]);
    std::copy(controls.begin() + static_cast<long>(j) * w,
              controls.begin() + static_cast<long>(j + 1) * w, chunk_controls.begin());

    ForwardCache cache;
    const Eigen::VectorXd y =
        net_forward(model.params, pack_input(body_in, chunk_controls), &cache);
    res.net_calls += 1;
    const Eigen::MatrixXd j_net = net_input_jacobian(model.params, cache);

    // d(body inputs)/d u, through the re-framing onto this chunk's anchor.
    // Anchor = pose of input state 0, so its sensitivity is p_prev rows 0..2.
    const auto pa = p_prev.topRows(3);
    if (j == 0) {
      g_in.setZero();
    } else {
      for (int k = 0; k < w; ++k) {
        const auto pk = p_prev.middleRows(6 * k, 6);
        auto gk = g_in.middleRows(6 * k, 6);
        gk.row(0) = c * pk.row(0) + s * pk.row(1) - c * pa.row(0) - s * pa.row(1) +
                    body_in[k].y * pa.row(2);
        gk.row(1) = -s * pk.row(0) + c * pk.row(1) + s * pa.row(0) - c * pa.row(1) -
                    body_in[k].x * pa.row(2);
        gk.row(2) = pk.row(2) - pa.row(2);
        gk.row(3) = pk.row(3);
        gk.row(4) = pk.row(4);
        gk.row(5) = pk.row(5);
      }
    }
    Eigen::MatrixXd g_out(6 * w, n_u);
    g_out.noalias() = j_net.leftCols(6 * w) * g_in;
    // direct dependence on this chunk's own controls
    g_out.middleCols(2 * w * j, 2 * w) += j_net.rightCols(2 * w);

    for (int k = 0; k < w; ++k) {
      const double ox = y(6 * k);
      const double oy = y(6 * k + 1);
      const auto gk = g_out.middleRows(6 * k, 6);
      auto pk = p_cur.middleRows(6 * k, 6);
      pk.row(0) = c * gk.row(0) - s * gk.row(1) + pa.row(0) +
                  (-s * ox - c * oy) * pa.row(2);
      pk.row(1) = s * gk.row(0) + c * gk.row(1) + pa.row(1) +
                  (c * ox - s * oy) * pa.row(2);
      pk.row(2) = gk.row(2) + pa.row(2);
      pk.row(3) = gk.row(3);
      pk.row(4) = gk.row(4);
      pk.row(5) = gk.row(5);
    }

    res.raw_chunks.push_back(y);
    for (int k = 0; k < w; ++k) input[k] = compose_state(frame, unpack_state(y.data() + 6 * k));
    res.states.insert(res.states.end(), input.begin(), input.end());
    jacobian.middleRows(6 * w * j, 6 * w) = p_cur;
    std::swap(p_prev, p_cur);
  }
  return res;
}

// --- recurrent training loss ---------------------------------------------

FkdBatchEval fkd_batch_eval(const NetParams& params, const WindowSpec& spec,
                            const TrainingWindow* const* windows, int count,
                            const std::array<double, 6>& weights,
                            bool want_grads, bool want_control_grads) {
  const int w = spec.steps_per_window();
  const int n_chunks = spec.chunks();
  const int in_dim = w * (kStateDim + kControlDim);
  const int out_dim = w * kStateDim;

  FkdBatchEval ev;
  if (want_grads) ev.grads = GradBundle::zeros_like(params);
  if (want_control_grads)
    ev.control_grads.assign(count, Eigen::VectorXd::Zero(2 * w * n_chunks));

  // Forward, all windows in lockstep chunk by chunk. Everything lives in
  // the window frame (= body frame of the first past state).
  std::vector<ForwardCache> caches(n_chunks);
  std::vector<Eigen::MatrixXd> body_out(n_chunks);
  std::vector<std::vector<Pose>> frames(n_chunks, std::vector<Pose>(count));
  // world_out[j][b] = chunk j outputs of window b, in the window frame
  std::vector<std::vector<std::vector<RobotState>>> world_out(
      n_chunks, std::vector<std::vector<RobotState>>(count));
  std::vector<std::vector<std::vector<RobotState>>> targets(
      n_chunks, std::vector<std::vector<RobotState>>(count));

  Eigen::MatrixXd x(in_dim, count);
  for (int j = 0; j < n_chunks; ++j) {
    for (int b = 0; b < count; ++b) {
      const TrainingWindow& win = *windows[b];
      const std::vector<RobotState>& block =
          (j == 0) ? win.past_states : world_out[j - 1][b];
      const Pose frame = block.front().pose();
      frames[j][b] = frame;
      double* col = x.data() + static_cast<long>(b) * in_dim;
      for (int k = 0; k < w; ++k) {
        const RobotState rel = relative_state(frame, block[k]);
        pack_state(rel, col + 6 * k);
      }
      for (int k = 0; k < w; ++k) {
        const Control& u = win.controls[static_cast<std::size_t>(j) * w + k];
        col[6 * w + 2 * k] = u.delta;
        col[6 * w + 2 * k + 1] = u.psi;
      }
      targets[j][b].reserve(w);
      for (int k = 0; k < w; ++k)
        targets[j][b].push_back(compose_state(win.chunks[j].anchor, win.chunks[j].targets[k]));
    }
    const bool keep_cache = want_grads || want_control_grads;
    body_out[j] = net_forward(params, x, keep_cache ? &caches[j] : nullptr);
    for (int b = 0; b < count; ++b) {
      const Pose& frame = frames[j][b];
      const double* col = body_out[j].data() + static_cast<long>(b) * out_dim;
      std::vector<RobotState>& outs = world_out[j][b];
      outs.reserve(w);
      for (int k = 0; k < w; ++k)
        outs.push_back(compose_state(frame, unpack_state(col + 6 * k)));
    }
  }

  // Loss and (optionally) the direct part of the world-output adjoints.
  std::vector<std::vector<Eigen::VectorXd>> g_world;
  if (want_grads || want_control_grads)
    g_world.assign(n_chunks,
                   std::vector<Eigen::VectorXd>(count, Eigen::VectorXd::Zero(out_dim)));
  for (int j = 0; j < n_chunks; ++j) {
    for (int b = 0; b < count; ++b) {
      for (int k = 0; k < w; ++k) {
        const RobotState& p = world_out[j][b][k];
        const RobotState& t = targets[j][b][k];
        const double diff[6] = {p.x - t.x,
                                p.y - t.y,
                                wrap_angle(p.theta - t.theta),
                                p.v_x - t.v_x,
                                p.v_y - t.v_y,
                                p.omega - t.omega};
        for (int c = 0; c < 6; ++c) {
          ev.loss_sum += weights[c] * diff[c] * diff[c];
          if (!g_world.empty())
            g_world[j][b](6 * k + c) = 2.0 * weights[c] * diff[c];
        }
      }
    }
  }
  if (!want_grads && !want_control_grads) return ev;

  // Reverse sweep through the chunk recurrence (full backprop through
  // time: gradients flow through anchors and re-framings).
  Eigen::MatrixXd out_grad(out_dim, count);
  for (int j = n_chunks - 1; j >= 0; --j) {
    std::vector<Eigen::Vector3d> adj_frame(count, Eigen::Vector3d::Zero());
    for (int b = 0; b < count; ++b) {
      const Pose& frame = frames[j][b];
      const double c = std::cos(frame.theta);
      const double s = std::sin(frame.theta);
      const double* body = body_out[j].data() + static_cast<long>(b) * out_dim;
      const Eigen::VectorXd& gw = g_world[j][b];
      double* col = out_grad.data() + static_cast<long>(b) * out_dim;
      for (int k = 0; k < w; ++k) {
        const double gx = gw(6 * k), gy = gw(6 * k + 1), gth = gw(6 * k + 2);
        const double ox = body[6 * k], oy = body[6 * k + 1];
        col[6 * k] = c * gx + s * gy;
        col[6 * k + 1] = -s * gx + c * gy;
        col[6 * k + 2] = gth;
        col[6 * k + 3] = gw(6 * k + 3);
        col[6 * k + 4] = gw(6 * k + 4);
        col[6 * k + 5] = gw(6 * k + 5);
        adj_frame[b](0) += gx;
        adj_frame[b](1) += gy;
        adj_frame[b](2) += gx * (-s * ox - c * oy) + gy * (c * ox - s * oy) + gth;
      }
    }
    GradBundle g = net_backward(params, caches[j], out_grad);
    if (want_grads) ev.grads.add_params(g);
    for (int b = 0; b < count; ++b) {
      const double* gin = g.d_input.data() + static_cast<long>(b) * in_dim;
      if (want_control_grads) {
        for (int k = 0; k < 2 * w; ++k)
          ev.control_grads[b](2 * w * j + k) += gin[6 * w + k];
      }
      if (j == 0) continue;  // chunk-0 inputs are window constants
      const Pose& frame = frames[j][b];
      const double c = std::cos(frame.theta);
      const double s = std::sin(frame.theta);
      const double* xin = caches[j].input.data() + static_cast<long>(b) * in_dim;
      Eigen::VectorXd& gprev = g_world[j - 1][b];
      for (int k = 0; k < w; ++k) {
        const double gx = gin[6 * k], gy = gin[6 * k + 1], gth = gin[6 * k + 2];
        const double bx = xin[6 * k], by = xin[6 * k + 1];
        gprev(6 * k) += c * gx - s * gy;
        gprev(6 * k + 1) += s * gx + c * gy;
        gprev(6 * k + 2) += gth;
        gprev(6 * k + 3) += gin[6 * k + 3];
        gprev(6 * k + 4) += gin[6 * k + 4];
        gprev(6 * k + 5) += gin[6 * k + 5];
        adj_frame[b](0) += -c * gx + s * gy;
        adj_frame[b](1) += -s * gx - c * gy;
        adj_frame[b](2) += gx * by - gy * bx - gth;
      }
      // The frame is the pose of the previous chunk's first output.
      gprev(0) += adj_frame[b](0);
      gprev(1) += adj_frame[b](1);
      gprev(2) += adj_frame[b](2);
    }
  }
  return ev;
}

// --- trainer ---------------------------------------------------------------

FkdModel train_fkd(const std::vector<Trajectory>& train_trajs,
                   const std::vector<Trajectory>& val_trajs,
                   const WindowSpec& spec, const TrainConfig& cfg,
                   TrainReport* report) {
  spec.validate();
  if (train_trajs.empty()) throw std::invalid_argument("train_fkd: empty dataset");
  const std::vector<TrainingWindow> train_w =
      windows_from_trajectories(train_trajs, cfg.k_windows, spec);
  const std::vector<TrainingWindow> val_w =
      windows_from_trajectories(val_trajs, cfg.k_windows, spec);

  const int w = spec.steps_per_window();
  std::vector<int> sizes;
  sizes.push_back(w * (kStateDim + kControlDim));
  for (int i = 0; i < cfg.hidden_layers; ++i) sizes.push_back(cfg.hidden_width);
  sizes.push_back(w * kStateDim);

  FkdModel model{net_init(cfg.seed, sizes), spec};
  AdamState adam = AdamState::zeros_like(model.params, cfg.lr);
  std::mt19937_64 rng(cfg.seed ^ 0xda7a5e7ULL);

  // losses are reported as mean squared error per state component
  const double element_count =
      static_cast<double>(spec.chunks() * spec.steps_per_window() * kStateDim);
  auto eval_set = [&](const std::vector<TrainingWindow>& set) {
    if (set.empty()) return 0.0;
    double total = 0.0;
    const int chunk = 256;
    std::vector<const TrainingWindow*> ptrs;
    for (std::size_t i = 0; i < set.size(); i += chunk) {
      ptrs.clear();
      for (std::size_t k = i; k < std::min(set.size(), i + chunk); ++k)
        ptrs.push_back(&set[k]);
      total += fkd_batch_eval(model.params, spec, ptrs.data(),
                              static_cast<int>(ptrs.size()), cfg.loss_weights,
                              false)
                   .loss_sum;
    }
    return total / (static_cast<double>(set.size()) * element_count);
  };

  std::vector<std::size_t> order(train_w.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  double epoch_loss = 0.0;
  long epoch_batches = 0;

  std::vector<const TrainingWindow*> batch;
  for (long step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    for (int i = 0; i < cfg.batch; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
        if (epoch_batches > 0 && report != nullptr) {
          report->train_loss.push_back(epoch_loss / static_cast<double>(epoch_batches));
          report->val_loss.push_back(eval_set(val_w));
        }
        epoch_loss = 0.0;
        epoch_batches = 0;
      }
      batch.push_back(&train_w[order[cursor++]]);
    }
    FkdBatchEval ev = fkd_batch_eval(model.params, spec, batch.data(),
                                     static_cast<int>(batch.size()),
                                     cfg.loss_weights, true);
    ev.grads.scale_params(1.0 / static_cast<double>(batch.size()));
    adam_step(model.params, ev.grads, adam);
    epoch_loss += ev.loss_sum / (static_cast<double>(batch.size()) * element_count);
    epoch_batches += 1;
    if (cfg.lr_decay_every > 0 && step % cfg.lr_decay_every == 0)
      adam.lr *= cfg.lr_decay;
  }
  if (report != nullptr) {
    if (epoch_batches > 0) {
      report->train_loss.push_back(epoch_loss / static_cast<double>(epoch_batches));
      report->val_loss.push_back(eval_set(val_w));
    }
    report->steps = cfg.steps;
  }
  return model;
}

double fkd_open_loop_rmse(const FkdModel& model,
                          const std::vector<Trajectory>& trajs, int k,
                          double speed_cap) {
  const int w = model.spec.steps_per_window();
  const int horizon = w * model.spec.chunks();
  double sq_sum = 0.0;
  long n_pts = 0;
  for (const Trajectory& traj : trajs) {
    for (double t_a : sample_window_starts(traj, k, model.spec)) {
      const int a = traj.index_at(t_a);
      bool ok = true;
      for (int i = a - w + 1; i <= a + horizon && ok; ++i)
        if (std::abs(traj.samples[i].state.v_x) > speed_cap) ok = false;
      if (!ok) continue;
      std::vector<RobotState> history;
      history.reserve(w);
      for (int i = a - w + 1; i <= a; ++i) history.push_back(traj.samples[i].state);
      std::vector<Control> controls;
      controls.reserve(horizon);
      for (int i = a; i < a + horizon; ++i) controls.push_back(traj.samples[i].control);
      const RolloutResult roll = fkd_rollout(model, history, controls);
      for (int i = 0; i < horizon; ++i) {
        const RobotState& gt = traj.samples[a + 1 + i].state;
        const double dx = roll.states[i].x - gt.x;
        const double dy = roll.states[i].y - gt.y;
        sq_sum += dx * dx + dy * dy;
        n_pts += 1;
      }
    }
  }
  if (n_pts == 0) throw std::invalid_argument("fkd_open_loop_rmse: no eligible windows");
  return std::sqrt(sq_sum / static_cast<double>(n_pts));
}

void save_fkd(const std::string& path, const FkdModel& model,
              std::uint64_t seed, long train_iters) {
  json j = net_to_json(model.params, seed);
  j["kind"] = "fkd";
  j["spec"] = {{"tau", model.spec.tau},
               {"t_model", model.spec.t_model},
               {"t_pred", model.spec.t_pred}};
  j["train_iters"] = train_iters;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

FkdModel load_fkd(const std::string& path, long* train_iters) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for read: " + path);
  json j;
  f >> j;
  if (j.value("kind", "") != "fkd") throw IoError("not an fkd model file: " + path);
  FkdModel model;
  model.params = net_from_json(j);
  model.spec.tau = j.at("spec").at("tau").get<double>();
  model.spec.t_model = j.at("spec").at("t_model").get<double>();
  model.spec.t_pred = j.at("spec").at("t_pred").get<double>();
  model.spec.validate();
  if (train_iters != nullptr) *train_iters = j.value("train_iters", 0L);
  return model;
}

}  // namespace optimfkd
