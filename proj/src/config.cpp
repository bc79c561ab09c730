#include "optimfkd/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "optimfkd/errors.hpp"

namespace optimfkd {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {}
  ~Section() = default;

  template <typename T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for " + name_ + "." + key + ": " + e.what());
    }
  }

  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key))
        throw ConfigError("config: unknown key " + name_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void apply_sim(const json& j, SimParams& p) {
  Section s(j, "sim");
  s.get("t_v", p.t_v);
  s.get("t_w", p.t_w);
  s.get("t_slip", p.t_slip);
  s.get("k_slip", p.k_slip);
  s.get("mu_g", p.mu_g);
  s.get("a_max", p.a_max);
  s.get("v_max", p.v_max);
  s.get("psi_max", p.psi_max);
  s.get("dt_sub", p.dt_sub);
  s.get("noise_accel", p.noise_accel);
  s.get("noise_yaw", p.noise_yaw);
  s.finish();
}

void apply_excitation(const json& j, ExcitationConfig& e) {
  Section s(j, "data.excitation");
  s.get("seed", e.seed);
  s.get("tau", e.tau);
  s.get("duration", e.duration);
  s.get("smooth_tc", e.smooth_tc);
  s.get("speed_plateaus", e.speed_plateaus);
  s.get("plateau_duration", e.plateau_duration);
  s.get("delta_count", e.delta_band.count);
  s.get("delta_f_lo", e.delta_band.f_lo);
  s.get("delta_f_hi", e.delta_band.f_hi);
  s.get("delta_amplitude", e.delta_band.amplitude);
  s.get("psi_count", e.psi_band.count);
  s.get("psi_f_lo", e.psi_band.f_lo);
  s.get("psi_f_hi", e.psi_band.f_hi);
  s.get("psi_amplitude", e.psi_band.amplitude);
  s.get("delta_jitter_amplitude", e.delta_jitter.amplitude);
  s.get("psi_jitter_amplitude", e.psi_jitter.amplitude);
  s.get("envelope_f_lo", e.psi_envelope_f_lo);
  s.get("envelope_f_hi", e.psi_envelope_f_hi);
  s.get("lead_in_lo", e.lead_in_lo);
  s.get("lead_in_hi", e.lead_in_hi);
  s.finish();
}

void apply_data(const json& j, DataConfig& d) {
  Section s(j, "data");
  s.get("seed", d.seed);
  s.get("n_train", d.n_train);
  s.get("n_val", d.n_val);
  s.get("duration", d.duration);
  s.get("k_windows", d.k_windows);
  s.mark("excitation");
  if (j.contains("excitation")) apply_excitation(j.at("excitation"), d.excitation);
  s.finish();
}

void apply_model(const json& j, WindowSpec& m) {
  Section s(j, "model");
  s.get("tau", m.tau);
  s.get("t_model", m.t_model);
  s.get("t_pred", m.t_pred);
  s.finish();
}

void apply_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.get("seed", t.seed);
  s.get("steps", t.steps);
  s.get("batch", t.batch);
  s.get("lr", t.lr);
  s.get("lr_decay", t.lr_decay);
  s.get("lr_decay_every", t.lr_decay_every);
  s.get("hidden_layers", t.hidden_layers);
  s.get("hidden_width", t.hidden_width);
  s.get("k_windows", t.k_windows);
  s.get("loss_weights", t.loss_weights);
  s.finish();
}

void apply_solver(const json& j, SolverConfig& c) {
  Section s(j, "solver");
  s.get("max_iters", c.lm.max_iters);
  s.get("lambda0", c.lm.lambda0);
  s.get("lambda_up", c.lm.lambda_up);
  s.get("lambda_down", c.lm.lambda_down);
  s.get("lambda_max", c.lm.lambda_max);
  s.get("grad_tol", c.lm.grad_tol);
  s.get("step_tol", c.lm.step_tol);
  s.get("cost_tol", c.lm.cost_tol);
  s.get("w_x", c.path_weights.w_x);
  s.get("w_y", c.path_weights.w_y);
  s.get("w_theta", c.path_weights.w_theta);
  s.get("conn_w_x", c.conn_weights.w_x);
  s.get("conn_w_y", c.conn_weights.w_y);
  s.get("conn_w_theta", c.conn_weights.w_theta);
  s.get("conn_w_vx", c.conn_weights.w_vx);
  s.get("conn_w_vy", c.conn_weights.w_vy);
  s.get("conn_w_omega", c.conn_weights.w_omega);
  s.get("runtime_max_iters", c.runtime_max_iters);
  s.get("alpha", c.alpha);
  s.get("n_min", c.n_min);
  s.get("n_max", c.n_max);
  s.finish();
}

void apply_runtime(const json& j, RuntimeConfig& r) {
  Section s(j, "runtime");
  s.get("delta_t", r.delta_t);
  s.get("epsilon", r.epsilon);
  s.get("v_desired", r.v_desired);
  s.get("optimizer_period", r.optimizer_period);
  s.get("executor_period", r.executor_period);
  s.get("estimator_period", r.estimator_period);
  s.get("gamma_sim", r.gamma_sim);
  s.get("compensate", r.compensate);
  s.get("state_buffer_capacity", r.state_buffer_capacity);
  s.get("starvation_hold_ticks", r.starvation_hold_ticks);
  s.finish();
}

void apply_eval(const json& j, EvalConfig& e) {
  Section s(j, "eval");
  s.get("paths", e.paths);
  s.get("speeds", e.speeds);
  s.get("rollouts", e.rollouts);
  s.get("seed", e.seed);
  s.get("sample_step", e.sample_step);
  s.get("noise_accel", e.noise_accel);
  s.get("noise_yaw", e.noise_yaw);
  s.get("goal_pos_tol", e.goal_pos_tol);
  s.get("goal_speed_tol", e.goal_speed_tol);
  s.get("goal_timeout", e.goal_timeout);
  s.get("line_v_cap", e.line_v_cap);
  s.get("line_accel", e.line_accel);
  s.get("ikd_optimizer_period", e.ikd_optimizer_period);
  s.get("ikd_gamma_sim", e.ikd_gamma_sim);
  s.finish();
}

}  // namespace

GlobalConfig default_config() { return GlobalConfig{}; }

GlobalConfig load_config(const std::string& path) {
  GlobalConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  const std::set<std::string> known = {"sim",    "data",    "model", "train",
                                       "solver", "runtime", "eval"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw ConfigError("config: unknown section " + key);
  }
  if (j.contains("sim")) apply_sim(j.at("sim"), cfg.sim);
  if (j.contains("data")) apply_data(j.at("data"), cfg.data);
  if (j.contains("model")) apply_model(j.at("model"), cfg.model);
  if (j.contains("train")) apply_train(j.at("train"), cfg.train);
  if (j.contains("solver")) apply_solver(j.at("solver"), cfg.solver);
  if (j.contains("runtime")) apply_runtime(j.at("runtime"), cfg.runtime);
  if (j.contains("eval")) apply_eval(j.at("eval"), cfg.eval);
  cfg.model.validate();
  return cfg;
}

void write_config_json(const std::string& path, const GlobalConfig& cfg) {
  json j;
  j["sim"] = {{"t_v", cfg.sim.t_v},         {"t_w", cfg.sim.t_w},
              {"t_slip", cfg.sim.t_slip},   {"k_slip", cfg.sim.k_slip},
              {"mu_g", cfg.sim.mu_g},       {"a_max", cfg.sim.a_max},
              {"v_max", cfg.sim.v_max},     {"psi_max", cfg.sim.psi_max},
              {"dt_sub", cfg.sim.dt_sub},   {"noise_accel", cfg.sim.noise_accel},
              {"noise_yaw", cfg.sim.noise_yaw}};
  j["data"] = {{"seed", cfg.data.seed},
               {"n_train", cfg.data.n_train},
               {"n_val", cfg.data.n_val},
               {"duration", cfg.data.duration},
               {"k_windows", cfg.data.k_windows},
               {"excitation",
                {{"seed", cfg.data.excitation.seed},
                 {"tau", cfg.data.excitation.tau},
                 {"duration", cfg.data.excitation.duration},
                 {"smooth_tc", cfg.data.excitation.smooth_tc},
                 {"speed_plateaus", cfg.data.excitation.speed_plateaus},
                 {"plateau_duration", cfg.data.excitation.plateau_duration},
                 {"delta_count", cfg.data.excitation.delta_band.count},
                 {"delta_f_lo", cfg.data.excitation.delta_band.f_lo},
                 {"delta_f_hi", cfg.data.excitation.delta_band.f_hi},
                 {"delta_amplitude", cfg.data.excitation.delta_band.amplitude},
                 {"psi_count", cfg.data.excitation.psi_band.count},
                 {"psi_f_lo", cfg.data.excitation.psi_band.f_lo},
                 {"psi_f_hi", cfg.data.excitation.psi_band.f_hi},
                 {"psi_amplitude", cfg.data.excitation.psi_band.amplitude},
                 {"delta_jitter_amplitude", cfg.data.excitation.delta_jitter.amplitude},
                 {"psi_jitter_amplitude", cfg.data.excitation.psi_jitter.amplitude},
                 {"envelope_f_lo", cfg.data.excitation.psi_envelope_f_lo},
                 {"envelope_f_hi", cfg.data.excitation.psi_envelope_f_hi},
                 {"lead_in_lo", cfg.data.excitation.lead_in_lo},
                 {"lead_in_hi", cfg.data.excitation.lead_in_hi}}}};
  j["model"] = {{"tau", cfg.model.tau},
                {"t_model", cfg.model.t_model},
                {"t_pred", cfg.model.t_pred}};
  j["train"] = {{"seed", cfg.train.seed},
                {"steps", cfg.train.steps},
                {"batch", cfg.train.batch},
                {"lr", cfg.train.lr},
                {"lr_decay", cfg.train.lr_decay},
                {"lr_decay_every", cfg.train.lr_decay_every},
                {"hidden_layers", cfg.train.hidden_layers},
                {"hidden_width", cfg.train.hidden_width},
                {"k_windows", cfg.train.k_windows},
                {"loss_weights", cfg.train.loss_weights}};
  j["solver"] = {{"max_iters", cfg.solver.lm.max_iters},
                 {"lambda0", cfg.solver.lm.lambda0},
                 {"lambda_up", cfg.solver.lm.lambda_up},
                 {"lambda_down", cfg.solver.lm.lambda_down},
                 {"lambda_max", cfg.solver.lm.lambda_max},
                 {"grad_tol", cfg.solver.lm.grad_tol},
                 {"step_tol", cfg.solver.lm.step_tol},
                 {"cost_tol", cfg.solver.lm.cost_tol},
                 {"w_x", cfg.solver.path_weights.w_x},
                 {"w_y", cfg.solver.path_weights.w_y},
                 {"w_theta", cfg.solver.path_weights.w_theta},
                 {"conn_w_x", cfg.solver.conn_weights.w_x},
                 {"conn_w_y", cfg.solver.conn_weights.w_y},
                 {"conn_w_theta", cfg.solver.conn_weights.w_theta},
                 {"conn_w_vx", cfg.solver.conn_weights.w_vx},
                 {"conn_w_vy", cfg.solver.conn_weights.w_vy},
                 {"conn_w_omega", cfg.solver.conn_weights.w_omega},
                 {"runtime_max_iters", cfg.solver.runtime_max_iters},
                 {"alpha", cfg.solver.alpha},
                 {"n_min", cfg.solver.n_min},
                 {"n_max", cfg.solver.n_max}};
  j["runtime"] = {{"delta_t", cfg.runtime.delta_t},
                  {"epsilon", cfg.runtime.epsilon},
                  {"v_desired", cfg.runtime.v_desired},
                  {"optimizer_period", cfg.runtime.optimizer_period},
                  {"executor_period", cfg.runtime.executor_period},
                  {"estimator_period", cfg.runtime.estimator_period},
                  {"gamma_sim", cfg.runtime.gamma_sim},
                  {"compensate", cfg.runtime.compensate},
                  {"state_buffer_capacity", cfg.runtime.state_buffer_capacity},
                  {"starvation_hold_ticks", cfg.runtime.starvation_hold_ticks}};
  j["eval"] = {{"paths", cfg.eval.paths},
               {"speeds", cfg.eval.speeds},
               {"rollouts", cfg.eval.rollouts},
               {"seed", cfg.eval.seed},
               {"sample_step", cfg.eval.sample_step},
               {"noise_accel", cfg.eval.noise_accel},
               {"noise_yaw", cfg.eval.noise_yaw},
               {"goal_pos_tol", cfg.eval.goal_pos_tol},
               {"goal_speed_tol", cfg.eval.goal_speed_tol},
               {"goal_timeout", cfg.eval.goal_timeout},
               {"line_v_cap", cfg.eval.line_v_cap},
               {"line_accel", cfg.eval.line_accel},
               {"ikd_optimizer_period", cfg.eval.ikd_optimizer_period},
               {"ikd_gamma_sim", cfg.eval.ikd_gamma_sim}};
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

}  // namespace optimfkd
