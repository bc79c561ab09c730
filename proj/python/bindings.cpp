#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optimfkd/config.hpp"
#include "optimfkd/eval.hpp"
#include "optimfkd/fkd.hpp"
#include "optimfkd/ikd.hpp"
#include "optimfkd/metrics.hpp"
#include "optimfkd/nlls.hpp"
#include "optimfkd/paths_builtin.hpp"
#include "optimfkd/runtime.hpp"
#include "optimfkd/sim.hpp"
#include "optimfkd/trajectory.hpp"

namespace py = pybind11;
using namespace optimfkd;

namespace {

Eigen::MatrixXd states_to_matrix(const std::vector<RobotState>& states) {
  Eigen::MatrixXd m(states.size(), 6);
  for (std::size_t i = 0; i < states.size(); ++i) {
    m(i, 0) = states[i].x;
    m(i, 1) = states[i].y;
    m(i, 2) = states[i].theta;
    m(i, 3) = states[i].v_x;
    m(i, 4) = states[i].v_y;
    m(i, 5) = states[i].omega;
  }
  return m;
}

std::vector<RobotState> matrix_to_states(const Eigen::MatrixXd& m) {
  if (m.cols() != 6) throw std::invalid_argument("expected an N x 6 state matrix");
  std::vector<RobotState> states(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    states[i] = {m(i, 0), m(i, 1), m(i, 2), m(i, 3), m(i, 4), m(i, 5)};
  return states;
}

std::vector<Control> matrix_to_controls(const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw std::invalid_argument("expected an N x 2 control matrix");
  std::vector<Control> u(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) u[i] = {m(i, 0), m(i, 1)};
  return u;
}

Polyline matrix_to_polyline(const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw std::invalid_argument("expected an N x 2 point matrix");
  Polyline line(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) line[i] = m.row(i).transpose();
  return line;
}

}  // namespace

PYBIND11_MODULE(_optimfkd, m) {
  m.doc() = "forward-kinodynamic optimal control stack";

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("t_v", &SimParams::t_v)
      .def_readwrite("t_w", &SimParams::t_w)
      .def_readwrite("t_slip", &SimParams::t_slip)
      .def_readwrite("k_slip", &SimParams::k_slip)
      .def_readwrite("mu_g", &SimParams::mu_g)
      .def_readwrite("a_max", &SimParams::a_max)
      .def_readwrite("v_max", &SimParams::v_max)
      .def_readwrite("psi_max", &SimParams::psi_max)
      .def_readwrite("dt_sub", &SimParams::dt_sub);

  m.def(
      "sim_step",
      [](const Eigen::VectorXd& state, double delta, double psi, double tau,
         const SimParams& params) -> Eigen::VectorXd {
        if (state.size() != 6) throw std::invalid_argument("state must have 6 entries");
        const RobotState s{state(0), state(1), state(2), state(3), state(4), state(5)};
        const RobotState out = sim_step(s, Control{delta, psi}, tau, params);
        Eigen::VectorXd v(6);
        v << out.x, out.y, out.theta, out.v_x, out.v_y, out.omega;
        return v;
      },
      py::arg("state"), py::arg("delta"), py::arg("psi"), py::arg("tau") = 0.05,
      py::arg("params") = SimParams{});

  m.def(
      "sim_rollout",
      [](const Eigen::VectorXd& state, const Eigen::MatrixXd& controls, double tau,
         const SimParams& params) {
        if (state.size() != 6) throw std::invalid_argument("state must have 6 entries");
        const RobotState s{state(0), state(1), state(2), state(3), state(4), state(5)};
        return states_to_matrix(sim_rollout(s, matrix_to_controls(controls), tau, params));
      },
      py::arg("state"), py::arg("controls"), py::arg("tau") = 0.05,
      py::arg("params") = SimParams{});

  m.def(
      "builtin_path",
      [](const std::string& name) {
        const PathMap map = builtin_path(name);
        Eigen::MatrixXd pts(map.points.size(), 3);
        for (std::size_t i = 0; i < map.points.size(); ++i) {
          pts(i, 0) = map.points[i].x;
          pts(i, 1) = map.points[i].y;
          pts(i, 2) = map.points[i].theta;
        }
        return pts;
      },
      py::arg("name"));
  m.def("builtin_path_names", &builtin_path_names);

  m.def(
      "hausdorff_distance",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double step) {
        return hausdorff_distance(matrix_to_polyline(a), matrix_to_polyline(b), step);
      },
      py::arg("a"), py::arg("b"), py::arg("sample_step") = 0.01);

  py::class_<FkdModel>(m, "FkdModel")
      .def_static("load", [](const std::string& path) { return load_fkd(path); })
      .def_property_readonly("tau", [](const FkdModel& f) { return f.spec.tau; })
      .def_property_readonly("t_model", [](const FkdModel& f) { return f.spec.t_model; })
      .def_property_readonly("t_pred", [](const FkdModel& f) { return f.spec.t_pred; })
      .def("predict_window",
           [](const FkdModel& f, const Eigen::MatrixXd& past_body,
              const Eigen::MatrixXd& controls) {
             return states_to_matrix(fkd_predict_window(f, matrix_to_states(past_body),
                                                        matrix_to_controls(controls)));
           })
      .def("rollout",
           [](const FkdModel& f, const Eigen::MatrixXd& history,
              const Eigen::MatrixXd& controls) {
             return states_to_matrix(
                 fkd_rollout(f, matrix_to_states(history), matrix_to_controls(controls))
                     .states);
           })
      .def("rollout_jacobian",
           [](const FkdModel& f, const Eigen::MatrixXd& history,
              const Eigen::MatrixXd& controls) {
             Eigen::MatrixXd jac;
             const RolloutResult roll = fkd_rollout_jacobian(
                 f, matrix_to_states(history), matrix_to_controls(controls), jac);
             return py::make_tuple(states_to_matrix(roll.states), jac);
           });

  py::class_<IkdModel>(m, "IkdModel")
      .def_static("load", [](const std::string& path) { return load_ikd(path); })
      .def("track_step",
           [](const IkdModel& f, const Eigen::MatrixXd& history,
              const Eigen::MatrixXd& desired) {
             const auto u =
                 ikd_track_step(f, matrix_to_states(history), matrix_to_states(desired));
             Eigen::MatrixXd out(u.size(), 2);
             for (std::size_t i = 0; i < u.size(); ++i) {
               out(i, 0) = u[i].delta;
               out(i, 1) = u[i].psi;
             }
             return out;
           });

  m.def(
      "generate_dataset",
      [](const std::string& dir, int n_train, int n_val, double duration,
         std::uint64_t seed) {
        DataConfig cfg;
        cfg.n_train = n_train;
        cfg.n_val = n_val;
        cfg.duration = duration;
        cfg.seed = seed;
        generate_dataset(dir, cfg, SimParams{});
      },
      py::arg("dir"), py::arg("n_train") = 20, py::arg("n_val") = 5,
      py::arg("duration") = 60.0, py::arg("seed") = 12345);

  m.def(
      "train_fkd",
      [](const std::string& data_dir, const std::string& out, long steps,
         int hidden_layers, int hidden_width) {
        const Dataset ds = load_dataset(data_dir);
        GlobalConfig cfg;
        cfg.train.steps = steps;
        cfg.train.hidden_layers = hidden_layers;
        cfg.train.hidden_width = hidden_width;
        TrainReport report;
        const FkdModel model =
            train_fkd(ds.train, ds.val, cfg.model, cfg.train, &report);
        save_fkd(out, model, cfg.train.seed, report.steps);
        return py::make_tuple(report.train_loss, report.val_loss);
      },
      py::arg("data_dir"), py::arg("out"), py::arg("steps") = 4000,
      py::arg("hidden_layers") = 6, py::arg("hidden_width") = 256);

  m.def(
      "run_follow",
      [](const std::string& fkd_path, const std::string& path_name, double speed,
         double duration, std::uint64_t seed) {
        const FkdModel model = load_fkd(fkd_path);
        GlobalConfig cfg;
        const PathMap path = builtin_path(path_name);
        ClosedLoopSetup setup;
        setup.sim = cfg.sim;
        setup.runtime = cfg.runtime;
        setup.runtime.v_desired = speed;
        setup.fkd = &model;
        setup.fkd_cfg = {cfg.solver.lm, cfg.solver.path_weights, cfg.solver.conn_weights};
        setup.fkd_cfg.lm.max_iters = cfg.solver.runtime_max_iters;
        setup.objective = FollowObjective{path, speed};
        RobotState start;
        start.x = path.points[0].x;
        start.y = path.points[0].y;
        start.theta = path.points[0].theta;
        setup.start = start;
        setup.duration = duration;
        setup.seed = seed;
        const ExecutionTrace trace = run_closed_loop(setup);
        Eigen::MatrixXd rows(trace.rows.size(), 9);
        for (std::size_t i = 0; i < trace.rows.size(); ++i) {
          const TraceRow& r = trace.rows[i];
          rows.row(i) << r.t, r.truth.x, r.truth.y, r.truth.theta, r.truth.v_x,
              r.truth.v_y, r.truth.omega, r.exec.delta, r.exec.psi;
        }
        return rows;
      },
      py::arg("fkd_path"), py::arg("path_name"), py::arg("speed") = 1.5,
      py::arg("duration") = 20.0, py::arg("seed") = 0);
}
