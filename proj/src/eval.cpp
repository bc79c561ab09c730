#include "optimfkd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "optimfkd/errors.hpp"
#include "optimfkd/paths_builtin.hpp"

namespace optimfkd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string cell_tag(const std::string& method, const std::string& path,
                     double speed, int rollout) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s_%s_%03d_%d", method.c_str(), path.c_str(),
                static_cast<int>(std::llround(speed * 100.0)), rollout);
  return buf;
}

RuntimeConfig runtime_for(const GlobalConfig& cfg, bool ikd, double v_desired) {
  RuntimeConfig rt = cfg.runtime;
  rt.v_desired = v_desired;
  if (ikd) {
    rt.optimizer_period = cfg.eval.ikd_optimizer_period;
    rt.gamma_sim = cfg.eval.ikd_gamma_sim;
  }
  return rt;
}

SimParams sim_with_noise(const GlobalConfig& cfg) {
  SimParams sim = cfg.sim;
  sim.noise_accel = cfg.eval.noise_accel;
  sim.noise_yaw = cfg.eval.noise_yaw;
  return sim;
}

}  // namespace

Polyline trace_polyline(const std::vector<TraceRow>& rows) {
  Polyline line;
  line.reserve(rows.size());
  for (const TraceRow& r : rows) {
    const Eigen::Vector2d p(r.truth.x, r.truth.y);
    if (line.empty() || (line.back() - p).norm() > 1e-9) line.push_back(p);
  }
  return line;
}

Polyline path_polyline(const PathMap& map) {
  Polyline line;
  line.reserve(map.points.size());
  for (const Pose& p : map.points) line.emplace_back(p.x, p.y);
  return line;
}

RobotState connectivity_start() {
  RobotState s;
  s.theta = M_PI / 2.0;
  return s;
}

RobotState connectivity_goal() {
  RobotState g;
  g.x = -5.0;
  g.y = 0.0;
  g.theta = wrap_angle(1.5 * M_PI);
  return g;
}

FollowReport eval_path_following(const FkdModel* fkd, const IkdModel* ikd,
                                 const GlobalConfig& cfg,
                                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  FollowReport report;
  json manifest;
  manifest["kind"] = "follow";
  manifest["sample_step"] = cfg.eval.sample_step;
  manifest["cells"] = json::array();

  std::vector<std::pair<std::string, const void*>> methods;
  if (fkd != nullptr) methods.emplace_back("optim_fkd", fkd);
  if (ikd != nullptr) methods.emplace_back("ikd", ikd);

  for (const std::string& path_name : cfg.eval.paths) {
    const PathMap map = builtin_path(path_name);
    const Polyline desired = path_polyline(map);
    for (const auto& [method, model_ptr] : methods) {
      const bool is_ikd = method == "ikd";
      for (double speed : cfg.eval.speeds) {
        FollowCell cell;
        cell.method = method;
        cell.path = path_name;
        cell.speed = speed;
        for (int r = 0; r < cfg.eval.rollouts; ++r) {
          ClosedLoopSetup setup;
          setup.sim = sim_with_noise(cfg);
          setup.runtime = runtime_for(cfg, is_ikd, speed);
          setup.fkd = is_ikd ? nullptr : static_cast<const FkdModel*>(model_ptr);
          setup.ikd = is_ikd ? static_cast<const IkdModel*>(model_ptr) : nullptr;
          setup.fkd_cfg = {cfg.solver.lm, cfg.solver.path_weights,
                           cfg.solver.conn_weights};
          setup.fkd_cfg.lm.max_iters = cfg.solver.runtime_max_iters;
          setup.objective = FollowObjective{map, speed};
          RobotState start;
          start.x = map.points[0].x;
          start.y = map.points[0].y;
          start.theta = map.points[0].theta;
          setup.start = start;
          setup.duration = map.length() / speed * 1.6 + 8.0;
          setup.seed = cfg.eval.seed ^ fnv64(cell_tag(method, path_name, speed, r));
          const ExecutionTrace trace = run_closed_loop(setup);
          const double h = hausdorff_distance(trace_polyline(trace.rows), desired,
                                              cfg.eval.sample_step);
          const std::string trace_file = "trace_" + cell_tag(method, path_name, speed, r) + ".csv";
          trace.write_csv((fs::path(out_dir) / trace_file).string());
          cell.hausdorff.push_back(h);
          cell.seeds.push_back(setup.seed);
          cell.trace_files.push_back(trace_file);
          cell.completed.push_back(trace.progress >= map.length() - 0.05);
          cell.max_speed = std::max(cell.max_speed, trace.max_speed);
        }
        cell.mean_hausdorff =
            std::accumulate(cell.hausdorff.begin(), cell.hausdorff.end(), 0.0) /
            static_cast<double>(cell.hausdorff.size());
        json jc;
        jc["method"] = cell.method;
        jc["path"] = cell.path;
        jc["speed"] = cell.speed;
        jc["traces"] = cell.trace_files;
        jc["seeds"] = cell.seeds;
        manifest["cells"].push_back(jc);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  std::ofstream mf(fs::path(out_dir) / "run_manifest.json");
  mf << manifest.dump(2) << "\n";
  write_follow_report_csv((fs::path(out_dir) / "report.csv").string(), report);

  // Inspection figures: per path, mean hausdorff vs speed and an overlay of
  // the first rollout per method at the highest speed.
  for (const std::string& path_name : cfg.eval.paths) {
    std::vector<SvgSeries> chart;
    for (const auto& [method, model_ptr] : methods) {
      (void)model_ptr;
      SvgSeries s;
      s.color = method == "ikd" ? "#d62728" : "#1f77b4";
      s.label = method;
      for (const FollowCell& cell : report.cells)
        if (cell.method == method && cell.path == path_name)
          s.points.emplace_back(cell.speed, cell.mean_hausdorff);
      std::sort(s.points.begin(), s.points.end(),
                [](const auto& a, const auto& b) { return a.x() < b.x(); });
      chart.push_back(std::move(s));
    }
    write_line_chart_svg((fs::path(out_dir) / ("hausdorff_" + path_name + ".svg")).string(),
                         cfg.eval.speeds, chart, "speed [m/s]", "hausdorff [m]");

    std::vector<SvgSeries> overlay;
    overlay.push_back({path_polyline(builtin_path(path_name)), "#000000", "desired"});
    for (const FollowCell& cell : report.cells) {
      if (cell.path != path_name || cell.speed != cfg.eval.speeds.back()) continue;
      const auto rows =
          ExecutionTrace::read_csv((fs::path(out_dir) / cell.trace_files[0]).string());
      overlay.push_back({trace_polyline(rows),
                         cell.method == "ikd" ? "#d62728" : "#1f77b4", cell.method});
    }
    write_overlay_svg((fs::path(out_dir) / ("traces_" + path_name + ".svg")).string(),
                      overlay);
  }
  return report;
}

void write_follow_report_csv(const std::string& path, const FollowReport& report) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "method,path,speed,mean_hausdorff,hausdorff_rollouts,completed,max_speed\n";
  for (const FollowCell& c : report.cells) {
    f << c.method << ',' << c.path << ',' << c.speed << ',' << c.mean_hausdorff << ',';
    for (std::size_t i = 0; i < c.hausdorff.size(); ++i) {
      if (i > 0) f << ';';
      f << c.hausdorff[i];
    }
    int completed = 0;
    for (bool b : c.completed) completed += b ? 1 : 0;
    f << ',' << completed << ',' << c.max_speed << "\n";
  }
}

FollowReport recompute_follow_report(const std::string& run_dir) {
  std::ifstream mf(fs::path(run_dir) / "run_manifest.json");
  if (!mf) throw IoError("missing run_manifest.json in " + run_dir);
  json manifest;
  mf >> manifest;
  if (manifest.value("kind", "") != "follow")
    throw IoError("not a path-following run directory: " + run_dir);
  const double step = manifest.at("sample_step").get<double>();
  FollowReport report;
  for (const json& jc : manifest.at("cells")) {
    FollowCell cell;
    cell.method = jc.at("method").get<std::string>();
    cell.path = jc.at("path").get<std::string>();
    cell.speed = jc.at("speed").get<double>();
    const Polyline desired = path_polyline(builtin_path(cell.path));
    for (const json& tf : jc.at("traces")) {
      const auto rows =
          ExecutionTrace::read_csv((fs::path(run_dir) / tf.get<std::string>()).string());
      cell.trace_files.push_back(tf.get<std::string>());
      cell.hausdorff.push_back(hausdorff_distance(trace_polyline(rows), desired, step));
      for (const TraceRow& r : rows)
        cell.max_speed = std::max(cell.max_speed, std::hypot(r.truth.v_x, r.truth.v_y));
      cell.completed.push_back(true);  // completion is not recomputable from rows alone
    }
    cell.mean_hausdorff =
        std::accumulate(cell.hausdorff.begin(), cell.hausdorff.end(), 0.0) /
        static_cast<double>(cell.hausdorff.size());
    report.cells.push_back(std::move(cell));
  }
  return report;
}

ConnectReport eval_connectivity(const FkdModel* fkd, const IkdModel* ikd,
                                const std::string& line_name,
                                const GlobalConfig& cfg,
                                const std::string& out_dir) {
  fs::create_directories(out_dir);
  ConnectReport report;
  const RobotState start = connectivity_start();
  const RobotState goal = connectivity_goal();

  if (fkd != nullptr) {
    // Standalone solve from rest for the per-n cost table.
    std::vector<RobotState> rest_history(fkd->spec.steps_per_window(), start);
    const SquashMap squash = SquashMap::control_bounds(cfg.sim.v_max, cfg.sim.psi_max);
    const ConnectivitySolution sol = solve_optimal_connectivity(
        *fkd, rest_history, goal, cfg.solver.alpha, cfg.solver.n_min,
        cfg.solver.n_max, cfg.solver.conn_weights, squash, cfg.solver.lm);
    write_cost_table_csv((fs::path(out_dir) / "cost_table.csv").string(), sol.table);

    ClosedLoopSetup setup;
    setup.sim = sim_with_noise(cfg);
    setup.runtime = runtime_for(cfg, false, cfg.runtime.v_desired);
    setup.fkd = fkd;
    setup.fkd_cfg = {cfg.solver.lm, cfg.solver.path_weights, cfg.solver.conn_weights};
    setup.fkd_cfg.lm.max_iters = cfg.solver.runtime_max_iters;
    setup.objective = ConnectObjective{goal,
                                       cfg.solver.alpha,
                                       cfg.solver.n_min,
                                       cfg.solver.n_max,
                                       cfg.eval.goal_pos_tol,
                                       cfg.eval.goal_speed_tol};
    setup.start = start;
    setup.duration = cfg.eval.goal_timeout;
    setup.seed = cfg.eval.seed ^ fnv64("connect_optim_fkd");
    const ExecutionTrace trace = run_closed_loop(setup);
    ConnectArm arm;
    arm.method = "optim_fkd";
    arm.reached = trace.goal_reached;
    arm.time_to_goal = trace.time_to_goal;
    arm.max_speed = trace.max_speed;
    arm.trace_file = "trace_connect_optim_fkd.csv";
    trace.write_csv((fs::path(out_dir) / arm.trace_file).string());
    report.arms.push_back(arm);
  }

  if (ikd != nullptr) {
    const PathMap line = builtin_path(line_name);
    const std::vector<double> speeds =
        line_speed_profile(line, cfg.eval.line_v_cap, cfg.eval.line_accel, cfg.sim.mu_g);
    ClosedLoopSetup setup;
    setup.sim = sim_with_noise(cfg);
    setup.runtime = runtime_for(cfg, true, cfg.eval.line_v_cap);
    setup.ikd = ikd;
    setup.objective = LineObjective{line, speeds, goal, cfg.eval.goal_pos_tol,
                                    cfg.eval.goal_speed_tol};
    setup.start = start;
    setup.duration = cfg.eval.goal_timeout;
    setup.seed = cfg.eval.seed ^ fnv64("connect_ikd");
    const ExecutionTrace trace = run_closed_loop(setup);
    ConnectArm arm;
    arm.method = "ikd";
    arm.reached = trace.goal_reached;
    arm.time_to_goal = trace.time_to_goal;
    arm.max_speed = trace.max_speed;
    arm.trace_file = "trace_connect_ikd.csv";
    trace.write_csv((fs::path(out_dir) / arm.trace_file).string());
    report.arms.push_back(arm);
  }

  write_connect_report_csv((fs::path(out_dir) / "report.csv").string(), report);

  std::vector<SvgSeries> overlay;
  overlay.push_back({path_polyline(builtin_path(line_name)), "#bcbd22", "racing line"});
  for (const ConnectArm& arm : report.arms) {
    const auto rows =
        ExecutionTrace::read_csv((fs::path(out_dir) / arm.trace_file).string());
    overlay.push_back({trace_polyline(rows),
                       arm.method == "ikd" ? "#d62728" : "#1f77b4", arm.method});
  }
  write_overlay_svg((fs::path(out_dir) / "traces_connect.svg").string(), overlay);
  return report;
}

void write_connect_report_csv(const std::string& path, const ConnectReport& report) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "method,reached,time_to_goal,max_speed\n";
  for (const ConnectArm& a : report.arms)
    f << a.method << ',' << (a.reached ? 1 : 0) << ',' << a.time_to_goal << ','
      << a.max_speed << "\n";
}

// --- svg ---------------------------------------------------------------------

namespace {

struct Box {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  void grow(const Polyline& pts) {
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x());
      y0 = std::min(y0, p.y());
      x1 = std::max(x1, p.x());
      y1 = std::max(y1, p.y());
    }
  }
};

std::string svg_polyline(const Polyline& pts, const Box& box, double w, double h,
                         double margin, const std::string& color) {
  const double sx = (w - 2 * margin) / std::max(1e-9, box.x1 - box.x0);
  const double sy = (h - 2 * margin) / std::max(1e-9, box.y1 - box.y0);
  const double s = std::min(sx, sy);
  std::string d = "<polyline fill=\"none\" stroke=\"" + color +
                  "\" stroke-width=\"1.5\" points=\"";
  char buf[64];
  for (const auto& p : pts) {
    const double px = margin + (p.x() - box.x0) * s;
    const double py = h - margin - (p.y() - box.y0) * s;
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px, py);
    d += buf;
  }
  d += "\"/>\n";
  return d;
}

}  // namespace

void write_overlay_svg(const std::string& path, const std::vector<SvgSeries>& series) {
  const double w = 760, h = 560, margin = 40;
  Box box;
  bool first = true;
  for (const SvgSeries& s : series) {
    if (s.points.empty()) continue;
    if (first) {
      box.x0 = box.x1 = s.points[0].x();
      box.y0 = box.y1 = s.points[0].y();
      first = false;
    }
    box.grow(s.points);
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
    << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double ly = 20;
  for (const SvgSeries& s : series) {
    if (!s.points.empty()) f << svg_polyline(s.points, box, w, h, margin, s.color);
    f << "<text x=\"12\" y=\"" << ly << "\" fill=\"" << s.color
      << "\" font-size=\"13\">" << s.label << "</text>\n";
    ly += 16;
  }
  f << "</svg>\n";
}

void write_line_chart_svg(const std::string& path, const std::vector<double>& x,
                          const std::vector<SvgSeries>& series,
                          const std::string& x_label, const std::string& y_label) {
  const double w = 640, h = 420, margin = 50;
  Box box;
  bool first = true;
  for (const SvgSeries& s : series) {
    if (s.points.empty()) continue;
    if (first) {
      box.x0 = box.x1 = s.points[0].x();
      box.y0 = box.y1 = s.points[0].y();
      first = false;
    }
    box.grow(s.points);
  }
  box.y0 = std::min(box.y0, 0.0);
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
    << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - 10
    << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << margin
    << "\" y2=\"10\" stroke=\"black\"/>\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"12\">%s</text>\n", w / 2,
                h - 10.0, x_label.c_str());
  f << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"12\" y=\"%.0f\" font-size=\"12\" transform=\"rotate(-90 "
                "12,%.0f)\">%s</text>\n",
                h / 2, h / 2, y_label.c_str());
  f << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"10\">%.2f</text>\n",
                margin - 30.0, h - margin, box.y0);
  f << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"20\" font-size=\"10\">%.2f</text>\n",
                margin - 35.0, box.y1);
  f << buf;
  if (!x.empty()) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"10\">%.1f</text>\n",
                  margin, h - margin + 14.0, x.front());
    f << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"10\">%.1f</text>\n",
                  w - 30.0, h - margin + 14.0, x.back());
    f << buf;
  }
  double ly = 24;
  for (const SvgSeries& s : series) {
    if (!s.points.empty()) f << svg_polyline(s.points, box, w, h, margin, s.color);
    f << "<text x=\"" << w - 130 << "\" y=\"" << ly << "\" fill=\"" << s.color
      << "\" font-size=\"13\">" << s.label << "</text>\n";
    ly += 16;
  }
  f << "</svg>\n";
}

}  // namespace optimfkd
