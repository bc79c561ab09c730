#pragma once

#include <string>
#include <vector>

#include "optimfkd/config.hpp"
#include "optimfkd/fkd.hpp"
#include "optimfkd/ikd.hpp"
#include "optimfkd/metrics.hpp"
#include "optimfkd/runtime.hpp"

namespace optimfkd {

struct FollowCell {
  std::string method;  // "optim_fkd" | "ikd"
  std::string path;
  double speed = 0.0;
  std::vector<double> hausdorff;      // one per rollout
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> trace_files;
  std::vector<bool> completed;        // full traversal before the cap
  double mean_hausdorff = 0.0;
  double max_speed = 0.0;
};

struct FollowReport {
  std::vector<FollowCell> cells;
};

/// Experiment 1: for each (method, path, speed) cell run `rollouts` seeded
/// closed-loop traversals, compute the Hausdorff distance of each executed
/// path against the desired path, and write traces, report CSV, manifest
/// and SVG overlays under out_dir.
FollowReport eval_path_following(const FkdModel* fkd, const IkdModel* ikd,
                                 const GlobalConfig& cfg,
                                 const std::string& out_dir);

void write_follow_report_csv(const std::string& path, const FollowReport& report);

/// Rebuilds the report for a run directory purely from the emitted traces
/// and the run manifest (no hidden state).
FollowReport recompute_follow_report(const std::string& run_dir);

struct ConnectArm {
  std::string method;
  bool reached = false;
  double time_to_goal = -1.0;
  double max_speed = 0.0;
  std::string trace_file;
};

struct ConnectReport {
  std::vector<ConnectArm> arms;
};

/// Experiment 2: the optimizing arm solves the variable-n connectivity
/// problem closed loop; the baseline arm tracks a scripted demonstrator
/// line under a conservative speed profile. The scenario runs from (0,0)
/// heading pi/2 to (-5,0) heading 3pi/2, start and goal at rest.
ConnectReport eval_connectivity(const FkdModel* fkd, const IkdModel* ikd,
                                const std::string& line_name,
                                const GlobalConfig& cfg,
                                const std::string& out_dir);

void write_connect_report_csv(const std::string& path, const ConnectReport& report);

RobotState connectivity_start();
RobotState connectivity_goal();

Polyline trace_polyline(const std::vector<TraceRow>& rows);
Polyline path_polyline(const PathMap& map);

// Minimal self-contained SVG emitters for human inspection.
struct SvgSeries {
  Polyline points;
  std::string color;
  std::string label;
};
void write_overlay_svg(const std::string& path, const std::vector<SvgSeries>& series);
void write_line_chart_svg(const std::string& path, const std::vector<double>& x,
                          const std::vector<SvgSeries>& series,
                          const std::string& x_label, const std::string& y_label);

}  // namespace optimfkd
