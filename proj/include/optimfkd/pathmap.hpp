#pragma once

#include <vector>

#include "optimfkd/trajectory.hpp"
#include "optimfkd/types.hpp"

namespace optimfkd {

/// Geometric path to follow: ordered poses with cumulative arc length.
struct PathMap {
  std::vector<Pose> points;
  std::vector<double> arc;  // arc[i] = length from points[0] to points[i]
  bool closed = false;

  /// Total length; on closed paths includes the closing segment back to
  /// the first point.
  double length() const;

  static PathMap from_points(std::vector<Pose> pts, bool closed);
};

/// Index of the path position minimizing squared planar distance to the
/// state; ties resolve to the lowest index.
int localize_on_path(const PathMap& path, const RobotState& state);

/// Same, restricted to an arc-length window around a previous index so
/// that self-intersecting paths (figure 8) keep a monotone cursor.
int localize_on_path_windowed(const PathMap& path, const RobotState& state,
                              int hint, double back, double forward);

/// Walks d meters of arc length forward from index s, interpolating
/// between vertices; wraps on closed paths, clamps to the final vertex on
/// open ones.
Pose lookahead(const PathMap& path, int s, double d);

/// Evenly spaced interpolation of buffered estimates at the
/// steps_per_window grid times ending at t_end. Poses interpolate planar
/// with heading wrap. Throws HistoryGapError if the buffer does not span
/// [t_end - t_model, t_end].
std::vector<RobotState> time_sync_states(const std::vector<TimedState>& buffer,
                                         double t_end, const WindowSpec& spec);

void write_pathmap_json(const std::string& path, const PathMap& map);
PathMap read_pathmap_json(const std::string& path, bool closed);

}  // namespace optimfkd
