#pragma once

#include <string>
#include <vector>

#include "optimfkd/pathmap.hpp"

namespace optimfkd {

/// Analytic benchmark paths at ~0.05 m vertex spacing:
///   rounded_rectangle  6 x 3 m loop with 0.75 m corner radii (closed)
///   figure8            two 1.5 m-radius lobes joined by crossing
///                      tangent chords; one transversal self-intersection
///   straight           20 m straight line (open)
///   demo_racing_line   scripted demonstrator route for the connectivity
///                      task: (0,0) heading pi/2 to (-5,0) heading 3pi/2,
///                      deliberately tighter and longer than necessary
/// Throws std::invalid_argument for unknown names.
PathMap builtin_path(const std::string& name);

std::vector<std::string> builtin_path_names();

/// Per-vertex speed profile for tracking an open line: curvature-limited
/// (lateral acceleration budget), acceleration-limited from rest, tapering
/// to zero at the end, floored at a small crawl speed away from the final
/// meter so tracking can start from rest.
std::vector<double> line_speed_profile(const PathMap& line, double v_cap,
                                       double accel, double lat_acc);

}  // namespace optimfkd
