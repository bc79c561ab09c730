#include "optimfkd/pathmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "optimfkd/errors.hpp"

namespace optimfkd {

using nlohmann::json;

double PathMap::length() const {
  if (points.empty()) return 0.0;
  double len = arc.back();
  if (closed) {
    const double dx = points.front().x - points.back().x;
    const double dy = points.front().y - points.back().y;
    len += std::hypot(dx, dy);
  }
  return len;
}

PathMap PathMap::from_points(std::vector<Pose> pts, bool closed) {
  if (pts.empty()) throw std::invalid_argument("PathMap: empty point list");
  PathMap map;
  map.points = std::move(pts);
  map.closed = closed;
  map.arc.resize(map.points.size());
  map.arc[0] = 0.0;
  for (std::size_t i = 1; i < map.points.size(); ++i) {
    const double d = std::hypot(map.points[i].x - map.points[i - 1].x,
                                map.points[i].y - map.points[i - 1].y);
    if (d <= 0.0) throw std::invalid_argument("PathMap: consecutive points must be distinct");
    map.arc[i] = map.arc[i - 1] + d;
  }
  return map;
}

int localize_on_path(const PathMap& path, const RobotState& state) {
  if (path.points.empty()) throw std::invalid_argument("localize_on_path: empty path");
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const double dx = path.points[i].x - state.x;
    const double dy = path.points[i].y - state.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return best;
}

int localize_on_path_windowed(const PathMap& path, const RobotState& state,
                              int hint, double back, double forward) {
  const int n = static_cast<int>(path.points.size());
  if (hint < 0 || hint >= n) return localize_on_path(path, state);
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  const double s0 = path.arc[hint];
  const double total = path.length();
  for (int i = 0; i < n; ++i) {
    double ds = path.arc[i] - s0;
    if (path.closed) ds = std::remainder(ds, total);  // signed wrap
    if (ds < -back || ds > forward) continue;
    const double dx = path.points[i].x - state.x;
    const double dy = path.points[i].y - state.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best >= 0 ? best : localize_on_path(path, state);
}

Pose lookahead(const PathMap& path, int s, double d) {
  const int n = static_cast<int>(path.points.size());
  if (s < 0 || s >= n) throw std::invalid_argument("lookahead: bad start index");
  if (d < 0.0) throw std::invalid_argument("lookahead: negative distance");
  if (n == 1) return path.points[0];

  double remaining = d;
  if (path.closed) {
    const double total = path.length();
    if (total > 0.0) remaining = std::fmod(remaining, total);
  }
  int i = s;
  while (remaining > 0.0) {
    const int j = (i + 1) % n;
    if (!path.closed && j == 0) return path.points[n - 1];  // clamp at the end
    const double seg = std::hypot(path.points[j].x - path.points[i].x,
                                  path.points[j].y - path.points[i].y);
    if (remaining <= seg) {
      const double f = remaining / seg;
      const Pose& a = path.points[i];
      const Pose& b = path.points[j];
      return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
              wrap_angle(a.theta + f * wrap_angle(b.theta - a.theta))};
    }
    remaining -= seg;
    i = j;
  }
  return path.points[i];
}

namespace detail {

RobotState interp_state(const TimedState& a, const TimedState& b, double t) {
  const double span = b.stamp - a.stamp;
  const double f = span > 0.0 ? (t - a.stamp) / span : 0.0;
  const RobotState& sa = a.state;
  const RobotState& sb = b.state;
  RobotState s;
  s.x = sa.x + f * (sb.x - sa.x);
  s.y = sa.y + f * (sb.y - sa.y);
  s.theta = wrap_angle(sa.theta + f * wrap_angle(sb.theta - sa.theta));
  s.v_x = sa.v_x + f * (sb.v_x - sa.v_x);
  s.v_y = sa.v_y + f * (sb.v_y - sa.v_y);
  s.omega = sa.omega + f * (sb.omega - sa.omega);
  return s;
}

}  // namespace detail

std::vector<RobotState> time_sync_states(const std::vector<TimedState>& buffer,
                                         double t_end, const WindowSpec& spec) {
  const int w = spec.steps_per_window();
  const double t_start = t_end - spec.t_model + spec.tau;
  if (buffer.empty() || buffer.front().stamp > t_start + 1e-9 ||
      buffer.back().stamp < t_end - 1e-9)
    throw HistoryGapError("time_sync_states: buffer does not span the window");
  std::vector<RobotState> out;
  out.reserve(w);
  std::size_t hi = 1;
  for (int k = 0; k < w; ++k) {
    const double t = t_start + k * spec.tau;
    while (hi < buffer.size() && buffer[hi].stamp < t) ++hi;
    if (hi == buffer.size()) {
      out.push_back(buffer.back().state);  // t == back().stamp within tolerance
      continue;
    }
    out.push_back(detail::interp_state(buffer[hi - 1], buffer[hi], t));
  }
  return out;
}

void write_pathmap_json(const std::string& path, const PathMap& map) {
  json arr = json::array();
  for (const Pose& p : map.points) arr.push_back({p.x, p.y, p.theta});
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << arr.dump() << "\n";
}

PathMap read_pathmap_json(const std::string& path, bool closed) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for read: " + path);
  json arr;
  f >> arr;
  std::vector<Pose> pts;
  for (const json& p : arr)
    pts.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  return PathMap::from_points(std::move(pts), closed);
}

}  // namespace optimfkd
