#include "optimfkd/paths_builtin.hpp"

#include <cmath>
#include <stdexcept>

namespace optimfkd {

namespace {

constexpr double kSpacing = 0.05;

void emit_straight(std::vector<Pose>& pts, double x0, double y0, double x1,
                   double y1) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const double theta = std::atan2(y1 - y0, x1 - x0);
  const int n = std::max(1, static_cast<int>(std::llround(len / kSpacing)));
  for (int k = 0; k < n; ++k) {
    const double f = static_cast<double>(k) / n;
    pts.push_back({x0 + f * (x1 - x0), y0 + f * (y1 - y0), theta});
  }
}

// Arc around (cx, cy): ang0 to ang1 (signed sweep), tangent headings.
void emit_arc(std::vector<Pose>& pts, double cx, double cy, double r,
              double ang0, double ang1) {
  const double sweep = ang1 - ang0;
  const double len = std::abs(sweep) * r;
  const int n = std::max(1, static_cast<int>(std::llround(len / kSpacing)));
  const double tangent_offset = sweep >= 0.0 ? M_PI / 2.0 : -M_PI / 2.0;
  for (int k = 0; k < n; ++k) {
    const double a = ang0 + sweep * static_cast<double>(k) / n;
    pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a),
                   wrap_angle(a + tangent_offset)});
  }
}

PathMap rounded_rectangle() {
  // 6 x 3 m outline, 0.75 m corner radii, counterclockwise from the
  // bottom-left straight.
  const double r = 0.75;
  const double hx = 3.0, hy = 1.5;
  const double sx = hx - r, sy = hy - r;  // corner centers
  std::vector<Pose> pts;
  emit_straight(pts, -sx, -hy, sx, -hy);
  emit_arc(pts, sx, -sy, r, -M_PI / 2.0, 0.0);
  emit_straight(pts, hx, -sy, hx, sy);
  emit_arc(pts, sx, sy, r, 0.0, M_PI / 2.0);
  emit_straight(pts, sx, hy, -sx, hy);
  emit_arc(pts, -sx, sy, r, M_PI / 2.0, M_PI);
  emit_straight(pts, -hx, sy, -hx, -sy);
  emit_arc(pts, -sx, -sy, r, M_PI, 1.5 * M_PI);
  pts.push_back(pts.front());  // close the loop explicitly
  return PathMap::from_points(std::move(pts), true);
}

PathMap figure8() {
  // Two r = 1.5 m lobes centered at (+-d, 0), joined by the internal
  // tangent chords through the origin; the chords cross once, at the
  // origin, which is the path's only self-intersection.
  const double r = 1.5;
  const double d = 2.25;
  const double lt = std::sqrt(d * d - r * r);    // origin-to-touch length
  const double phi = std::asin(r / d);           // chord direction angle
  const double t1x = lt * std::cos(phi), t1y = lt * std::sin(phi);
  const double ang_r = std::atan2(t1y, t1x - d); // touch angle on right lobe

  std::vector<Pose> pts;
  // chord: origin -> upper-right touch point
  emit_straight(pts, 0.0, 0.0, t1x, t1y);
  // right lobe, clockwise around the far side
  emit_arc(pts, d, 0.0, r, ang_r, -ang_r);
  // chord: lower-right touch -> upper-left touch, through the origin
  emit_straight(pts, t1x, -t1y, -t1x, t1y);
  // left lobe, counterclockwise around the far side
  const double ang_l = std::atan2(t1y, -t1x + d);
  emit_arc(pts, -d, 0.0, r, ang_l, 2.0 * M_PI - ang_l);
  // chord back to the origin
  emit_straight(pts, -t1x, -t1y, 0.0, 0.0);
  pts.push_back(pts.front());
  return PathMap::from_points(std::move(pts), true);
}

PathMap straight_line() {
  std::vector<Pose> pts;
  emit_straight(pts, 0.0, 0.0, 20.0, 0.0);
  pts.push_back({20.0, 0.0, 0.0});
  return PathMap::from_points(std::move(pts), false);
}

PathMap demo_racing_line() {
  // Cautious demonstrator route from (0,0) heading pi/2 to (-5,0) heading
  // 3pi/2: climb, two tight 1.2 m quarter turns bridged by a straight,
  // descend. Longer than the direct wide turn and slower through the
  // corners.
  const double r = 1.2;
  std::vector<Pose> pts;
  emit_straight(pts, 0.0, 0.0, 0.0, 1.5);
  emit_arc(pts, -r, 1.5, r, 0.0, M_PI / 2.0);
  emit_straight(pts, -r, 1.5 + r, -5.0 + r, 1.5 + r);
  emit_arc(pts, -5.0 + r, 1.5, r, M_PI / 2.0, M_PI);
  emit_straight(pts, -5.0, 1.5, -5.0, 0.0);
  pts.push_back({-5.0, 0.0, wrap_angle(1.5 * M_PI)});
  return PathMap::from_points(std::move(pts), false);
}

}  // namespace

PathMap builtin_path(const std::string& name) {
  if (name == "rounded_rectangle") return rounded_rectangle();
  if (name == "figure8") return figure8();
  if (name == "straight") return straight_line();
  if (name == "demo_racing_line") return demo_racing_line();
  throw std::invalid_argument("builtin_path: unknown path '" + name + "'");
}

std::vector<std::string> builtin_path_names() {
  return {"rounded_rectangle", "figure8", "straight", "demo_racing_line"};
}

std::vector<double> line_speed_profile(const PathMap& line, double v_cap,
                                       double accel, double lat_acc) {
  const std::size_t n = line.points.size();
  std::vector<double> v(n, v_cap);
  // curvature limit from heading change per arc length
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double ds = line.arc[i + 1] - line.arc[i];
    const double kappa =
        std::abs(wrap_angle(line.points[i + 1].theta - line.points[i].theta)) /
        std::max(ds, 1e-9);
    if (kappa > 1e-9) v[i] = std::min(v[i], std::sqrt(0.85 * lat_acc / kappa));
  }
  v[0] = 0.0;
  v[n - 1] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {  // acceleration-limited forward
    const double ds = line.arc[i] - line.arc[i - 1];
    v[i] = std::min(v[i], std::sqrt(v[i - 1] * v[i - 1] + 2.0 * accel * ds));
  }
  for (std::size_t i = n - 1; i-- > 0;) {  // braking-limited backward
    const double ds = line.arc[i + 1] - line.arc[i];
    v[i] = std::min(v[i], std::sqrt(v[i + 1] * v[i + 1] + 2.0 * accel * ds));
  }
  const double total = line.arc.back();
  for (std::size_t i = 0; i < n; ++i) {
    if (line.arc[i] < total - 1.0) v[i] = std::max(v[i], 0.35);  // crawl floor
  }
  return v;
}

}  // namespace optimfkd
