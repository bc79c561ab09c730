#include <doctest.h>

#include <cmath>
#include <random>

#include "optimfkd/metrics.hpp"
#include "optimfkd/paths_builtin.hpp"

using namespace optimfkd;

namespace {

Polyline square(double shift_x) {
  return {{shift_x + 0.0, 0.0}, {shift_x + 1.0, 0.0}, {shift_x + 1.0, 1.0},
          {shift_x + 0.0, 1.0}, {shift_x + 0.0, 0.0}};
}

Polyline random_polyline(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> ud(-2.0, 2.0);
  Polyline line;
  line.emplace_back(ud(rng), ud(rng));
  for (int i = 1; i < n; ++i) {
    const Eigen::Vector2d step(0.3 * ud(rng), 0.3 * ud(rng));
    line.push_back(line.back() + step);
  }
  return line;
}

// Independent brute-force oracle over a much finer sampling.
double brute_hausdorff(const Polyline& a, const Polyline& b, double step) {
  auto densify = [step](const Polyline& line) {
    Polyline out;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const double len = (line[i + 1] - line[i]).norm();
      const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
      for (int k = 0; k < n; ++k)
        out.push_back(line[i] + (static_cast<double>(k) / n) * (line[i + 1] - line[i]));
    }
    out.push_back(line.back());
    return out;
  };
  const Polyline da = densify(a);
  const Polyline db = densify(b);
  double h = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    const Polyline& from = dir == 0 ? da : db;
    const Polyline& to = dir == 0 ? db : da;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, (p - q).norm());
      h = std::max(h, best);
    }
  }
  return h;
}

}  // namespace

TEST_CASE("hausdorff of identical polylines is zero") {
  const Polyline a = square(0.0);
  CHECK(hausdorff_distance(a, a, 0.01) == doctest::Approx(0.0));
}

TEST_CASE("hausdorff of two points is their distance") {
  const Polyline a = {{0.0, 0.0}};
  const Polyline b = {{3.0, 4.0}};
  CHECK(hausdorff_distance(a, b, 0.01) == doctest::Approx(5.0));
  CHECK_THROWS_AS(hausdorff_distance({}, b, 0.01), std::invalid_argument);
}

TEST_CASE("hausdorff of a shifted unit square is the shift") {
  const double h = hausdorff_distance(square(0.0), square(0.3), 0.001);
  CHECK(std::abs(h - 0.3) <= 0.002);
}

TEST_CASE("hausdorff is symmetric and stable under refinement") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 6; ++trial) {
    const Polyline a = random_polyline(rng, 12);
    const Polyline b = random_polyline(rng, 9);
    const double ab = hausdorff_distance(a, b, 0.01);
    const double ba = hausdorff_distance(b, a, 0.01);
    CHECK(ab == doctest::Approx(ba));
    const double fine = hausdorff_distance(a, b, 0.005);
    CHECK(std::abs(ab - fine) < 0.01);
  }
}

TEST_CASE("hausdorff matches the dense brute-force oracle") {
  std::mt19937_64 rng(77);
  const double step = 0.01;
  for (int trial = 0; trial < 8; ++trial) {
    const Polyline a = random_polyline(rng, 10);
    const Polyline b = random_polyline(rng, 14);
    const double fast = hausdorff_distance(a, b, step);
    const double oracle = brute_hausdorff(a, b, step / 2.0);
    CHECK(std::abs(fast - oracle) <= 2.0 * step);
  }
}

TEST_CASE("rounded rectangle is a closed loop with near-uniform spacing") {
  const PathMap path = builtin_path("rounded_rectangle");
  CHECK(path.closed);
  const Pose& first = path.points.front();
  const Pose& last = path.points.back();
  CHECK(std::hypot(first.x - last.x, first.y - last.y) < 1e-9);
  for (std::size_t i = 1; i + 1 < path.points.size(); ++i) {
    const double d = path.arc[i] - path.arc[i - 1];
    CHECK(d >= 0.045);
    CHECK(d <= 0.055);
  }
  // 6 x 3 outline
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (const Pose& p : path.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  CHECK(max_x - min_x == doctest::Approx(6.0).epsilon(0.01));
  CHECK(max_y - min_y == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("figure8 self-intersects exactly once") {
  const PathMap path = builtin_path("figure8");
  CHECK(path.closed);
  // count distinct crossing locations between non-adjacent segments
  const auto& pts = path.points;
  const int n = static_cast<int>(pts.size()) - 1;  // last point repeats the first
  std::vector<Eigen::Vector2d> crossings;
  auto seg_intersect = [](const Pose& a, const Pose& b, const Pose& c, const Pose& d,
                          Eigen::Vector2d* out) {
    const double rx = b.x - a.x, ry = b.y - a.y;
    const double sx = d.x - c.x, sy = d.y - c.y;
    const double denom = rx * sy - ry * sx;
    if (std::abs(denom) < 1e-14) return false;
    const double t = ((c.x - a.x) * sy - (c.y - a.y) * sx) / denom;
    const double u = ((c.x - a.x) * ry - (c.y - a.y) * rx) / denom;
    if (t < -1e-9 || t > 1.0 + 1e-9 || u < -1e-9 || u > 1.0 + 1e-9) return false;
    *out = Eigen::Vector2d(a.x + t * rx, a.y + t * ry);
    return true;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the loop closure
      Eigen::Vector2d p;
      if (seg_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1], &p)) {
        bool known = false;
        for (const auto& q : crossings)
          if ((q - p).norm() < 0.02) known = true;
        if (!known) crossings.push_back(p);
      }
    }
  }
  REQUIRE(crossings.size() == 1);
  CHECK(crossings[0].norm() < 0.01);  // crosses at the origin

  // uniform spacing audit
  for (std::size_t i = 1; i + 1 < path.points.size(); ++i) {
    const double d = path.arc[i] - path.arc[i - 1];
    CHECK(d >= 0.045);
    CHECK(d <= 0.055);
  }
}

TEST_CASE("demo racing line endpoints match the connectivity scenario") {
  const PathMap line = builtin_path("demo_racing_line");
  CHECK(!line.closed);
  CHECK(line.points.front().x == doctest::Approx(0.0));
  CHECK(line.points.front().y == doctest::Approx(0.0));
  CHECK(line.points.front().theta == doctest::Approx(M_PI / 2));
  CHECK(line.points.back().x == doctest::Approx(-5.0));
  CHECK(line.points.back().y == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(wrap_angle(line.points.back().theta - 1.5 * M_PI)) < 1e-9);
  // deliberately longer than the direct 2.5 m-radius half circle
  CHECK(line.length() > M_PI * 2.5 + 0.5);
}

TEST_CASE("unknown path name is rejected") {
  CHECK_THROWS_AS(builtin_path("moebius"), std::invalid_argument);
}

TEST_CASE("line speed profile tapers to rest and respects curvature") {
  const PathMap line = builtin_path("demo_racing_line");
  const auto v = line_speed_profile(line, 2.0, 2.0, 4.0);
  REQUIRE(v.size() == line.points.size());
  CHECK(v.front() == doctest::Approx(0.35));  // crawl floor so tracking can start
  CHECK(v.back() == doctest::Approx(0.0));
  double vmax = 0.0;
  for (double s : v) vmax = std::max(vmax, s);
  CHECK(vmax <= 2.0 + 1e-9);
  // tight 1.2 m corners cap the speed below sqrt(0.85 * 4 * 1.2)
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (line.arc[i] > 1.6 && line.arc[i] < 2.5)  // inside the first corner
      CHECK(v[i] <= std::sqrt(0.85 * 4.0 * 1.2) + 0.05);
  }
}
