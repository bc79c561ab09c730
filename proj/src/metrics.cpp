#include "optimfkd/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace optimfkd {

Polyline resample_polyline(const Polyline& line, double step) {
  if (line.empty()) throw std::invalid_argument("resample_polyline: empty polyline");
  if (!(step > 0.0)) throw std::invalid_argument("resample_polyline: step must be positive");
  Polyline out;
  out.push_back(line.front());
  if (line.size() == 1) return out;
  double carry = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Eigen::Vector2d seg = line[i] - line[i - 1];
    const double len = seg.norm();
    if (len <= 0.0) continue;
    double s = step - carry;
    while (s <= len) {
      out.push_back(line[i - 1] + (s / len) * seg);
      s += step;
    }
    carry = len - (s - step);
  }
  if ((out.back() - line.back()).norm() > 1e-12) out.push_back(line.back());
  return out;
}

namespace {

double directed_hausdorff(const Polyline& from, const Polyline& to) {
  double worst = 0.0;
  for (const Eigen::Vector2d& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::Vector2d& q : to) {
      const double dx = p.x() - q.x();
      const double dy = p.y() - q.y();
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) best = d2;
    }
    if (best > worst) worst = best;
  }
  return std::sqrt(worst);
}

}  // namespace

double hausdorff_distance(const Polyline& a, const Polyline& b,
                          double sample_step) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("hausdorff_distance: empty polyline");
  const Polyline sa = resample_polyline(a, sample_step);
  const Polyline sb = resample_polyline(b, sample_step);
  return std::max(directed_hausdorff(sa, sb), directed_hausdorff(sb, sa));
}

}  // namespace optimfkd
