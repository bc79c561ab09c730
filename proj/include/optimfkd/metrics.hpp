#pragma once

#include <vector>

#include <Eigen/Core>

namespace optimfkd {

using Polyline = std::vector<Eigen::Vector2d>;

/// Resamples a polyline densely along arc length at `step`, endpoints
/// always included.
Polyline resample_polyline(const Polyline& line, double step);

/// Symmetric Hausdorff distance between two polylines, computed over dense
/// resamplings at sample_step; the discretization error is bounded by the
/// step. Single-point inputs are allowed; empty inputs throw.
double hausdorff_distance(const Polyline& a, const Polyline& b,
                          double sample_step = 0.01);

}  // namespace optimfkd
