#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optimfkd/sim.hpp"
#include "optimfkd/types.hpp"

namespace optimfkd {

/// A recorded drive: sample i pairs the state at time i*tau with the
/// control applied over [i*tau, (i+1)*tau). The terminal state repeats the
/// last control so that states and controls stay aligned.
struct TrajectorySample {
  RobotState state;
  Control control;
};

struct Trajectory {
  double tau = 0.05;
  std::vector<TrajectorySample> samples;

  double t_f() const { return (static_cast<double>(samples.size()) - 1.0) * tau; }
  /// Grid index of time t; throws if t is off the tau grid or out of range.
  int index_at(double t) const;
};

/// Window geometry shared by the models: tau-spaced samples, t_model per
/// network call, t_pred per training horizon.
struct WindowSpec {
  double tau = 0.05;
  double t_model = 0.5;
  double t_pred = 3.0;

  int steps_per_window() const;
  int chunks() const;
  void validate() const;  // throws ConfigError if the ratios are not integral
};

/// One supervised window. Everything is local: the past block lives in the
/// body frame of its first state, each target chunk in the body frame of
/// its own chunk-start pose, and the chunk anchors are expressed in the
/// window frame, so a rigid transform of the source trajectory leaves the
/// whole structure unchanged.
struct TrainingWindow {
  std::vector<RobotState> past_states;  // steps_per_window, window frame
  std::vector<Control> controls;        // chunks * steps_per_window
  struct Chunk {
    Pose anchor;                        // chunk-start pose in the window frame
    std::vector<RobotState> targets;    // steps_per_window, in anchor frame
  };
  std::vector<Chunk> chunks;
};

/// Surrogate for manual teleoperation: a smoothed plateau speed sweep on
/// delta plus band-limited sum-of-sinusoids on both channels.
struct SinusoidBand {
  int count = 4;
  double f_lo = 0.05;  // Hz
  double f_hi = 0.35;  // Hz
  double amplitude = 0.6;
};

struct ExcitationConfig {
  std::uint64_t seed = 1;
  double tau = 0.05;
  double duration = 60.0;
  SinusoidBand delta_band{4, 0.05, 0.35, 0.6};
  SinusoidBand psi_band{6, 0.03, 0.50, 2.8};
  // always-on small fast wiggle so the model sees control changes at the
  // command-rate scale, not only slow sweeps
  SinusoidBand delta_jitter{3, 0.5, 1.8, 0.3};
  SinusoidBand psi_jitter{3, 0.5, 2.2, 0.6};
  double smooth_tc = 0.4;
  std::vector<double> speed_plateaus = {0.4, 1.0, 1.6, 2.2, 2.8, 3.3, 0.0,
                                        1.9, 2.5, 1.3};
  double plateau_duration = 6.0;
  // every drive opens with a standstill stretch (drawn from this range) so
  // pull-away from rest is in distribution
  double lead_in_lo = 0.6;
  double lead_in_hi = 1.6;
  // The steering channel is gated by a slow half-sine envelope so that part
  // of every drive is straight cruising; band of the envelope frequency.
  double psi_envelope_f_lo = 0.06;
  double psi_envelope_f_hi = 0.12;
  double v_max = 4.0;
  double psi_max = 4.0;

  void validate() const;
};

std::vector<Control> generate_excitation_controls(const ExcitationConfig& cfg);

Trajectory record_trajectory(const RobotState& start,
                             const std::vector<Control>& controls, double tau,
                             const SimParams& params);

/// k window start times evenly spaced over [t_model, t_f - t_pred], snapped
/// to the tau grid; k = 1 returns the range start. Throws WindowRangeError
/// when the range is empty.
std::vector<double> sample_window_starts(const Trajectory& traj, int k,
                                         const WindowSpec& spec);

TrainingWindow extract_training_window(const Trajectory& traj, double t_a,
                                       const WindowSpec& spec);

// --- dataset on disk -------------------------------------------------------
// A dataset directory holds one JSONL file per trajectory (header line with
// tau and version, then one sample per line) plus manifest.json naming each
// file and its split.

void write_trajectory_jsonl(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_jsonl(const std::string& path);

struct DataConfig {
  std::uint64_t seed = 12345;
  int n_train = 20;
  int n_val = 5;
  double duration = 60.0;
  int k_windows = 64;
  ExcitationConfig excitation;
};

struct Dataset {
  double tau = 0.05;
  std::vector<Trajectory> train;
  std::vector<Trajectory> val;
};

/// Writes n_train + n_val seeded trajectories and the manifest under dir.
/// Byte-deterministic in (cfg, sim).
void generate_dataset(const std::string& dir, const DataConfig& cfg,
                      const SimParams& sim);
Dataset load_dataset(const std::string& dir);

std::vector<TrainingWindow> windows_from_trajectories(
    const std::vector<Trajectory>& trajs, int k, const WindowSpec& spec);

}  // namespace optimfkd
