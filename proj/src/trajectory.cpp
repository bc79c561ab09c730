#include "optimfkd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "optimfkd/errors.hpp"

namespace optimfkd {

using nlohmann::json;

int Trajectory::index_at(double t) const {
  const long long i = std::llround(t / tau);
  if (std::abs(static_cast<double>(i) * tau - t) > 1e-9)
    throw std::invalid_argument("Trajectory::index_at: time off the tau grid");
  if (i < 0 || i >= static_cast<long long>(samples.size()))
    throw std::out_of_range("Trajectory::index_at: time out of range");
  return static_cast<int>(i);
}

int WindowSpec::steps_per_window() const {
  return static_cast<int>(std::llround(t_model / tau));
}

int WindowSpec::chunks() const {
  return static_cast<int>(std::llround(t_pred / t_model));
}

void WindowSpec::validate() const {
  if (!(tau > 0.0) || !(t_model > 0.0) || !(t_pred > 0.0))
    throw ConfigError("WindowSpec: durations must be positive");
  if (std::abs(steps_per_window() * tau - t_model) > 1e-9)
    throw ConfigError("WindowSpec: t_model must be a multiple of tau");
  if (std::abs(chunks() * t_model - t_pred) > 1e-9)
    throw ConfigError("WindowSpec: t_pred must be a multiple of t_model");
}

void ExcitationConfig::validate() const {
  if (!(tau > 0.0) || !(duration > 0.0))
    throw ConfigError("ExcitationConfig: tau and duration must be positive");
  if (delta_band.f_lo <= 0.0 || psi_band.f_lo <= 0.0 ||
      delta_band.f_hi < delta_band.f_lo || psi_band.f_hi < psi_band.f_lo)
    throw ConfigError("ExcitationConfig: bad frequency band");
  if (speed_plateaus.empty() || plateau_duration <= 0.0)
    throw ConfigError("ExcitationConfig: empty speed sweep");
  if (v_max <= 0.0 || psi_max <= 0.0)
    throw ConfigError("ExcitationConfig: bad control bounds");
}

namespace {

struct Sinusoid {
  double a, f, phase;
};

std::vector<Sinusoid> draw_sinusoids(std::mt19937_64& rng, const SinusoidBand& band) {
  std::uniform_real_distribution<double> uf(band.f_lo, band.f_hi);
  std::uniform_real_distribution<double> up(0.0, 2.0 * M_PI);
  std::vector<Sinusoid> out;
  const double a = band.count > 0 ? band.amplitude / band.count : 0.0;
  for (int i = 0; i < band.count; ++i) {
    const double f = uf(rng);
    const double p = up(rng);
    out.push_back({a, f, p});
  }
  return out;
}

double sum_sinusoids(const std::vector<Sinusoid>& comps, double t) {
  double v = 0.0;
  for (const Sinusoid& s : comps) v += s.a * std::sin(2.0 * M_PI * s.f * t + s.phase);
  return v;
}

}  // namespace

std::vector<Control> generate_excitation_controls(const ExcitationConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> plateaus = cfg.speed_plateaus;
  std::shuffle(plateaus.begin(), plateaus.end(), rng);
  const std::vector<Sinusoid> delta_comps = draw_sinusoids(rng, cfg.delta_band);
  const std::vector<Sinusoid> psi_comps = draw_sinusoids(rng, cfg.psi_band);
  const std::vector<Sinusoid> delta_fast = draw_sinusoids(rng, cfg.delta_jitter);
  const std::vector<Sinusoid> psi_fast = draw_sinusoids(rng, cfg.psi_jitter);
  std::uniform_real_distribution<double> uf(cfg.psi_envelope_f_lo, cfg.psi_envelope_f_hi);
  std::uniform_real_distribution<double> up(0.0, 2.0 * M_PI);
  const double env_f = uf(rng);
  const double env_phase = up(rng);
  double lead_in = 0.0;
  if (cfg.lead_in_hi > 0.0) {
    std::uniform_real_distribution<double> ul(cfg.lead_in_lo, cfg.lead_in_hi);
    lead_in = ul(rng);
  }

  const int n = static_cast<int>(std::llround(cfg.duration / cfg.tau));
  std::vector<Control> out;
  out.reserve(n);
  double smoothed = lead_in > 0.0 ? 0.0 : plateaus.front();
  for (int i = 0; i < n; ++i) {
    const double t = i * cfg.tau - lead_in;
    if (t < 0.0) {
      out.push_back(Control{0.0, 0.0});
      continue;
    }
    const auto slot = static_cast<std::size_t>(t / cfg.plateau_duration);
    const double target = plateaus[slot % plateaus.size()];
    smoothed += (cfg.tau / cfg.smooth_tc) * (target - smoothed);
    // half of every drive is straight cruising, half active steering
    const double envelope =
        std::max(0.0, std::sin(2.0 * M_PI * env_f * t + env_phase));
    Control u;
    u.delta = std::clamp(smoothed + sum_sinusoids(delta_comps, t) +
                             sum_sinusoids(delta_fast, t),
                         0.0, cfg.v_max);
    u.psi = std::clamp(envelope * sum_sinusoids(psi_comps, t) +
                           sum_sinusoids(psi_fast, t),
                       -cfg.psi_max, cfg.psi_max);
    out.push_back(u);
  }
  return out;
}

Trajectory record_trajectory(const RobotState& start,
                             const std::vector<Control>& controls, double tau,
                             const SimParams& params) {
  if (controls.empty())
    throw std::invalid_argument("record_trajectory: controls must be non-empty");
  Trajectory traj;
  traj.tau = tau;
  traj.samples.reserve(controls.size() + 1);
  const std::vector<RobotState> states = sim_rollout(start, controls, tau, params);
  RobotState s = start;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    traj.samples.push_back({s, controls[i]});
    s = states[i];
  }
  traj.samples.push_back({s, controls.back()});
  return traj;
}

std::vector<double> sample_window_starts(const Trajectory& traj, int k,
                                         const WindowSpec& spec) {
  spec.validate();
  if (k < 1) throw std::invalid_argument("sample_window_starts: k must be >= 1");
  const double lo = spec.t_model;
  const double hi = traj.t_f() - spec.t_pred;
  if (hi < lo - 1e-9)
    throw WindowRangeError("sample_window_starts: trajectory shorter than t_model + t_pred");
  std::vector<double> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const double t = k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (k - 1);
    out.push_back(std::llround(t / spec.tau) * spec.tau);
  }
  return out;
}

TrainingWindow extract_training_window(const Trajectory& traj, double t_a,
                                       const WindowSpec& spec) {
  spec.validate();
  const int spw = spec.steps_per_window();
  const int n_chunks = spec.chunks();
  const int a = traj.index_at(t_a);
  if (t_a < spec.t_model - 1e-9 || t_a > traj.t_f() - spec.t_pred + 1e-9)
    throw WindowRangeError("extract_training_window: t_a outside valid range");

  TrainingWindow w;
  // Past block: the spw states ending at t_a, framed on its first state.
  const Pose frame = traj.samples[a - spw + 1].state.pose();
  w.past_states.reserve(spw);
  for (int j = 0; j < spw; ++j)
    w.past_states.push_back(relative_state(frame, traj.samples[a - spw + 1 + j].state));

  w.controls.reserve(static_cast<std::size_t>(n_chunks) * spw);
  w.chunks.resize(n_chunks);
  for (int i = 0; i < n_chunks; ++i) {
    const int base = a + i * spw;
    const Pose anchor_world = traj.samples[base].state.pose();
    w.chunks[i].anchor = relative_pose(frame, anchor_world);
    w.chunks[i].targets.reserve(spw);
    for (int j = 0; j < spw; ++j) {
      w.controls.push_back(traj.samples[base + j].control);
      w.chunks[i].targets.push_back(
          relative_state(anchor_world, traj.samples[base + j + 1].state));
    }
  }
  return w;
}

// --- dataset io --------------------------------------------------------------

void write_trajectory_jsonl(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << json{{"tau", traj.tau}, {"version", 1}}.dump() << "\n";
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const TrajectorySample& s = traj.samples[i];
    const json line = {{"t", static_cast<double>(i) * traj.tau},
                       {"x", s.state.x},
                       {"y", s.state.y},
                       {"theta", s.state.theta},
                       {"v_x", s.state.v_x},
                       {"v_y", s.state.v_y},
                       {"omega", s.state.omega},
                       {"delta", s.control.delta},
                       {"psi", s.control.psi}};
    f << line.dump() << "\n";
  }
}

Trajectory read_trajectory_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for read: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty trajectory file: " + path);
  const json header = json::parse(line);
  Trajectory traj;
  traj.tau = header.at("tau").get<double>();
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TrajectorySample s;
    s.state.x = j.at("x").get<double>();
    s.state.y = j.at("y").get<double>();
    s.state.theta = j.at("theta").get<double>();
    s.state.v_x = j.at("v_x").get<double>();
    s.state.v_y = j.at("v_y").get<double>();
    s.state.omega = j.at("omega").get<double>();
    s.control.delta = j.at("delta").get<double>();
    s.control.psi = j.at("psi").get<double>();
    traj.samples.push_back(s);
  }
  if (traj.samples.empty()) throw IoError("trajectory has no samples: " + path);
  return traj;
}

namespace {

// splitmix64; decorrelates per-trajectory seeds from the dataset seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void generate_dataset(const std::string& dir, const DataConfig& cfg,
                      const SimParams& sim) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = 1;
  manifest["tau"] = cfg.excitation.tau;
  manifest["k_windows"] = cfg.k_windows;
  manifest["files"] = json::array();
  const int total = cfg.n_train + cfg.n_val;
  for (int i = 0; i < total; ++i) {
    ExcitationConfig ex = cfg.excitation;
    ex.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    ex.duration = cfg.duration;
    ex.v_max = sim.v_max;
    ex.psi_max = sim.psi_max;
    const std::vector<Control> controls = generate_excitation_controls(ex);
    const Trajectory traj = record_trajectory(RobotState{}, controls, ex.tau, sim);
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%03d.jsonl", i);
    write_trajectory_jsonl((fs::path(dir) / name).string(), traj);
    manifest["files"].push_back(
        {{"file", name}, {"split", i < cfg.n_train ? "train" : "val"}});
  }
  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw IoError("cannot write manifest in " + dir);
  mf << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw IoError("missing manifest.json in " + dir);
  json manifest;
  mf >> manifest;
  Dataset ds;
  ds.tau = manifest.at("tau").get<double>();
  for (const json& entry : manifest.at("files")) {
    Trajectory t = read_trajectory_jsonl(
        (fs::path(dir) / entry.at("file").get<std::string>()).string());
    if (entry.at("split").get<std::string>() == "train")
      ds.train.push_back(std::move(t));
    else
      ds.val.push_back(std::move(t));
  }
  return ds;
}

std::vector<TrainingWindow> windows_from_trajectories(
    const std::vector<Trajectory>& trajs, int k, const WindowSpec& spec) {
  std::vector<TrainingWindow> out;
  for (const Trajectory& traj : trajs) {
    for (double t_a : sample_window_starts(traj, k, spec))
      out.push_back(extract_training_window(traj, t_a, spec));
  }
  return out;
}

}  // namespace optimfkd
