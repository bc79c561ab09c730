#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optimfkd/config.hpp"
#include "optimfkd/errors.hpp"
#include "optimfkd/eval.hpp"
#include "optimfkd/fkd.hpp"
#include "optimfkd/ikd.hpp"
#include "optimfkd/paths_builtin.hpp"
#include "optimfkd/trajectory.hpp"

namespace fs = std::filesystem;
using namespace optimfkd;

namespace {

int cmd_gen_data(const GlobalConfig& cfg, const std::string& out_dir) {
  generate_dataset(out_dir, cfg.data, cfg.sim);
  std::printf("wrote %d train + %d val trajectories to %s\n", cfg.data.n_train,
              cfg.data.n_val, out_dir.c_str());
  return 0;
}

void write_metrics(const std::string& model_path, const TrainReport& report,
                   double open_loop_rmse) {
  nlohmann::json j;
  j["train_loss"] = report.train_loss;
  j["val_loss"] = report.val_loss;
  j["steps"] = report.steps;
  j["open_loop_rmse"] = open_loop_rmse;
  std::ofstream f(model_path + ".metrics.json");
  f << j.dump(2) << "\n";
}

int cmd_train_fkd(const GlobalConfig& cfg, const std::string& data_dir,
                  const std::string& out) {
  const Dataset ds = load_dataset(data_dir);
  TrainReport report;
  const FkdModel model = train_fkd(ds.train, ds.val, cfg.model, cfg.train, &report);
  const double rmse = fkd_open_loop_rmse(model, ds.val, cfg.train.k_windows, 3.0);
  save_fkd(out, model, cfg.train.seed, report.steps);
  write_metrics(out, report, rmse);
  std::printf("fkd model: %s (val loss %.6g -> %.6g over %zu epochs, open-loop rmse %.4f m)\n",
              out.c_str(), report.val_loss.empty() ? 0.0 : report.val_loss.front(),
              report.val_loss.empty() ? 0.0 : report.val_loss.back(),
              report.val_loss.size(), rmse);
  return 0;
}

int cmd_train_ikd(const GlobalConfig& cfg, const std::string& data_dir,
                  const std::string& out) {
  const Dataset ds = load_dataset(data_dir);
  TrainReport report;
  const IkdModel model = train_ikd(ds.train, ds.val, cfg.model, cfg.train,
                                   cfg.sim.v_max, cfg.sim.psi_max, &report);
  save_ikd(out, model, cfg.train.seed, report.steps);
  write_metrics(out, report, 0.0);
  std::printf("ikd model: %s (val loss %.6g -> %.6g over %zu epochs)\n", out.c_str(),
              report.val_loss.empty() ? 0.0 : report.val_loss.front(),
              report.val_loss.empty() ? 0.0 : report.val_loss.back(),
              report.val_loss.size());
  return 0;
}

int cmd_run_follow(GlobalConfig cfg, const std::string& model_path,
                   const std::string& ikd_path, const std::string& path_name,
                   const std::vector<double>& speeds, const std::string& out_dir) {
  FkdModel fkd;
  IkdModel ikd;
  const FkdModel* fkd_ptr = nullptr;
  const IkdModel* ikd_ptr = nullptr;
  if (!model_path.empty()) {
    fkd = load_fkd(model_path);
    fkd_ptr = &fkd;
  }
  if (!ikd_path.empty()) {
    ikd = load_ikd(ikd_path);
    ikd_ptr = &ikd;
  }
  if (fkd_ptr == nullptr && ikd_ptr == nullptr)
    throw ConfigError("run-follow: need --model and/or --ikd");
  if (!path_name.empty()) cfg.eval.paths = {path_name};
  if (!speeds.empty()) cfg.eval.speeds = speeds;
  const FollowReport report = eval_path_following(fkd_ptr, ikd_ptr, cfg, out_dir);
  int failures = 0;
  for (const FollowCell& cell : report.cells) {
    int completed = 0;
    for (bool b : cell.completed) completed += b ? 1 : 0;
    failures += static_cast<int>(cell.completed.size()) - completed;
    std::printf("%-10s %-18s %.1f m/s  mean hausdorff %.3f m  (%d/%zu complete)\n",
                cell.method.c_str(), cell.path.c_str(), cell.speed,
                cell.mean_hausdorff, completed, cell.completed.size());
  }
  std::printf("report: %s\n", (fs::path(out_dir) / "report.csv").string().c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_run_connect(const GlobalConfig& cfg, const std::string& model_path,
                    const std::string& ikd_path, const std::string& line_name,
                    const std::string& out_dir) {
  FkdModel fkd;
  IkdModel ikd;
  const FkdModel* fkd_ptr = nullptr;
  const IkdModel* ikd_ptr = nullptr;
  if (!model_path.empty()) {
    fkd = load_fkd(model_path);
    fkd_ptr = &fkd;
  }
  if (!ikd_path.empty()) {
    ikd = load_ikd(ikd_path);
    ikd_ptr = &ikd;
  }
  if (fkd_ptr == nullptr && ikd_ptr == nullptr)
    throw ConfigError("run-connect: need --model and/or --ikd");
  const ConnectReport report = eval_connectivity(fkd_ptr, ikd_ptr, line_name, cfg, out_dir);
  bool all_reached = true;
  for (const ConnectArm& arm : report.arms) {
    all_reached = all_reached && arm.reached;
    std::printf("%-10s reached=%d  time_to_goal=%.2f s  max_speed=%.2f m/s\n",
                arm.method.c_str(), arm.reached ? 1 : 0, arm.time_to_goal,
                arm.max_speed);
  }
  std::printf("report: %s\n", (fs::path(out_dir) / "report.csv").string().c_str());
  return all_reached ? 0 : 1;
}

int cmd_eval(const std::string& in_dir, const std::string& report_path) {
  const FollowReport report = recompute_follow_report(in_dir);
  write_follow_report_csv(report_path, report);
  std::printf("recomputed %zu cells -> %s\n", report.cells.size(), report_path.c_str());
  return 0;
}

int cmd_paths(const std::string& name, const std::string& out) {
  write_pathmap_json(out, builtin_path(name));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward-kinodynamic optimal control stack"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "global JSON config")->expected(1);

  auto* gen = app.add_subcommand("gen-data", "generate a simulated teleoperation dataset");
  std::string gen_out;
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* tfkd = app.add_subcommand("train-fkd", "train the forward kinodynamic model");
  std::string tfkd_data, tfkd_out;
  tfkd->add_option("--data", tfkd_data, "dataset directory")->required();
  tfkd->add_option("--out", tfkd_out, "model file")->required();

  auto* tikd = app.add_subcommand("train-ikd", "train the inverse kinodynamic baseline");
  std::string tikd_data, tikd_out;
  tikd->add_option("--data", tikd_data, "dataset directory")->required();
  tikd->add_option("--out", tikd_out, "model file")->required();

  auto* follow = app.add_subcommand("run-follow", "path-following experiment");
  std::string f_model, f_ikd, f_path, f_out;
  std::vector<double> f_speeds;
  follow->add_option("--model", f_model, "fkd model file");
  follow->add_option("--ikd", f_ikd, "ikd model file");
  follow->add_option("--path", f_path, "built-in path name");
  follow->add_option("--speeds", f_speeds, "speed grid [m/s]")->delimiter(',');
  follow->add_option("--out", f_out, "output directory")->required();

  auto* connect = app.add_subcommand("run-connect", "optimal connectivity experiment");
  std::string c_model, c_ikd, c_line = "demo_racing_line", c_out;
  connect->add_option("--model", c_model, "fkd model file");
  connect->add_option("--ikd", c_ikd, "ikd model file");
  connect->add_option("--line", c_line, "racing line for the ikd arm");
  connect->add_option("--out", c_out, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "recompute a report from emitted traces");
  std::string e_in, e_report;
  ev->add_option("--in", e_in, "run directory")->required();
  ev->add_option("--report", e_report, "output CSV")->required();

  auto* paths = app.add_subcommand("paths", "emit a built-in path as JSON");
  std::string p_name, p_out;
  paths->add_option("--name", p_name, "path name")->required();
  paths->add_option("--out", p_out, "output JSON file")->required();

  auto* dump = app.add_subcommand("config", "write the default config");
  std::string d_out;
  dump->add_option("--out", d_out, "output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const GlobalConfig cfg = load_config(config_path);
    if (gen->parsed()) return cmd_gen_data(cfg, gen_out);
    if (tfkd->parsed()) return cmd_train_fkd(cfg, tfkd_data, tfkd_out);
    if (tikd->parsed()) return cmd_train_ikd(cfg, tikd_data, tikd_out);
    if (follow->parsed())
      return cmd_run_follow(cfg, f_model, f_ikd, f_path, f_speeds, f_out);
    if (connect->parsed()) return cmd_run_connect(cfg, c_model, c_ikd, c_line, c_out);
    if (ev->parsed()) return cmd_eval(e_in, e_report);
    if (paths->parsed()) return cmd_paths(p_name, p_out);
    if (dump->parsed()) {
      write_config_json(d_out, cfg);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
