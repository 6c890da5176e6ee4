// Command-line front end: single trials, confinement sweeps, the planning
// time benchmark and map/field dumps.

#include <filesystem>
#include <fstream>
#include <atomic>
#include <thread>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cnav/config.hpp"
#include "cnav/sim.hpp"

namespace fs = std::filesystem;
using namespace cnav;
using nlohmann::json;

namespace {

uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t path_hash(const std::vector<Configuration>& path) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& c : path) {
    const double vals[5] = {c.x, c.y, c.z, c.phi, c.s};
    h = fnv1a(vals, sizeof(vals), h);
  }
  return h;
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) return line.substr(pos + 2);
    }
  return "unknown";
}

void write_executed_csv(const fs::path& file, const TrialReport& report, double control_dt,
                        double h0) {
  std::ofstream os(file);
  os.precision(10);
  os << "t,x,y,z,phi,s,total_height\n";
  double t = 0.0;
  for (const auto& c : report.executed_path) {
    os << t << "," << c.x << "," << c.y << "," << c.z << "," << c.phi << "," << c.s << ","
       << c.z + h0 << "\n";
    t += control_dt;
  }
}

void write_plan_csv(const fs::path& file, const TrialReport& report) {
  std::ofstream os(file);
  os.precision(10);
  os << "t,x,y,z,phi,s,min_clearance\n";
  for (int i = 0; i < report.last_plan.size(); ++i) {
    const auto& c = report.last_plan.samples[i];
    os << i * report.last_plan.dt << "," << c.x << "," << c.y << "," << c.z << "," << c.phi
       << "," << c.s << ","
       << (i < int(report.last_plan_clearance.size()) ? report.last_plan_clearance[i] : 0.0)
       << "\n";
  }
}

json summary_json(const RunConfig& cfg, const TrialReport& r) {
  json s;
  s["task"] = to_string(cfg.trial.task);
  s["param"] = cfg.trial.param;
  s["seed"] = cfg.trial.seed;
  s["success"] = r.success;
  s["failure_reason"] = r.failure_reason;
  s["collisions"] = r.collisions;
  s["min_margin"] = r.min_margin;
  s["adaptation_span_pct"] = r.adaptation_span;
  s["adaptation_lower_pct"] = r.adaptation_lower;
  s["adaptation_raise_pct"] = r.adaptation_raise;
  s["min_span"] = r.min_span;
  s["min_total_height"] = r.min_total_height;
  s["max_z"] = r.max_z;
  s["plans"] = r.plans;
  s["max_plan_time_s"] = r.max_plan_time;
  s["max_sdf_time_s"] = r.max_sdf_time;
  s["total_time_s"] = r.total_time;
  s["path_hash"] = path_hash(r.executed_path);
  return s;
}

MultiElevationMap map_after_warmup(const TrialSpec& spec, int scans) {
  const World world = make_world(spec.task, spec.param);
  Configuration state;
  state.x = 0.0;
  state.y = spec.waypoints.empty() ? 0.0 : spec.waypoints.front().y();
  state.z = std::clamp(spec.model.z_nom, spec.model.z_min, spec.model.z_max);
  state.s = std::clamp(spec.model.s_nom, spec.model.s_min, spec.model.s_max);
  MultiElevationMap map(spec.mapping, state.x, state.y);
  uint64_t sc = 0;
  for (int i = 0; i < scans; ++i) {
    const double ref = state.z + spec.body_ref_frac * spec.model.h0;
    map.ingest_scan(render_depth(world, spec.sensor, state, spec.seed * 1000003ULL + sc++), ref);
    if (spec.use_top_sensor)
      map.ingest_scan(render_depth(world, spec.sensor_top, state, spec.seed * 1000003ULL + sc++),
                      ref);
  }
  return map;
}

struct SweepRow {
  double param = 0.0;
  double success_rate = 0.0;
  double mean_adaptation = 0.0;
  double mean_plan_time = 0.0;
  double mean_sdf_time = 0.0;
  double max_plan_time = 0.0;
};

double headline_adaptation(Task task, const TrialReport& r) {
  switch (task) {
    case Task::ThinGap:
    case Task::Corridor: return r.adaptation_span;
    case Task::LowOverhang: return r.adaptation_lower;
    case Task::HighClearance: return r.adaptation_raise;
    case Task::ClearanceBlock:
      return std::max(r.adaptation_raise, r.adaptation_lower);
    default: return std::max({r.adaptation_span, r.adaptation_lower, r.adaptation_raise});
  }
}

std::vector<SweepRow> run_sweep(const RunConfig& base, double pmin, double pmax, double step,
                                int trials, int workers = 0) {
  std::vector<double> levels;
  if (step > 0.0)
    for (double p = pmin; p <= pmax + 1e-9; p += step) levels.push_back(p);

  // fixed-size worker pool; results land by index so assembly order is
  // independent of scheduling
  const size_t total = levels.size() * size_t(trials);
  std::vector<TrialReport> reports(total);
  std::atomic<size_t> next{0};
  if (workers <= 0)
    workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  auto work = [&] {
    for (size_t k = next.fetch_add(1); k < total; k = next.fetch_add(1)) {
      const double p = levels[k / trials];
      const int s = int(k % trials);
      TrialSpec spec = default_trial_spec(base.trial.task, p);
      spec.planner = base.trial.planner;
      spec.seed = base.trial.seed + s;
      reports[k] = run_trial(spec);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  std::vector<SweepRow> rows;
  size_t k = 0;
  for (const double p : levels) {
    SweepRow row;
    row.param = p;
    int ok = 0;
    double adapt = 0.0;
    for (int s = 0; s < trials; ++s, ++k) {
      const TrialReport& r = reports[k];
      if (r.success) {
        ++ok;
        adapt += headline_adaptation(base.trial.task, r);
      }
      row.mean_plan_time += r.max_plan_time;
      row.mean_sdf_time += r.max_sdf_time;
      row.max_plan_time = std::max(row.max_plan_time, r.max_plan_time);
    }
    row.success_rate = trials > 0 ? double(ok) / trials : 0.0;
    row.mean_adaptation = ok > 0 ? adapt / ok : 0.0;
    row.mean_plan_time /= std::max(trials, 1);
    row.mean_sdf_time /= std::max(trials, 1);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posture-adaptive navigation through confined spaces"};
  app.require_subcommand(1);

  std::string config_path, task_name, out_dir;
  double param = -1.0;
  int64_t seed = -1;
  int trials = 10;
  double pmin = 0.0, pmax = 0.0, pstep = 0.0;
  double slice_z = 0.1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--task", task_name, "thin-gap|low-overhang|high-clearance|clearance-block|course|corridor");
    cmd->add_option("--param", param, "confinement parameter, m");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  auto* run = app.add_subcommand("run", "run one trial and write its artifacts");
  add_common(run);
  auto* sweep = app.add_subcommand("sweep", "success-rate sweep over a parameter range");
  add_common(sweep);
  sweep->add_option("--param-min", pmin, "first level")->required();
  sweep->add_option("--param-max", pmax, "last level")->required();
  sweep->add_option("--step", pstep, "level spacing")->required();
  sweep->add_option("--trials", trials, "seeds per level");
  auto* bench = app.add_subcommand("bench", "SDF build and planning time benchmark");
  add_common(bench);
  auto* dump_map = app.add_subcommand("dump-map", "write the elevation map after warmup scans");
  add_common(dump_map);
  auto* dump_sdf = app.add_subcommand("dump-sdf", "write a horizontal SDF slice as CSV");
  add_common(dump_sdf);
  dump_sdf->add_option("--z", slice_z, "slice height, m");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = load_config_file(config_path);
      if (!task_name.empty() || param >= 0.0) {
        const Task t = task_name.empty() ? cfg.trial.task : task_from_string(task_name);
        const double p = param >= 0.0 ? param : cfg.trial.param;
        RunConfig fresh = default_config(t, p);
        fresh.trial.planner = cfg.trial.planner;
        fresh.trial.seed = cfg.trial.seed;
        cfg = fresh;
      }
    } else {
      const Task t = task_name.empty() ? Task::ThinGap : task_from_string(task_name);
      cfg = default_config(t, param >= 0.0 ? param : 0.7);
    }
    if (seed >= 0) cfg.trial.seed = uint64_t(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) {
      const TrialReport report = run_trial(cfg.trial);
      const json s = summary_json(cfg, report);
      std::cout << s.dump(2) << "\n";
      if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream(fs::path(cfg.out_dir) / "summary.json") << s.dump(2) << "\n";
        std::ofstream(fs::path(cfg.out_dir) / "config.json") << serialize_config(cfg) << "\n";
        write_executed_csv(fs::path(cfg.out_dir) / "trajectory.csv", report,
                           cfg.trial.gains.control_dt, cfg.trial.model.h0);
        write_plan_csv(fs::path(cfg.out_dir) / "plan.csv", report);
        if (cfg.dump_map) {
          std::ofstream os(fs::path(cfg.out_dir) / "map.dump");
          map_after_warmup(cfg.trial, cfg.trial.warmup_scans).save(os);
        }
      }
      return report.success ? 0 : 1;
    }

    if (sweep->parsed()) {
      const auto rows = run_sweep(cfg, pmin, pmax, pstep, trials);
      std::ostringstream csv;
      csv << "param,success_rate,mean_adaptation,mean_plan_time,mean_sdf_time,max_plan_time\n";
      csv.precision(6);
      for (const auto& r : rows)
        csv << r.param << "," << r.success_rate << "," << r.mean_adaptation << ","
            << r.mean_plan_time << "," << r.mean_sdf_time << "," << r.max_plan_time << "\n";
      std::cout << csv.str();
      if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream(fs::path(cfg.out_dir) / "sweep.csv") << csv.str();
      }
      return 0;
    }

    if (bench->parsed()) {
      if (task_name.empty()) cfg = default_config(Task::ClearanceBlock, param >= 0.0 ? param : 0.3);
      const World world = make_world(cfg.trial.task, cfg.trial.param);
      const auto map = map_after_warmup(cfg.trial, cfg.trial.warmup_scans);

      constexpr int k = 5;
      double best_sdf = 1e9, mean_sdf = 0.0, best_plan = 1e9, mean_plan = 0.0;
      uint64_t hash = 0;
      for (int i = 0; i < k; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto occ = extrude_occupancy(map, cfg.trial.extrusion);
        const auto sdf = build_sdf(occ);
        const double ts = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        best_sdf = std::min(best_sdf, ts);
        mean_sdf += ts / k;

        Configuration start{0, 0, cfg.trial.model.z_nom, 0, cfg.trial.model.s_nom};
        Configuration goal = start;
        goal.x = 2.0;
        const auto res = plan(start, goal, sdf, cfg.trial.model, cfg.trial.planner);
        best_plan = std::min(best_plan, res.plan_time);
        mean_plan += res.plan_time / k;
        hash = path_hash(res.trajectory.samples);
      }
      json b;
      b["task"] = to_string(cfg.trial.task);
      b["param"] = cfg.trial.param;
      b["grid"] = {map.cells_per_side(), map.cells_per_side(),
                   int(std::round((cfg.trial.extrusion.z_max - cfg.trial.extrusion.z_min) /
                                  cfg.trial.mapping.resolution))};
      b["sdf_build_best_s"] = best_sdf;
      b["sdf_build_mean_s"] = mean_sdf;
      b["plan_best_s"] = best_plan;
      b["plan_mean_s"] = mean_plan;
      b["trajectory_hash"] = hash;
      b["cpu"] = cpu_model();
      std::cout << b.dump(2) << "\n";
      return 0;
    }

    if (dump_map->parsed()) {
      const auto map = map_after_warmup(cfg.trial, cfg.trial.warmup_scans);
      if (cfg.out_dir.empty()) {
        map.save(std::cout);
      } else {
        fs::create_directories(cfg.out_dir);
        std::ofstream os(fs::path(cfg.out_dir) / "map.dump");
        map.save(os);
      }
      return 0;
    }

    if (dump_sdf->parsed()) {
      const auto map = map_after_warmup(cfg.trial, cfg.trial.warmup_scans);
      const auto occ = extrude_occupancy(map, cfg.trial.extrusion);
      const auto sdf = build_sdf(occ);
      const auto& g = sdf.geom();
      const int kz = std::clamp(int((slice_z - g.origin.z()) / g.resolution), 0, g.nz - 1);
      std::ostringstream csv;
      csv.precision(6);
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          if (i) csv << ",";
          csv << sdf.at(i, j, kz);
        }
        csv << "\n";
      }
      if (cfg.out_dir.empty()) {
        std::cout << csv.str();
      } else {
        fs::create_directories(cfg.out_dir);
        std::ofstream(fs::path(cfg.out_dir) / "sdf_slice.csv") << csv.str();
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
