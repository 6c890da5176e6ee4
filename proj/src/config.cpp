#include "cnav/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cnav {

using nlohmann::json;

namespace {

// read known keys, reject unknown ones
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw std::invalid_argument(name_ + " must be an object");
  }
  ~Section() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) out = j_.at(key).get<T>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::invalid_argument("unknown key '" + name_ + "." + it.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void parse_model(const json& j, RobotModel& m) {
  Section s(j, "model");
  s.get("l0", m.l0);
  s.get("h0", m.h0);
  s.get("s_nom", m.s_nom);
  s.get("s_min", m.s_min);
  s.get("s_max", m.s_max);
  s.get("z_nom", m.z_nom);
  s.get("z_min", m.z_min);
  s.get("z_max", m.z_max);
  s.get("coupling_gain", m.coupling_gain);
  s.get("collision_radius", m.collision_radius);
  s.get("span_offset", m.span_offset);
  s.finish();
}

void parse_mapping(const json& j, MappingParams& m) {
  Section s(j, "mapping");
  s.get("side_length", m.side_length);
  s.get("resolution", m.resolution);
  s.get("prior_floor", m.prior_floor);
  s.get("outlier_gate", m.outlier_gate);
  s.get("outlier_reinit_count", m.outlier_reinit_count);
  s.get("bin_push", m.bin_push);
  s.get("drift_variance", m.drift_variance);
  s.get("min_separation", m.min_separation);
  s.finish();
}

void parse_planner(const json& j, PlannerParams& p) {
  Section s(j, "planner");
  s.get("waypoints", p.waypoints);
  s.get("dt", p.dt);
  s.get("eta", p.eta);
  s.get("max_iters", p.max_iters);
  s.get("smooth_weight", p.smooth_weight);
  s.get("obstacle_weight", p.obstacle_weight);
  s.get("eps", p.eps);
  s.get("converge_tol", p.converge_tol);
  s.finish();
}

void parse_sensor(const json& j, SensorModel& m) {
  Section s(j, "sensor");
  s.get("hfov", m.hfov);
  s.get("vfov", m.vfov);
  s.get("cols", m.cols);
  s.get("rows", m.rows);
  s.get("min_range", m.min_range);
  s.get("max_range", m.max_range);
  s.get("noise_coeff", m.noise_coeff);
  double mx = m.mount.x(), my = m.mount.y(), mz = m.mount.z();
  s.get("mount_x", mx);
  s.get("mount_y", my);
  s.get("mount_z", mz);
  m.mount = {mx, my, mz};
  s.get("mount_pitch", m.mount_pitch);
  s.finish();
}

void parse_executor(const json& j, FollowerGains& g) {
  Section s(j, "executor");
  s.get("kp_xy", g.kp_xy);
  s.get("kp_z", g.kp_z);
  s.get("kp_phi", g.kp_phi);
  s.get("kp_s", g.kp_s);
  s.get("vmax_xy", g.vmax_xy);
  s.get("vmax_z", g.vmax_z);
  s.get("vmax_phi", g.vmax_phi);
  s.get("vmax_s", g.vmax_s);
  s.get("control_dt", g.control_dt);
  s.get("lookahead", g.lookahead);
  s.finish();
}

void parse_sdf(const json& j, ExtrusionParams& e) {
  Section s(j, "sdf");
  s.get("z_min", e.z_min);
  s.get("z_max", e.z_max);
  s.finish();
}

void parse_trial(const json& j, TrialSpec& t, RunConfig& c) {
  Section s(j, "trial");
  std::string task = to_string(t.task);
  s.get("task", task);
  // switching task re-applies that task's fixture before the overrides
  s.get("seed", t.seed);
  double param = t.param;
  s.get("param", param);
  s.get("body_ref_frac", t.body_ref_frac);
  s.get("horizon", t.horizon);
  s.get("warmup_scans", t.warmup_scans);
  s.get("max_cycles", t.max_cycles);
  s.get("waypoint_tol", t.waypoint_tol);
  s.get("report_s_min", t.report_s_min);
  s.get("report_z_min", t.report_z_min);
  s.get("report_z_max", t.report_z_max);
  std::vector<std::vector<double>> wps;
  s.get("waypoints", wps);
  if (!wps.empty()) {
    t.waypoints.clear();
    for (const auto& w : wps) {
      if (w.size() != 3) throw std::invalid_argument("trial.waypoints entries must be [x, y, phi]");
      t.waypoints.push_back({w[0], w[1], w[2]});
    }
  }
  s.get("out_dir", c.out_dir);
  s.get("dump_map", c.dump_map);
  s.get("dump_sdf", c.dump_sdf);
  s.get("sdf_slice_z", c.sdf_slice_z);
  s.finish();
  t.task = task_from_string(task);
  t.param = param;
}

}  // namespace

void RunConfig::validate() const {
  trial.model.validate();
  trial.planner.validate();
  if (trial.mapping.side_length <= 0 || trial.mapping.resolution <= 0)
    throw std::invalid_argument("mapping grid must have positive size");
  if (trial.mapping.prior_floor < 0 || trial.mapping.prior_floor > 1)
    throw std::invalid_argument("mapping.prior_floor must be in [0, 1]");
  if (trial.sensor.min_range <= 0 || trial.sensor.max_range <= trial.sensor.min_range)
    throw std::invalid_argument("sensor range must satisfy 0 < min < max");
  if (trial.sensor.cols < 1 || trial.sensor.rows < 1)
    throw std::invalid_argument("sensor needs at least one ray");
  if (trial.extrusion.z_max <= trial.extrusion.z_min)
    throw std::invalid_argument("sdf.z_max must exceed sdf.z_min");
  if (trial.horizon <= 0) throw std::invalid_argument("trial.horizon must be positive");
  if (trial.waypoints.empty()) throw std::invalid_argument("trial needs at least one waypoint");
}

RunConfig default_config(Task task, double param) {
  RunConfig c;
  c.trial = default_trial_spec(task, param);
  return c;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

  // the trial section decides the task fixture, so read it first
  Task task = Task::ThinGap;
  double param = 0.7;
  if (j.contains("trial")) {
    const auto& t = j.at("trial");
    if (t.contains("task")) task = task_from_string(t.at("task").get<std::string>());
    if (t.contains("param")) param = t.at("param").get<double>();
  }
  RunConfig c = default_config(task, param);

  static const std::set<std::string> sections = {"model",  "mapping", "planner",
                                                 "sensor", "executor", "sdf", "trial"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!sections.count(it.key()))
      throw std::invalid_argument("unknown section '" + it.key() + "'");

  if (j.contains("model")) parse_model(j.at("model"), c.trial.model);
  if (j.contains("mapping")) parse_mapping(j.at("mapping"), c.trial.mapping);
  if (j.contains("planner")) parse_planner(j.at("planner"), c.trial.planner);
  if (j.contains("sensor")) parse_sensor(j.at("sensor"), c.trial.sensor);
  if (j.contains("executor")) parse_executor(j.at("executor"), c.trial.gains);
  if (j.contains("sdf")) parse_sdf(j.at("sdf"), c.trial.extrusion);
  if (j.contains("trial")) parse_trial(j.at("trial"), c.trial, c);

  c.validate();
  return c;
}

std::string serialize_config(const RunConfig& c) {
  const TrialSpec& t = c.trial;
  json j;
  j["model"] = {{"l0", t.model.l0},
                {"h0", t.model.h0},
                {"s_nom", t.model.s_nom},
                {"s_min", t.model.s_min},
                {"s_max", t.model.s_max},
                {"z_nom", t.model.z_nom},
                {"z_min", t.model.z_min},
                {"z_max", t.model.z_max},
                {"coupling_gain", t.model.coupling_gain},
                {"collision_radius", t.model.collision_radius},
                {"span_offset", t.model.span_offset}};
  j["mapping"] = {{"side_length", t.mapping.side_length},
                  {"resolution", t.mapping.resolution},
                  {"prior_floor", t.mapping.prior_floor},
                  {"outlier_gate", t.mapping.outlier_gate},
                  {"outlier_reinit_count", t.mapping.outlier_reinit_count},
                  {"bin_push", t.mapping.bin_push},
                  {"drift_variance", t.mapping.drift_variance},
                  {"min_separation", t.mapping.min_separation}};
  j["planner"] = {{"waypoints", t.planner.waypoints},
                  {"dt", t.planner.dt},
                  {"eta", t.planner.eta},
                  {"max_iters", t.planner.max_iters},
                  {"smooth_weight", t.planner.smooth_weight},
                  {"obstacle_weight", t.planner.obstacle_weight},
                  {"eps", t.planner.eps},
                  {"converge_tol", t.planner.converge_tol}};
  j["sensor"] = {{"hfov", t.sensor.hfov},
                 {"vfov", t.sensor.vfov},
                 {"cols", t.sensor.cols},
                 {"rows", t.sensor.rows},
                 {"min_range", t.sensor.min_range},
                 {"max_range", t.sensor.max_range},
                 {"noise_coeff", t.sensor.noise_coeff},
                 {"mount_x", t.sensor.mount.x()},
                 {"mount_y", t.sensor.mount.y()},
                 {"mount_z", t.sensor.mount.z()},
                 {"mount_pitch", t.sensor.mount_pitch}};
  j["executor"] = {{"kp_xy", t.gains.kp_xy},
                   {"kp_z", t.gains.kp_z},
                   {"kp_phi", t.gains.kp_phi},
                   {"kp_s", t.gains.kp_s},
                   {"vmax_xy", t.gains.vmax_xy},
                   {"vmax_z", t.gains.vmax_z},
                   {"vmax_phi", t.gains.vmax_phi},
                   {"vmax_s", t.gains.vmax_s},
                   {"control_dt", t.gains.control_dt},
                   {"lookahead", t.gains.lookahead}};
  j["sdf"] = {{"z_min", t.extrusion.z_min}, {"z_max", t.extrusion.z_max}};
  std::vector<std::vector<double>> wps;
  for (const auto& w : t.waypoints) wps.push_back({w.x(), w.y(), w.z()});
  j["trial"] = {{"task", to_string(t.task)},
                {"param", t.param},
                {"seed", t.seed},
                {"body_ref_frac", t.body_ref_frac},
                {"horizon", t.horizon},
                {"warmup_scans", t.warmup_scans},
                {"max_cycles", t.max_cycles},
                {"waypoint_tol", t.waypoint_tol},
                {"report_s_min", t.report_s_min},
                {"report_z_min", t.report_z_min},
                {"report_z_max", t.report_z_max},
                {"waypoints", wps},
                {"out_dir", c.out_dir},
                {"dump_map", c.dump_map},
                {"dump_sdf", c.dump_sdf},
                {"sdf_slice_z", c.sdf_slice_z}};
  return j.dump(2);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace cnav
