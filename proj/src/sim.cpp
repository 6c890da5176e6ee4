#include "cnav/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cnav {

namespace {

double snap(double v, double res = 0.05) { return std::round(v / res) * res; }

double aabb_signed_distance(const Aabb& b, const Eigen::Vector3d& p) {
  const Eigen::Vector3d c = 0.5 * (b.lo + b.hi);
  const Eigen::Vector3d h = 0.5 * (b.hi - b.lo);
  const Eigen::Vector3d q = (p - c).cwiseAbs() - h;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(std::max({q.x(), q.y(), q.z()}), 0.0);
  return outside + inside;
}

// slab-method ray/AABB intersection, returns entry distance or infinity
double ray_aabb(const Aabb& b, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < b.lo[a] || o[a] > b.hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (b.lo[a] - o[a]) / d[a];
    double tb = (b.hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

}  // namespace

double World::signed_distance(const Eigen::Vector3d& p) const {
  double d = ground_plane ? p.z() : std::numeric_limits<double>::infinity();
  for (const auto& b : boxes) d = std::min(d, aabb_signed_distance(b, p));
  return d;
}

Task task_from_string(const std::string& name) {
  if (name == "thin-gap") return Task::ThinGap;
  if (name == "low-overhang") return Task::LowOverhang;
  if (name == "high-clearance") return Task::HighClearance;
  if (name == "clearance-block") return Task::ClearanceBlock;
  if (name == "course") return Task::Course;
  if (name == "corridor") return Task::Corridor;
  throw std::invalid_argument("unknown task: " + name);
}

std::string to_string(Task task) {
  switch (task) {
    case Task::ThinGap: return "thin-gap";
    case Task::LowOverhang: return "low-overhang";
    case Task::HighClearance: return "high-clearance";
    case Task::ClearanceBlock: return "clearance-block";
    case Task::Course: return "course";
    default: return "corridor";
  }
}

namespace {

void add_gap_walls(World& w, double x0, double x1, double gap, double height) {
  const double yl = snap(-gap / 2.0);
  const double yr = yl + gap;
  w.boxes.push_back({{x0, -3.0, 0.0}, {x1, yl, height}});
  w.boxes.push_back({{x0, yr, 0.0}, {x1, 3.0, height}});
}

}  // namespace

World make_world(Task task, double param) {
  World w;
  switch (task) {
    case Task::ThinGap: {
      if (param <= 0.0) throw std::invalid_argument("gap width must be positive");
      add_gap_walls(w, 1.35, 1.65, param, 0.35);
      break;
    }
    case Task::LowOverhang: {
      if (param <= 0.0) throw std::invalid_argument("overhang height must be positive");
      w.boxes.push_back({{1.4, -3.0, param}, {1.9, 3.0, param + 0.30}});
      break;
    }
    case Task::HighClearance: {
      if (param < 0.0) throw std::invalid_argument("obstacle height must be non-negative");
      if (param > 0.0) w.boxes.push_back({{1.4, -0.1, 0.0}, {1.7, 0.1, param}});
      break;
    }
    case Task::ClearanceBlock: {
      // 15 cm thick block with its underside raised to param
      w.boxes.push_back({{1.4, -3.0, param}, {1.7, 3.0, param + 0.15}});
      break;
    }
    case Task::Course: {
      // gap, overhang (underside at param) and a low block over 7.5 m
      add_gap_walls(w, 1.35, 1.65, 0.75, 0.30);
      const double oh = param > 0.0 ? param : 0.25;
      w.boxes.push_back({{3.6, -3.0, oh}, {4.1, 3.0, oh + 0.30}});
      w.boxes.push_back({{5.8, -0.1, 0.0}, {6.1, 0.1, 0.20}});
      break;
    }
    case Task::Corridor: {
      // walls stepping inward to the requested width
      if (param <= 0.0) throw std::invalid_argument("corridor width must be positive");
      const double widths[3] = {param + 0.4, param + 0.2, param};
      double x = 1.0;
      for (double gap : widths) {
        add_gap_walls(w, x, x + 1.0, gap, 0.30);
        x += 1.0;
      }
      break;
    }
  }
  return w;
}

std::vector<DepthMeasurement> render_depth(const World& world, const SensorModel& sensor,
                                           const Configuration& body, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double c = std::cos(body.phi), s = std::sin(body.phi);
  const Eigen::Vector3d origin(
      body.x + c * sensor.mount.x() - s * sensor.mount.y(),
      body.y + s * sensor.mount.x() + c * sensor.mount.y(),
      body.z + sensor.mount.z());

  std::vector<DepthMeasurement> out;
  out.reserve(size_t(sensor.cols) * sensor.rows / 4);

  for (int v = 0; v < sensor.rows; ++v) {
    const double el = (sensor.rows > 1 ? (double(v) / (sensor.rows - 1) - 0.5) : 0.0) *
                          sensor.vfov - sensor.mount_pitch;
    for (int u = 0; u < sensor.cols; ++u) {
      const double az = (sensor.cols > 1 ? (double(u) / (sensor.cols - 1) - 0.5) : 0.0) *
                        sensor.hfov;
      // sensor frame: x forward, z up
      const Eigen::Vector3d db(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                               std::sin(el));
      const Eigen::Vector3d dir(c * db.x() - s * db.y(), s * db.x() + c * db.y(), db.z());

      double t = std::numeric_limits<double>::infinity();
      if (world.ground_plane && dir.z() < -1e-12) {
        const double tg = -origin.z() / dir.z();
        if (tg > 0.0) t = tg;
      }
      for (const auto& b : world.boxes) t = std::min(t, ray_aabb(b, origin, dir));

      if (!std::isfinite(t) || t < sensor.min_range || t > sensor.max_range) continue;

      const double noisy = t + (sensor.noise_coeff > 0.0
                                    ? gauss(rng) * sensor.noise_coeff * t * t
                                    : 0.0);
      const double sigma = sensor.noise_coeff * noisy * noisy;
      const double var = sigma > 0.0 ? sigma * sigma : 1e-6;
      out.push_back({origin + noisy * dir, var, dir});
    }
  }
  return out;
}

namespace {

Configuration interpolate_traj(const Trajectory& traj, int i) {
  return traj.samples[std::clamp(i, 0, traj.size() - 1)];
}

int count_penetrations(const World& world, const RobotModel& model,
                       const CheckModel& cm, const std::vector<CollisionPoint>& pts,
                       const Configuration& state, double contact_tol,
                       double& min_margin) {
  const Configuration cc = check_configuration(cm, state);
  int hits = 0;
  for (const auto& pt : pts) {
    const Vec3 x = collision_point_world(cc, pt, cm.reduced);
    const double margin = world.signed_distance(x) - cm.radius;
    min_margin = std::min(min_margin, margin);
    if (margin < -contact_tol) ++hits;
  }
  return hits;
}

}  // namespace

ExecutionLog execute(const Trajectory& traj, const World& world, const RobotModel& model,
                     const FollowerGains& gains, const Configuration& start,
                     double max_progress) {
  ExecutionLog log;
  log.min_margin = std::numeric_limits<double>::infinity();

  const CheckModel cm = make_check_model(model);
  const auto pts = generate_collision_points(model);

  Configuration state = start;
  log.path.push_back(state);

  int ref = 0;
  const int n = traj.size();
  const double budget = 4.0 * n * traj.dt;  // generous wall-clock budget
  const int max_steps = int(budget / gains.control_dt);

  for (int stepi = 0; stepi < max_steps; ++stepi) {
    // advance the reference while the robot is close to it
    while (ref + 1 < n &&
           std::hypot(state.x - traj.samples[ref].x, state.y - traj.samples[ref].y) <
               gains.lookahead)
      ++ref;
    const Configuration target = interpolate_traj(traj, ref);

    auto clampv = [](double v, double cap) { return std::clamp(v, -cap, cap); };
    const double vx = clampv(gains.kp_xy * (target.x - state.x), gains.vmax_xy);
    const double vy = clampv(gains.kp_xy * (target.y - state.y), gains.vmax_xy);
    const double vz = clampv(gains.kp_z * (target.z - state.z), gains.vmax_z);
    const double vphi =
        clampv(gains.kp_phi * normalize_angle(target.phi - state.phi), gains.vmax_phi);
    const double vs = clampv(gains.kp_s * (target.s - state.s), gains.vmax_s);

    const double dd = std::hypot(vx, vy) * gains.control_dt;
    state.x += vx * gains.control_dt;
    state.y += vy * gains.control_dt;
    state.z = std::clamp(state.z + vz * gains.control_dt, model.z_min, model.z_max);
    state.phi = normalize_angle(state.phi + vphi * gains.control_dt);
    state.s = std::clamp(state.s + vs * gains.control_dt, model.s_min, model.s_max);
    log.distance_traveled += dd;

    if (count_penetrations(world, model, cm, pts, state, gains.contact_tol, log.min_margin) > 0)
      ++log.collision_steps;
    log.path.push_back(state);

    const Configuration& goal = traj.samples[n - 1];
    const bool at_end = ref == n - 1 &&
                        std::hypot(goal.x - state.x, goal.y - state.y) < 0.008 &&
                        std::abs(goal.z - state.z) < 0.01 && std::abs(goal.s - state.s) < 0.01;
    if (at_end) break;
    if (max_progress > 0.0 && log.distance_traveled >= max_progress) break;
  }

  log.end_state = state;
  return log;
}

TrialSpec default_trial_spec(Task task, double param) {
  TrialSpec spec;
  spec.task = task;
  spec.param = param;
  spec.model.span_offset = 0.0;  // simulation percentages use the bare box
  // grazing-ray range noise scatters surface points into free space
  // (ghost ceilings); trials run with a tamer sensor than the raw default
  spec.sensor.noise_coeff = 0.005;
  spec.sensor_top = spec.sensor;
  spec.sensor_top.mount = {0.25, 0.0, 0.13};
  spec.sensor_top.mount_pitch = 0.35;

  switch (task) {
    case Task::ThinGap:
      // span floor and raise ceiling mirroring the stability-limited stance;
      // walls are tall floor obstacles, so the classification reference sits
      // high
      spec.model.s_min = 0.345;
      spec.model.z_max = 0.24;
      spec.body_ref_frac = 1.5;
      spec.extrusion = {-0.10, 0.90};
      break;
    case Task::LowOverhang:
      // walking ground-clearance floor; grid aligned to quarter-lattice heights
      spec.model.z_min = 0.08;
      spec.extrusion = {-0.075, 0.925};
      spec.body_ref_frac = 0.0;
      break;
    case Task::HighClearance:
      spec.extrusion = {-0.09, 0.91};
      break;
    case Task::ClearanceBlock:
      spec.model.z_min = 0.08;
      spec.extrusion = {-0.10, 0.90};
      break;
    default:
      spec.body_ref_frac = 1.5;
      spec.extrusion = {-0.10, 0.90};
      break;
  }

  const double default_goal_x = task == Task::Course ? 7.5 : (task == Task::Corridor ? 4.5 : 3.0);
  double y_center = 0.0;
  if (task == Task::ThinGap || task == Task::Corridor)
    y_center = snap(-param / 2.0) + param / 2.0;
  if (task == Task::Course) {
    const double course_gap_center = snap(-0.75 / 2.0) + 0.75 / 2.0;
    spec.waypoints = {{2.5, course_gap_center, 0.0}, {5.0, 0.0, 0.0}, {7.5, 0.0, 0.0}};
  } else {
    spec.waypoints = {{default_goal_x, y_center, 0.0}};
  }
  return spec;
}

TrialReport run_trial(const TrialSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialReport report;
  report.min_margin = std::numeric_limits<double>::infinity();

  const World world = make_world(spec.task, spec.param);
  const RobotModel& model = spec.model;
  model.validate();

  double y0 = 0.0;
  if (!spec.waypoints.empty() && (spec.task == Task::ThinGap || spec.task == Task::Corridor))
    y0 = spec.waypoints.front().y();

  Configuration state;
  state.x = 0.0;
  state.y = y0;
  state.z = std::clamp(model.z_nom, model.z_min, model.z_max);
  state.phi = 0.0;
  state.s = std::clamp(model.s_nom, model.s_min, model.s_max);

  MultiElevationMap map(spec.mapping, state.x, state.y);
  uint64_t scan_counter = 0;
  auto scan_seed = [&]() { return spec.seed * 1000003ULL + (scan_counter++); };

  auto observe = [&](int count) {
    for (int i = 0; i < count; ++i) {
      const double ref = state.z + spec.body_ref_frac * model.h0;
      map.ingest_scan(render_depth(world, spec.sensor, state, scan_seed()), ref);
      if (spec.use_top_sensor)
        map.ingest_scan(render_depth(world, spec.sensor_top, state, scan_seed()), ref);
    }
  };

  report.min_span = state.s;
  report.min_total_height = state.z + model.h0;
  report.max_z = state.z;
  report.executed_path.push_back(state);

  observe(spec.warmup_scans);

  bool failed = false;
  for (size_t wp = 0; wp < spec.waypoints.size() && !failed; ++wp) {
    const Eigen::Vector3d& goal = spec.waypoints[wp];
    int cycle = 0;
    for (; cycle < spec.max_cycles; ++cycle) {
      if (std::hypot(goal.x() - state.x, goal.y() - state.y) < spec.waypoint_tol) break;

      // sense
      observe(1);

      // build the field around the robot
      const auto ts0 = std::chrono::steady_clock::now();
      const auto occ = extrude_occupancy(map, spec.extrusion);
      const auto sdf = build_sdf(occ);
      report.max_sdf_time = std::max(
          report.max_sdf_time,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - ts0).count());

      // plan further than one execution horizon so posture changes are
      // anticipated, but stay inside the local field window
      const double dist = std::hypot(goal.x() - state.x, goal.y() - state.y);
      const double reach = std::max(2.0 * spec.horizon, 2.0);
      Configuration goal_cfg;
      if (dist > reach) {
        goal_cfg.x = state.x + reach * (goal.x() - state.x) / dist;
        goal_cfg.y = state.y + reach * (goal.y() - state.y) / dist;
      } else {
        goal_cfg.x = goal.x();
        goal_cfg.y = goal.y();
      }
      goal_cfg.z = state.z;
      goal_cfg.phi = goal.z();
      goal_cfg.s = state.s;

      PlanResult plan_result;
      try {
        plan_result = plan(state, goal_cfg, sdf, model, spec.planner);
      } catch (const std::exception& e) {
        report.failure_reason = std::string("planner failed: ") + e.what();
        failed = true;
        break;
      }
      report.plans += 1;
      report.max_plan_time = std::max(report.max_plan_time, plan_result.plan_time);
      report.last_plan = plan_result.trajectory;
      report.last_plan_clearance.assign(plan_result.trajectory.size(), 0.0);
      {
        const auto cmv = make_check_model(model);
        const auto ptsv = generate_collision_points(model);
        for (int wi = 0; wi < plan_result.trajectory.size(); ++wi) {
          const Configuration cc = check_configuration(cmv, plan_result.trajectory.samples[wi]);
          double best = std::numeric_limits<double>::infinity();
          for (const auto& pt : ptsv) {
            const Vec3 x = collision_point_world(cc, pt, cmv.reduced);
            if (sdf.contains(x)) best = std::min(best, sdf.distance(x) - cmv.radius);
          }
          report.last_plan_clearance[wi] = best;
        }
      }

      if (!plan_result.collision_free) {
        report.failure_reason = "planner failed: no collision-free trajectory";
        failed = true;
        break;
      }

      // execute a horizon of the plan
      const auto log = execute(plan_result.trajectory, world, model, spec.gains, state,
                               spec.horizon);
      report.collisions += log.collision_steps;
      report.min_margin = std::min(report.min_margin, log.min_margin);

      const double moved = std::hypot(log.end_state.x - state.x, log.end_state.y - state.y);
      state = log.end_state;
      for (const auto& c : log.path) {
        report.min_span = std::min(report.min_span, c.s);
        report.min_total_height = std::min(report.min_total_height, c.z + model.h0);
        report.max_z = std::max(report.max_z, c.z);
        report.executed_path.push_back(c);
      }

      map.recenter(state.x, state.y);
      map.inflate_variance(moved);
      if (moved < 0.01 && cycle > 2) {
        report.failure_reason = "follower stalled";
        failed = true;
        break;
      }
    }
    if (!failed && cycle == spec.max_cycles &&
        std::hypot(goal.x() - state.x, goal.y() - state.y) >= spec.waypoint_tol) {
      report.failure_reason = "cycle budget exhausted";
      failed = true;
    }
  }

  if (!failed && report.collisions > 0) {
    report.failure_reason = "ground-truth collision during execution";
    failed = true;
  }
  report.success = !failed;

  const double h_nom = model.z_nom + model.h0;
  const double h_min = spec.report_z_min + model.h0;
  report.adaptation_span =
      posture_percentage(report.min_span, model.s_nom, spec.report_s_min);
  report.adaptation_lower = posture_percentage(report.min_total_height, h_nom, h_min);
  report.adaptation_raise =
      posture_percentage(report.max_z, model.z_nom, spec.report_z_max);
  report.total_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace cnav
