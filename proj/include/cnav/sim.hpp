#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cnav/distance_field.hpp"
#include "cnav/geometry.hpp"
#include "cnav/mapping.hpp"
#include "cnav/planner.hpp"

// Synthetic worlds, a raycasting depth sensor, a kinematic follower and the
// sense -> map -> plan -> execute loop. Trials are independent and may run in
// parallel; within a trial everything is sequential and seed-deterministic.

namespace cnav {

struct Aabb {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

struct World {
  std::vector<Aabb> boxes;
  bool ground_plane = true;  // z = 0

  /// Signed distance from a point to the nearest solid (negative inside).
  double signed_distance(const Eigen::Vector3d& p) const;
};

enum class Task { ThinGap, LowOverhang, HighClearance, ClearanceBlock, Course, Corridor };

Task task_from_string(const std::string& name);
std::string to_string(Task task);

/// Deterministic world generator. The confinement parameter is the gap width,
/// overhang underside height, obstacle height, raised-block underside height,
/// course overhang height or final corridor width respectively. Obstacle
/// surfaces are kept on the 5 cm lattice wherever the parameter allows.
World make_world(Task task, double param);

struct SensorModel {
  double hfov = M_PI / 2.0;       // rad
  double vfov = M_PI / 3.0;       // rad
  int cols = 160;
  int rows = 120;
  double min_range = 0.15;        // m
  double max_range = 4.0;         // m
  double noise_coeff = 0.0285;    // sigma = a * d^2
  // belly-mounted forward camera: low enough to see under overhangs
  Eigen::Vector3d mount{0.25, 0.0, 0.02};  // body frame, m
  double mount_pitch = 0.0;       // rad, positive looks down
};

/// Raycast depth scan from a body pose. Gaussian range noise with
/// sigma = a d^2; per-point variance (a d^2)^2. Deterministic per seed.
std::vector<DepthMeasurement> render_depth(const World& world, const SensorModel& sensor,
                                           const Configuration& body, uint64_t seed);

struct FollowerGains {
  double kp_xy = 4.0;
  double kp_z = 12.0;
  double kp_phi = 4.0;
  double kp_s = 12.0;
  double vmax_xy = 0.4;    // m/s
  double vmax_z = 0.3;     // m/s
  double vmax_phi = 1.5;   // rad/s
  double vmax_s = 0.3;     // m/s
  double control_dt = 0.02;  // s
  double lookahead = 0.12;   // m, reference advance gate
  // contact tolerance for ground-truth checks: the box is an enclosing shell
  // around the robot hull, so shell grazes below this depth are not contacts
  double contact_tol = 0.01;  // m
};

struct ExecutionLog {
  Configuration end_state;
  std::vector<Configuration> path;  // sampled at control rate
  int collision_steps = 0;          // control steps with any sphere penetrating
  double min_margin = 0.0;          // worst true clearance of any sphere, m
  double distance_traveled = 0.0;   // m, in (x, y)
};

/// Proportional trajectory follower with per-dimension velocity caps and a
/// progress-gated reference. Ground-truth collision checking of all inflated
/// check spheres against the world at every control step; contacts are
/// logged, never thrown. Stops after max_progress meters of (x, y) travel
/// (0 = follow to the end).
ExecutionLog execute(const Trajectory& traj, const World& world, const RobotModel& model,
                     const FollowerGains& gains, const Configuration& start,
                     double max_progress = 0.0);

struct TrialSpec {
  Task task = Task::ThinGap;
  double param = 0.7;
  std::vector<Eigen::Vector3d> waypoints;  // (x, y, phi); empty = task default
  uint64_t seed = 0;

  RobotModel model;
  MappingParams mapping;
  PlannerParams planner;
  SensorModel sensor;       // belly camera: sees under overhangs
  SensorModel sensor_top;   // box-top camera pitched down: sees obstacle tops
  bool use_top_sensor = true;
  FollowerGains gains;
  ExtrusionParams extrusion;

  double body_ref_frac = 1.0;   // classification reference = z + frac * h0
  double horizon = 1.0;         // m executed per replan
  int warmup_scans = 5;
  int max_cycles = 20;          // per waypoint
  double waypoint_tol = 0.15;   // m

  // posture reporting range (kept at the robot's kinematic range even when a
  // trial narrows the commandable limits)
  double report_s_min = 0.251;
  double report_z_min = 0.0;
  double report_z_max = 0.299;
};

/// Task-tuned spec: world parameter, fixture limits and grid alignment for
/// the given task. Waypoints and seed still come from the caller.
TrialSpec default_trial_spec(Task task, double param);

struct TrialReport {
  bool success = false;
  std::string failure_reason;
  int collisions = 0;
  double min_margin = 0.0;

  double adaptation_span = 0.0;    // %
  double adaptation_lower = 0.0;   // % of total height reduction
  double adaptation_raise = 0.0;   // % of body raise range
  double min_span = 0.0;           // m
  double min_total_height = 0.0;   // m
  double max_z = 0.0;              // m

  int plans = 0;
  double max_plan_time = 0.0;      // s
  double max_sdf_time = 0.0;       // s
  double total_time = 0.0;         // s
  std::vector<Configuration> executed_path;
  Trajectory last_plan;
  std::vector<double> last_plan_clearance;  // per waypoint, m
};

TrialReport run_trial(const TrialSpec& spec);

}  // namespace cnav
