#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "cnav/distance_field.hpp"
#include "cnav/geometry.hpp"

// Covariant gradient-descent trajectory optimizer over the 5-D configuration
// (x, y, z, phi, s): second-order smoothness norm, workspace obstacle
// functional over all collision check points, coupled-width Jacobians.
//
// plan() is a pure function of its inputs; concurrent plans may share one
// immutable SignedDistanceField.

namespace cnav {

struct PlannerParams {
  int waypoints = 100;        // N
  double dt = 0.1;            // s
  double eta = 150.0;         // learning rate
  int max_iters = 800;
  double smooth_weight = 1.0;
  double obstacle_weight = 1.0;
  double eps = 0.076;         // obstacle clearance; radius + half a voxel + 1 mm
  double converge_tol = 1e-4; // RMS waypoint displacement per iteration, m
  double step_cap = 0.002;    // trust region: max per-waypoint displacement, m
  // longitudinal clearance margin: the planning box is extended fore and aft
  // so posture transitions crest before the body reaches an obstacle edge
  double length_margin = 0.035;  // m

  void validate() const;  // throws std::invalid_argument
};

using GradientField = std::vector<Eigen::Matrix<double, 5, 1>>;

/// Cached factorizations of the smoothness metric A = K^T K built from
/// second-difference rows under the endpoint pinning pattern.
class SmoothNorm {
 public:
  SmoothNorm(int n, double dt);

  /// Solve A x = g for the free variables of one dimension.
  /// both_pinned selects the interior-only system (dims pinned at both ends)
  /// versus the tail-free system (dims pinned at the start only).
  Eigen::VectorXd solve(const Eigen::VectorXd& g, bool both_pinned) const;

  int n() const { return n_; }

 private:
  int n_;
  Eigen::LDLT<Eigen::MatrixXd> interior_;  // (N-2) system
  Eigen::LDLT<Eigen::MatrixXd> tail_;      // (N-1) system
};

struct PlanResult {
  Trajectory trajectory;
  int iterations = 0;
  bool converged = false;
  double min_clearance = 0.0;   // min sdf distance minus sphere radius, m
  bool collision_free = false;  // min_clearance >= 0
  double plan_time = 0.0;       // s, wall clock
  double sdf_build_time = 0.0;  // s, filled by the caller when it builds the field
};

/// Straight-line seed between start and goal over params.waypoints samples.
/// x, y, phi are pinned at both ends; z and s only at the start.
/// Throws std::invalid_argument when start and goal coincide in (x, y).
Trajectory init_trajectory(const Configuration& start, const Configuration& goal,
                           const PlannerParams& params);

/// Negative discrete second time derivative at each waypoint; zero rows at
/// pinned endpoint dimensions. The last waypoint of an unpinned dimension
/// uses a replicated-boundary difference.
GradientField smoothness_gradient(const Trajectory& traj);

/// Workspace obstacle gradient summed over all collision check points:
///   J^T ||X'|| [(I - X^ X^T) grad c - c kappa]
/// evaluated on the sphere-centre (check) geometry. Throws std::runtime_error
/// naming the waypoint when a check point leaves the field.
GradientField obstacle_gradient(const Trajectory& traj, const SignedDistanceField& sdf,
                                const RobotModel& model, const PlannerParams& params);

struct StepResult {
  double update_rms = 0.0;  // RMS displacement over the free variables, m
  bool capped = false;      // step was rescaled by the trust region
};

/// One covariant update  xi <- xi - (1/eta) A^-1 grad, with z and s clamped
/// to the model limits and pinned endpoint dimensions left untouched. When
/// the largest per-waypoint displacement exceeds params.step_cap the whole
/// update is rescaled to the cap (direction preserved).
StepResult step(Trajectory& traj, const GradientField& grads, const SmoothNorm& norm,
                const RobotModel& model, const PlannerParams& params);

PlanResult plan(const Configuration& start, const Configuration& goal,
                const SignedDistanceField& sdf, const RobotModel& model,
                const PlannerParams& params);

/// Normalized posture displacement: 100 * (nominal - value) / (nominal - limit).
double posture_percentage(double value, double nominal, double limit);

/// Minimum over all check points and waypoints of sdf distance minus radius,
/// evaluated on the length-extended planning box.
double min_clearance(const Trajectory& traj, const SignedDistanceField& sdf,
                     const RobotModel& model, double length_margin = 0.0);

}  // namespace cnav
