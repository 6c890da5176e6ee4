#include "cnav/planner.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cnav {

void PlannerParams::validate() const {
  if (waypoints < 3) throw std::invalid_argument("need at least 3 waypoints");
  if (dt <= 0) throw std::invalid_argument("dt must be positive");
  if (eta <= 0) throw std::invalid_argument("eta must be positive");
  if (smooth_weight < 0 || obstacle_weight < 0)
    throw std::invalid_argument("weights must be non-negative");
  if (eps <= 0) throw std::invalid_argument("eps must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
}

namespace {

// Second-difference operator rows over the free variables; pinned endpoint
// values enter as constants and drop out of the metric.
Eigen::MatrixXd build_metric(int n, double dt, bool both_pinned) {
  const int free_n = both_pinned ? n - 2 : n - 1;
  const int rows = both_pinned ? n - 2 : n - 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(rows, free_n);
  const double w = 1.0 / (dt * dt);
  // interior second differences: row r couples free vars (r-1, r, r+1)
  for (int r = 0; r < n - 2; ++r) {
    if (r - 1 >= 0) K(r, r - 1) = w;
    K(r, r) = -2.0 * w;
    if (r + 1 < free_n) K(r, r + 1) = w;
  }
  if (!both_pinned) {
    // replicated-boundary terminal row: first difference at the tail
    K(n - 2, n - 3) = w;
    K(n - 2, n - 2) = -w;
  }
  return K.transpose() * K;
}

struct CheckPointCache {
  CheckModel cm;
  std::vector<CollisionPoint> points;
};

CheckPointCache make_cache(const RobotModel& model, double length_margin) {
  CheckPointCache cache{make_check_model(model), generate_collision_points(model)};
  cache.cm.reduced.l0 += 2.0 * length_margin;
  return cache;
}

}  // namespace

SmoothNorm::SmoothNorm(int n, double dt) : n_(n) {
  interior_.compute(build_metric(n, dt, true));
  tail_.compute(build_metric(n, dt, false));
}

Eigen::VectorXd SmoothNorm::solve(const Eigen::VectorXd& g, bool both_pinned) const {
  return both_pinned ? interior_.solve(g) : tail_.solve(g);
}

Trajectory init_trajectory(const Configuration& start, const Configuration& goal,
                           const PlannerParams& params) {
  params.validate();
  const double dx = goal.x - start.x, dy = goal.y - start.y;
  if (std::hypot(dx, dy) < 1e-12)
    throw std::invalid_argument("start and goal coincide in (x, y)");

  Trajectory traj;
  traj.dt = params.dt;
  traj.samples.resize(params.waypoints);

  const double phi0 = normalize_angle(start.phi);
  double dphi = normalize_angle(goal.phi) - phi0;
  dphi = normalize_angle(dphi);  // shortest arc

  for (int i = 0; i < params.waypoints; ++i) {
    const double a = double(i) / (params.waypoints - 1);
    Configuration c;
    c.x = start.x + a * dx;
    c.y = start.y + a * dy;
    c.z = start.z + a * (goal.z - start.z);
    c.phi = phi0 + a * dphi;
    c.s = start.s + a * (goal.s - start.s);
    traj.samples[i] = c;
  }
  traj.samples.front() = start;
  traj.samples.front().phi = phi0;
  return traj;
}

GradientField smoothness_gradient(const Trajectory& traj) {
  const int n = traj.size();
  if (n < 3) throw std::invalid_argument("need at least 3 waypoints");
  const double w = 1.0 / (traj.dt * traj.dt);

  GradientField g(n, Eigen::Matrix<double, 5, 1>::Zero());
  auto dim = [&](const Configuration& c, int d) {
    switch (d) {
      case 0: return c.x;
      case 1: return c.y;
      case 2: return c.z;
      case 3: return c.phi;
      default: return c.s;
    }
  };

  for (int d = 0; d < 5; ++d) {
    for (int i = 1; i < n - 1; ++i)
      g[i][d] = -w * (dim(traj.samples[i - 1], d) - 2.0 * dim(traj.samples[i], d) +
                      dim(traj.samples[i + 1], d));
    if (!traj.pinned_goal[d])
      g[n - 1][d] = -w * (dim(traj.samples[n - 2], d) - dim(traj.samples[n - 1], d));
  }
  return g;
}

GradientField obstacle_gradient(const Trajectory& traj, const SignedDistanceField& sdf,
                                const RobotModel& model, const PlannerParams& params) {
  const int n = traj.size();
  const auto cache = make_cache(model, params.length_margin);
  const int npts = int(cache.points.size());

  // world positions of every check-sphere centre
  std::vector<Vec3> world(size_t(n) * npts);
  for (int i = 0; i < n; ++i) {
    const Configuration cc = check_configuration(cache.cm, traj.samples[i]);
    for (int j = 0; j < npts; ++j)
      world[size_t(i) * npts + j] = collision_point_world(cc, cache.points[j], cache.cm.reduced);
  }

  GradientField g(n, Eigen::Matrix<double, 5, 1>::Zero());
  const double dt = traj.dt;

  // interior waypoints only: the functional runs where central differences
  // of the point motion exist; endpoint boxes are still covered by the
  // clearance verification
  for (int i = 1; i < n - 1; ++i) {
    const Configuration cc = check_configuration(cache.cm, traj.samples[i]);
    for (int j = 0; j < npts; ++j) {
      const Vec3& x = world[size_t(i) * npts + j];
      if (!sdf.contains(x))
        throw std::runtime_error("collision point outside distance field at waypoint " +
                                 std::to_string(i));
      // cheap distance probe first; the gradient stencil only runs in-band
      const double d = sdf.distance(x);
      const auto oc = obstacle_cost(d, params.eps);
      if (oc.cost == 0.0 && oc.dcost_dd == 0.0) continue;
      const auto q = sdf.query(x);

      const Vec3 grad_c = oc.dcost_dd * q.gradient;

      const Vec3 xp =
          (world[size_t(i + 1) * npts + j] - world[size_t(i - 1) * npts + j]) / (2.0 * dt);
      const Vec3 xpp = (world[size_t(i + 1) * npts + j] - 2.0 * x +
                        world[size_t(i - 1) * npts + j]) /
                       (dt * dt);

      const Mat35 J = collision_point_jacobian(cc, cache.points[j], cache.cm.reduced);
      const double v = xp.norm();
      Vec3 workspace_term;
      if (v < 1e-6) {
        workspace_term = grad_c;  // stationary fallback: plain potential gradient
      } else {
        const Vec3 xh = xp / v;
        const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - xh * xh.transpose();
        const Vec3 kappa = proj * xpp / (v * v);
        workspace_term = v * (proj * grad_c - oc.cost * kappa);
      }
      g[i] += J.transpose() * (workspace_term * dt);
    }
  }

  // pinned endpoint dimensions contribute nothing
  for (int d = 0; d < 5; ++d) {
    if (traj.pinned_start[d]) g[0][d] = 0.0;
    if (traj.pinned_goal[d]) g[n - 1][d] = 0.0;
  }
  return g;
}

StepResult step(Trajectory& traj, const GradientField& grads, const SmoothNorm& norm,
                const RobotModel& model, const PlannerParams& params) {
  const int n = traj.size();
  if (norm.n() != n) throw std::invalid_argument("norm size does not match trajectory");

  for (const auto& g : grads)
    if (!g.allFinite()) throw std::runtime_error("planner diverged: non-finite gradient");

  auto get = [&](int i, int d) -> double {
    const Configuration& c = traj.samples[i];
    switch (d) {
      case 0: return c.x;
      case 1: return c.y;
      case 2: return c.z;
      case 3: return c.phi;
      default: return c.s;
    }
  };
  auto set = [&](int i, int d, double v) {
    Configuration& c = traj.samples[i];
    switch (d) {
      case 0: c.x = v; break;
      case 1: c.y = v; break;
      case 2: c.z = v; break;
      case 3: c.phi = v; break;
      default: c.s = v; break;
    }
  };

  std::array<Eigen::VectorXd, 5> dx;
  double max_disp = 0.0;
  for (int d = 0; d < 5; ++d) {
    const bool both = traj.pinned_goal[d];
    const int free_n = both ? n - 2 : n - 1;
    Eigen::VectorXd g(free_n);
    for (int r = 0; r < free_n; ++r) g[r] = grads[r + 1][d];
    dx[d] = norm.solve(g, both) / params.eta;
    max_disp = std::max(max_disp, dx[d].cwiseAbs().maxCoeff());
  }

  StepResult result;
  double scale = 1.0;
  if (params.step_cap > 0.0 && max_disp > params.step_cap) {
    scale = params.step_cap / max_disp;
    result.capped = true;
  }

  double sq_sum = 0.0;
  int count = 0;
  for (int d = 0; d < 5; ++d) {
    const int free_n = traj.pinned_goal[d] ? n - 2 : n - 1;
    for (int r = 0; r < free_n; ++r) {
      const double delta = scale * dx[d][r];
      double v = get(r + 1, d) - delta;
      if (d == 2) v = std::clamp(v, model.z_min, model.z_max);
      if (d == 4) v = std::clamp(v, model.s_min, model.s_max);
      sq_sum += delta * delta;
      set(r + 1, d, v);
    }
    count += free_n;
  }
  result.update_rms = std::sqrt(sq_sum / std::max(count, 1));
  return result;
}

double min_clearance(const Trajectory& traj, const SignedDistanceField& sdf,
                      const RobotModel& model, double length_margin) {
  const auto cache = make_cache(model, length_margin);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < traj.size(); ++i) {
    const Configuration cc = check_configuration(cache.cm, traj.samples[i]);
    for (const auto& pt : cache.points) {
      const Vec3 x = collision_point_world(cc, pt, cache.cm.reduced);
      if (!sdf.contains(x))
        throw std::runtime_error("collision point outside distance field at waypoint " +
                                 std::to_string(i));
      best = std::min(best, sdf.distance(x) - cache.cm.radius);
    }
  }
  return best;
}

PlanResult plan(const Configuration& start, const Configuration& goal,
                const SignedDistanceField& sdf, const RobotModel& model,
                const PlannerParams& params) {
  params.validate();
  model.validate();
  const auto t0 = std::chrono::steady_clock::now();

  PlanResult result;
  Trajectory traj = init_trajectory(start, goal, params);
  SmoothNorm norm(traj.size(), traj.dt);

  int iters = 0;
  bool converged = false;
  for (; iters < params.max_iters; ++iters) {
    const GradientField gs = smoothness_gradient(traj);
    const GradientField go = obstacle_gradient(traj, sdf, model, params);
    GradientField g(traj.size());
    for (int i = 0; i < traj.size(); ++i)
      g[i] = params.smooth_weight * gs[i] + params.obstacle_weight * go[i];
    const StepResult update = step(traj, g, norm, model, params);
    if (!update.capped && update.update_rms < params.converge_tol) {
      converged = true;
      ++iters;
      break;
    }
  }

  for (auto& c : traj.samples) c.phi = normalize_angle(c.phi);

  result.trajectory = std::move(traj);
  result.iterations = iters;
  result.converged = converged;
  result.min_clearance = min_clearance(result.trajectory, sdf, model, params.length_margin);
  result.collision_free = result.min_clearance >= 0.0;
  result.plan_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double posture_percentage(double value, double nominal, double limit) {
  if (nominal == limit) throw std::invalid_argument("nominal must differ from limit");
  return 100.0 * (nominal - value) / (nominal - limit);
}

}  // namespace cnav
