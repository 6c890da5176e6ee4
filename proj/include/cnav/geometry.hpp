#pragma once

#include <Eigen/Core>
#include <vector>

// Deformable bounding-box abstraction: a box of fixed length and height but
// variable half-width ("span"), attached to the body frame at the centre of
// the bottom face. All values are immutable after construction and every
// function here is pure, so the module is safe to use from any thread.

namespace cnav {

using Vec3 = Eigen::Vector3d;
using Mat35 = Eigen::Matrix<double, 3, 5>;

/// One trajectory sample: body position, yaw and bounding-box span.
struct Configuration {
  double x = 0.0;    // m, map frame
  double y = 0.0;    // m
  double z = 0.0;    // m, ground clearance of the box bottom face
  double phi = 0.0;  // rad, yaw
  double s = 0.0;    // m, span = half box width

  Eigen::Matrix<double, 5, 1> vec() const {
    Eigen::Matrix<double, 5, 1> v;
    v << x, y, z, phi, s;
    return v;
  }
};

/// Fixed robot description. Lengths in meters, angles in radians.
struct RobotModel {
  double l0 = 0.6;               // box length
  double h0 = 0.141;             // box height
  double s_nom = 0.41;           // nominal span (82 cm total width)
  double s_min = 0.251;          // narrowest commandable span
  double s_max = 0.47;           // widest span
  double z_nom = 0.186;          // nominal clearance (total height 0.327)
  double z_min = 0.0;            // body may rest on the terrain
  double z_max = 0.299;          // body raised 11.3 cm above nominal
  double coupling_gain = -0.159 / 0.113;  // ds/dz, <= 0
  double collision_radius = 0.05;         // check-sphere radius
  double span_offset = 0.04;     // extra half-width for leg swing

  void validate() const;  // throws std::invalid_argument
};

/// Collision check point, identified by its coefficient triple.
/// Local offset from the body frame is (cx*l0/2, cy*s, cz*h0), so
/// cx, cy in [-1, 1] and cz in [0, 1]; |cx|=|cy|=1, cz in {0,1} at vertices.
struct CollisionPoint {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double radius = 0.05;  // m
};

/// Fixed-step trajectory with per-dimension endpoint pinning.
/// pinned_start/pinned_goal index the 5 dims in (x, y, z, phi, s) order.
struct Trajectory {
  std::vector<Configuration> samples;
  double dt = 0.1;  // s
  std::array<bool, 5> pinned_start{true, true, true, true, true};
  std::array<bool, 5> pinned_goal{true, true, false, true, false};

  int size() const { return static_cast<int>(samples.size()); }
};

/// Wrap an angle into (-pi, pi].
double normalize_angle(double a);

/// Points along all 12 box edges, spacing <= 1.5*radius, both endpoints
/// included, shared vertices deduplicated. Deterministic order.
/// The 1.5 factor reproduces the reference 84-point layout for the
/// 0.6 x 0.82 x 0.141 box with 5 cm spheres.
std::vector<CollisionPoint> generate_collision_points(const RobotModel& model);

/// Linear span/height coupling, clamped to the model limits.
double span_of_z(const RobotModel& model, double z);
double z_of_s(const RobotModel& model, double s);

/// Map-frame position of a collision point:
///   t = [x, y, z] + Rz(phi) * [cx*l0/2, cy*s, cz*h0].
Vec3 collision_point_world(const Configuration& cfg, const CollisionPoint& pt,
                           const RobotModel& model);

/// 3x5 position Jacobian, columns (x, y, z, phi, s). The z and s columns
/// carry the ds/dz and dz/ds cross terms of the linear coupling; with
/// coupling_gain == 0 both reduce to the decoupled form.
Mat35 collision_point_jacobian(const Configuration& cfg,
                               const CollisionPoint& pt,
                               const RobotModel& model);

/// Reduced model whose surface is the locus of check-sphere centres: the
/// spheres are inscribed in the box, tangent to every face, so a sphere
/// clearing an obstacle by `radius` means the box surface just clears it.
struct CheckModel {
  RobotModel reduced;   // l0 and h0 shrunk by 2*radius
  double radius = 0.0;
  double span_offset = 0.0;
};

CheckModel make_check_model(const RobotModel& model);

/// Configuration of the reduced box for a body configuration: bottom face
/// lifted by the sphere radius, span shrunk by it (plus the leg-swing
/// offset from the full model).
Configuration check_configuration(const CheckModel& cm, const Configuration& cfg);

}  // namespace cnav
