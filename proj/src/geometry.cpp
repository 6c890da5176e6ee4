#include "cnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cnav {

void RobotModel::validate() const {
  if (l0 <= 0 || h0 <= 0) throw std::invalid_argument("box dimensions must be positive");
  if (collision_radius <= 0) throw std::invalid_argument("collision radius must be positive");
  if (!(z_min <= z_nom && z_nom <= z_max)) throw std::invalid_argument("z limits out of order");
  if (!(s_min <= s_nom && s_nom <= s_max)) throw std::invalid_argument("span limits out of order");
  if (coupling_gain > 0) throw std::invalid_argument("coupling gain must be <= 0");
  if (2.0 * collision_radius >= l0) throw std::invalid_argument("collision radius too large for box length");
  if (2.0 * collision_radius >= 2.0 * s_min) throw std::invalid_argument("collision radius too large for box width");
  if (2.0 * collision_radius > h0) throw std::invalid_argument("collision radius too large for box height");
}

double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

namespace {

// Segments per edge: spacing at most 1.5*radius, one extra segment when the
// edge divides evenly. Calibrated once against the 84-point reference layout.
int edge_segments(double edge_len, double radius) {
  const double delta = 1.5 * radius;
  return static_cast<int>(std::floor(edge_len / delta + 1e-9)) + 1;
}

struct CoeffLess {
  bool operator()(const std::array<double, 3>& a, const std::array<double, 3>& b) const {
    for (int i = 0; i < 3; ++i) {
      if (a[i] < b[i] - 1e-12) return true;
      if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
  }
};

}  // namespace

std::vector<CollisionPoint> generate_collision_points(const RobotModel& model) {
  model.validate();

  const double r = model.collision_radius;
  const double len_x = model.l0;            // edge along x
  const double len_y = 2.0 * model.s_nom;   // edge along y at nominal span
  const double len_z = model.h0;            // vertical edge

  const int nx = edge_segments(len_x, r);
  const int ny = edge_segments(len_y, r);
  const int nz = edge_segments(len_z, r);

  std::set<std::array<double, 3>, CoeffLess> seen;
  std::vector<CollisionPoint> points;

  auto add = [&](double cx, double cy, double cz) {
    std::array<double, 3> key{cx, cy, cz};
    if (seen.insert(key).second) points.push_back({cx, cy, cz, r});
  };

  // Edges along x: vary cx in [-1, 1], fixed (cy, cz) corner pair.
  for (double cy : {-1.0, 1.0})
    for (double cz : {0.0, 1.0})
      for (int i = 0; i <= nx; ++i) add(-1.0 + 2.0 * i / nx, cy, cz);
  // Edges along y.
  for (double cx : {-1.0, 1.0})
    for (double cz : {0.0, 1.0})
      for (int i = 0; i <= ny; ++i) add(cx, -1.0 + 2.0 * i / ny, cz);
  // Vertical edges.
  for (double cx : {-1.0, 1.0})
    for (double cy : {-1.0, 1.0})
      for (int i = 0; i <= nz; ++i) add(cx, cy, static_cast<double>(i) / nz);

  return points;
}

double span_of_z(const RobotModel& model, double z) {
  const double s = model.s_nom + model.coupling_gain * (z - model.z_nom);
  return std::clamp(s, model.s_min, model.s_max);
}

double z_of_s(const RobotModel& model, double s) {
  if (model.coupling_gain == 0.0) return model.z_nom;
  const double z = model.z_nom + (s - model.s_nom) / model.coupling_gain;
  return std::clamp(z, model.z_min, model.z_max);
}

Vec3 collision_point_world(const Configuration& cfg, const CollisionPoint& pt,
                           const RobotModel& model) {
  const double c = std::cos(cfg.phi), s = std::sin(cfg.phi);
  const Vec3 local(pt.cx * model.l0 / 2.0, pt.cy * cfg.s, pt.cz * model.h0);
  return Vec3(cfg.x + c * local.x() - s * local.y(),
              cfg.y + s * local.x() + c * local.y(),
              cfg.z + local.z());
}

Mat35 collision_point_jacobian(const Configuration& cfg, const CollisionPoint& pt,
                               const RobotModel& model) {
  const double c = std::cos(cfg.phi), s = std::sin(cfg.phi);
  const double k = model.coupling_gain;
  const Vec3 local(pt.cx * model.l0 / 2.0, pt.cy * cfg.s, pt.cz * model.h0);

  Mat35 J = Mat35::Zero();
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;

  // d/dz: e_z plus the span response Rz * [0, cy*k, 0].
  J(0, 2) = -s * pt.cy * k;
  J(1, 2) = c * pt.cy * k;
  J(2, 2) = 1.0;

  // d/dphi: Rz'(phi) * local.
  J(0, 3) = -s * local.x() - c * local.y();
  J(1, 3) = c * local.x() - s * local.y();

  // d/ds: Rz * [0, cy, 0] plus the height response (dz/ds) e_z.
  J(0, 4) = -s * pt.cy;
  J(1, 4) = c * pt.cy;
  J(2, 4) = (k == 0.0) ? 0.0 : 1.0 / k;

  return J;
}

CheckModel make_check_model(const RobotModel& model) {
  model.validate();
  CheckModel cm;
  cm.reduced = model;
  cm.radius = model.collision_radius;
  cm.span_offset = model.span_offset;
  cm.reduced.l0 = model.l0 - 2.0 * model.collision_radius;
  cm.reduced.h0 = model.h0 - 2.0 * model.collision_radius;
  return cm;
}

Configuration check_configuration(const CheckModel& cm, const Configuration& cfg) {
  Configuration out = cfg;
  out.z = cfg.z + cm.radius;
  out.s = cfg.s + cm.span_offset - cm.radius;
  return out;
}

}  // namespace cnav
