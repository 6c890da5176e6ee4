#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "cnav/mapping.hpp"

// Occupancy extrusion of a multi-elevation map snapshot and the signed
// Euclidean distance field built from it. A built field is immutable and can
// be queried from any thread.

namespace cnav {

struct GridGeometry {
  Eigen::Vector3d origin;  // min corner, m
  int nx = 0, ny = 0, nz = 0;
  double resolution = 0.05;  // m per voxel, uniform

  Eigen::Vector3d voxel_center(int i, int j, int k) const {
    return origin + resolution * Eigen::Vector3d(i + 0.5, j + 0.5, k + 0.5);
  }
  int index(int i, int j, int k) const { return (k * ny + j) * nx + i; }
  long voxel_count() const { return long(nx) * ny * nz; }
};

struct OccupancyGrid {
  GridGeometry geom;
  std::vector<uint8_t> occupied;  // row-major, x fastest
};

struct DistanceQuery {
  double distance = 0.0;        // m, signed
  Eigen::Vector3d gradient;     // unit-seminorm
};

class SignedDistanceField {
 public:
  SignedDistanceField() = default;
  SignedDistanceField(GridGeometry geom, std::vector<float> distances)
      : geom_(geom), d_(std::move(distances)) {}

  const GridGeometry& geom() const { return geom_; }
  double at(int i, int j, int k) const { return d_[geom_.index(i, j, k)]; }
  const std::vector<float>& data() const { return d_; }

  bool contains(const Eigen::Vector3d& p) const;

  /// Trilinear distance and central-difference gradient (step resolution/2).
  /// Throws std::out_of_range outside the field bounds.
  DistanceQuery query(const Eigen::Vector3d& p) const;

  /// Distance only; same bounds contract as query().
  double distance(const Eigen::Vector3d& p) const;

  void save(std::ostream& os) const;
  static SignedDistanceField load(std::istream& is);

 private:
  double interpolate(const Eigen::Vector3d& p) const;

  GridGeometry geom_;
  std::vector<float> d_;
};

struct ExtrusionParams {
  double z_min = -0.1;  // vertical window of the voxel grid
  double z_max = 0.9;
};

/// Column rule: occupied below a valid floor mean and above a valid ceiling
/// mean, free in between; unknown layers are free. A voxel is occupied when
/// it intersects the obstacle half-space (boundary-tangent voxels stay free).
OccupancyGrid extrude_occupancy(const MultiElevationMap& snapshot,
                                const ExtrusionParams& params);

/// Exact signed EDT: distance to the nearest opposite-occupancy voxel centre,
/// positive in free space, negative inside obstacles, clamped to +-clamp.
SignedDistanceField build_sdf(const OccupancyGrid& occ, double clamp = 2.0);

struct ObstacleCost {
  double cost = 0.0;
  double dcost_dd = 0.0;
};

/// CHOMP piecewise obstacle cost:
///   -d + eps/2          d < 0
///   (d-eps)^2 / (2 eps)  0 <= d <= eps
///   0                   d > eps
ObstacleCost obstacle_cost(double d, double eps);

}  // namespace cnav
