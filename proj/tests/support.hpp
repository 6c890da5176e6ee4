#pragma once

// Shared test oracles. Everything here is independent of the library
// implementation paths it is used to check.

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "cnav/geometry.hpp"

namespace testsupport {

// World position of a collision point with the span/height coupling applied:
// perturbing z drags s along the linear model and vice versa. Used as the
// finite-difference reference for the Jacobian cross terms.
inline cnav::Vec3 world_with_coupling(const cnav::Configuration& base,
                                      const Eigen::Matrix<double, 5, 1>& delta,
                                      const cnav::CollisionPoint& pt,
                                      const cnav::RobotModel& model) {
  cnav::Configuration c = base;
  c.x += delta[0];
  c.y += delta[1];
  c.phi += delta[3];
  const double k = model.coupling_gain;
  // independent z move drags s; independent s move drags z
  c.z += delta[2] + (k == 0.0 ? 0.0 : delta[4] / k);
  c.s += delta[4] + k * delta[2];
  return collision_point_world(c, pt, model);
}

inline Eigen::Matrix<double, 3, 5> jacobian_fd(const cnav::Configuration& cfg,
                                               const cnav::CollisionPoint& pt,
                                               const cnav::RobotModel& model,
                                               double h = 1e-6) {
  Eigen::Matrix<double, 3, 5> J;
  for (int d = 0; d < 5; ++d) {
    Eigen::Matrix<double, 5, 1> dp = Eigen::Matrix<double, 5, 1>::Zero();
    dp[d] = h;
    const cnav::Vec3 plus = world_with_coupling(cfg, dp, pt, model);
    dp[d] = -h;
    const cnav::Vec3 minus = world_with_coupling(cfg, dp, pt, model);
    J.col(d) = (plus - minus) / (2.0 * h);
  }
  return J;
}

// Brute-force signed EDT oracle in squared voxel units:
// for each voxel, min squared distance to the opposite-occupancy set.
inline std::vector<double> brute_force_signed_sq(const std::vector<uint8_t>& occ,
                                                 int nx, int ny, int nz) {
  std::vector<double> out(occ.size(), 0.0);
  const double inf = 1e18;
  auto idx = [&](int i, int j, int k) { return (k * ny + j) * nx + i; };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const bool self = occ[idx(i, j, k)] != 0;
        double best = inf;
        for (int kk = 0; kk < nz; ++kk)
          for (int jj = 0; jj < ny; ++jj)
            for (int ii = 0; ii < nx; ++ii) {
              if ((occ[idx(ii, jj, kk)] != 0) == self) continue;
              const double d2 = double(i - ii) * (i - ii) +
                                double(j - jj) * (j - jj) +
                                double(k - kk) * (k - kk);
              if (d2 < best) best = d2;
            }
        if (best >= inf) best = inf;  // uniform grid: no opposite voxels
        out[idx(i, j, k)] = self ? -best : best;
      }
  return out;
}

}  // namespace testsupport
