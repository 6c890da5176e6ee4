#include "cnav/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace cnav {

namespace {

constexpr double kInf = 1e18;

// Felzenszwalb & Huttenlocher 1D squared distance transform.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z, int n) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared EDT (voxel units) to the seed set over the whole grid.
std::vector<double> edt_sq(const GridGeometry& g, const std::vector<uint8_t>& seed) {
  std::vector<double> dist(g.voxel_count());
  for (long i = 0; i < g.voxel_count(); ++i) dist[i] = seed[i] ? 0.0 : kInf;

  const int maxn = std::max({g.nx, g.ny, g.nz});
  std::vector<double> f(maxn), d(maxn);
  std::vector<int> v(maxn);
  std::vector<double> z(maxn + 1);

  // x pass
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) f[i] = dist[g.index(i, j, k)];
      edt_1d(f, d, v, z, g.nx);
      for (int i = 0; i < g.nx; ++i) dist[g.index(i, j, k)] = d[i];
    }
  // y pass
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i) {
      for (int j = 0; j < g.ny; ++j) f[j] = dist[g.index(i, j, k)];
      edt_1d(f, d, v, z, g.ny);
      for (int j = 0; j < g.ny; ++j) dist[g.index(i, j, k)] = d[j];
    }
  // z pass
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      for (int k = 0; k < g.nz; ++k) f[k] = dist[g.index(i, j, k)];
      edt_1d(f, d, v, z, g.nz);
      for (int k = 0; k < g.nz; ++k) dist[g.index(i, j, k)] = d[k];
    }
  return dist;
}

}  // namespace

OccupancyGrid extrude_occupancy(const MultiElevationMap& snapshot,
                                const ExtrusionParams& params) {
  const auto& mp = snapshot.params();
  OccupancyGrid occ;
  occ.geom.resolution = mp.resolution;
  const int n = snapshot.cells_per_side();
  occ.geom.nx = n;
  occ.geom.ny = n;
  occ.geom.nz = std::max(1, int(std::round((params.z_max - params.z_min) / mp.resolution)));
  occ.geom.origin = {snapshot.center_x() - 0.5 * n * mp.resolution,
                     snapshot.center_y() - 0.5 * n * mp.resolution, params.z_min};
  occ.occupied.assign(occ.geom.voxel_count(), 0);

  // layer means snap to the nearest voxel face: estimate noise below half a
  // cell cannot flip boundary voxels
  const double half = 0.5 * mp.resolution;
  auto face = [&](double h) {
    return params.z_min + std::round((h - params.z_min) / mp.resolution) * mp.resolution;
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto c = occ.geom.voxel_center(i, j, 0);
      const int cell = snapshot.cell_index(c.x(), c.y());
      if (cell < 0) continue;
      const auto& floor = snapshot.floor(cell);
      const auto& ceiling = snapshot.ceiling(cell);
      if (!floor.valid && !ceiling.valid) continue;
      const double floor_face = floor.valid ? face(floor.mean) : 0.0;
      const double ceiling_face = ceiling.valid ? face(ceiling.mean) : 0.0;
      for (int k = 0; k < occ.geom.nz; ++k) {
        const double zc = occ.geom.voxel_center(i, j, k).z();
        bool filled = false;
        if (floor.valid && zc - half < floor_face - 1e-9) filled = true;
        if (ceiling.valid && zc + half > ceiling_face + 1e-9) filled = true;
        if (filled) occ.occupied[occ.geom.index(i, j, k)] = 1;
      }
    }
  return occ;
}

SignedDistanceField build_sdf(const OccupancyGrid& occ, double clamp) {
  const auto& g = occ.geom;
  const long total = g.voxel_count();

  bool any_occupied = false, any_free = false;
  for (long i = 0; i < total; ++i) (occ.occupied[i] ? any_occupied : any_free) = true;

  std::vector<float> out(total);
  if (!any_occupied) {
    std::fill(out.begin(), out.end(), float(clamp));
    return SignedDistanceField(g, std::move(out));
  }
  if (!any_free) {
    std::fill(out.begin(), out.end(), float(-clamp));
    return SignedDistanceField(g, std::move(out));
  }

  const auto d_occ = edt_sq(g, occ.occupied);
  std::vector<uint8_t> free_mask(total);
  for (long i = 0; i < total; ++i) free_mask[i] = occ.occupied[i] ? 0 : 1;
  const auto d_free = edt_sq(g, free_mask);

  for (long i = 0; i < total; ++i) {
    const double d = occ.occupied[i] ? -std::sqrt(d_free[i]) : std::sqrt(d_occ[i]);
    out[i] = float(std::clamp(d * g.resolution, -clamp, clamp));
  }
  return SignedDistanceField(g, std::move(out));
}

bool SignedDistanceField::contains(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d hi = geom_.origin + geom_.resolution *
      Eigen::Vector3d(geom_.nx, geom_.ny, geom_.nz);
  return p.x() >= geom_.origin.x() && p.x() <= hi.x() && p.y() >= geom_.origin.y() &&
         p.y() <= hi.y() && p.z() >= geom_.origin.z() && p.z() <= hi.z();
}

double SignedDistanceField::interpolate(const Eigen::Vector3d& p) const {
  // sample coordinates in voxel-centre space, clamped to the data lattice
  const Eigen::Vector3d q = (p - geom_.origin) / geom_.resolution - Eigen::Vector3d::Constant(0.5);
  const auto clampf = [](double v, int n) { return std::clamp(v, 0.0, double(n - 1)); };
  const double x = clampf(q.x(), geom_.nx), y = clampf(q.y(), geom_.ny), z = clampf(q.z(), geom_.nz);
  const int i0 = std::min(int(x), geom_.nx - 2 >= 0 ? geom_.nx - 2 : 0);
  const int j0 = std::min(int(y), geom_.ny - 2 >= 0 ? geom_.ny - 2 : 0);
  const int k0 = std::min(int(z), geom_.nz - 2 >= 0 ? geom_.nz - 2 : 0);
  const int i1 = std::min(i0 + 1, geom_.nx - 1);
  const int j1 = std::min(j0 + 1, geom_.ny - 1);
  const int k1 = std::min(k0 + 1, geom_.nz - 1);
  const double fx = x - i0, fy = y - j0, fz = z - k0;

  auto val = [&](int i, int j, int k) { return double(d_[geom_.index(i, j, k)]); };
  const double c00 = val(i0, j0, k0) * (1 - fx) + val(i1, j0, k0) * fx;
  const double c10 = val(i0, j1, k0) * (1 - fx) + val(i1, j1, k0) * fx;
  const double c01 = val(i0, j0, k1) * (1 - fx) + val(i1, j0, k1) * fx;
  const double c11 = val(i0, j1, k1) * (1 - fx) + val(i1, j1, k1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

double SignedDistanceField::distance(const Eigen::Vector3d& p) const {
  if (!contains(p)) throw std::out_of_range("query outside distance field");
  return interpolate(p);
}

DistanceQuery SignedDistanceField::query(const Eigen::Vector3d& p) const {
  if (!contains(p)) throw std::out_of_range("query outside distance field");
  DistanceQuery out;
  out.distance = interpolate(p);
  const double h = 0.5 * geom_.resolution;
  for (int a = 0; a < 3; ++a) {
    Eigen::Vector3d plus = p, minus = p;
    plus[a] += h;
    minus[a] -= h;
    out.gradient[a] = (interpolate(plus) - interpolate(minus)) / (2.0 * h);
  }
  return out;
}

void SignedDistanceField::save(std::ostream& os) const {
  os.precision(9);
  os << "cnav_sdf 1\n";
  os << geom_.origin.x() << " " << geom_.origin.y() << " " << geom_.origin.z() << " "
     << geom_.nx << " " << geom_.ny << " " << geom_.nz << " " << geom_.resolution << "\n";
  for (long i = 0; i < geom_.voxel_count(); ++i) {
    if (i) os << " ";
    os << d_[i];
  }
  os << "\n";
}

SignedDistanceField SignedDistanceField::load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "cnav_sdf" || version != 1) throw std::runtime_error("not an sdf dump");
  GridGeometry g;
  is >> g.origin.x() >> g.origin.y() >> g.origin.z() >> g.nx >> g.ny >> g.nz >> g.resolution;
  std::vector<float> d(g.voxel_count());
  for (long i = 0; i < g.voxel_count(); ++i) is >> d[i];
  if (!is) throw std::runtime_error("truncated sdf dump");
  return SignedDistanceField(g, std::move(d));
}

ObstacleCost obstacle_cost(double d, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  ObstacleCost out;
  if (d < 0.0) {
    out.cost = -d + 0.5 * eps;
    out.dcost_dd = -1.0;
  } else if (d <= eps) {
    const double r = d - eps;
    out.cost = r * r / (2.0 * eps);
    out.dcost_dd = r / eps;
  }
  return out;
}

}  // namespace cnav
