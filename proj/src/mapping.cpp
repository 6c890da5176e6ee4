#include "cnav/mapping.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace cnav {

double gaussian_likelihood(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * M_PI * variance);
}

PointClass classify(double h, const ElevationEstimate& floor,
                    const ElevationEstimate& ceiling, double body_ref,
                    const MappingParams& params) {
  const bool below = h <= body_ref;
  const double z_floor =
      floor.valid ? std::abs(h - floor.mean) / std::sqrt(floor.variance)
                  : std::numeric_limits<double>::infinity();
  const double z_ceiling =
      ceiling.valid ? std::abs(h - ceiling.mean) / std::sqrt(ceiling.variance)
                    : std::numeric_limits<double>::infinity();

  if (floor.valid && ceiling.valid) {
    const double pf = gaussian_likelihood(h, floor.mean, floor.variance) * params.prior_floor;
    const double pc = gaussian_likelihood(h, ceiling.mean, ceiling.variance) *
                      (1.0 - params.prior_floor);
    const bool floor_wins = pf >= pc;
    const double z_best = floor_wins ? z_floor : z_ceiling;
    if (z_best <= params.outlier_gate) return floor_wins ? PointClass::Floor : PointClass::Ceiling;
    return below ? PointClass::NewFloor : PointClass::NewCeiling;
  }
  if (floor.valid) {
    if (below && z_floor <= params.outlier_gate) return PointClass::Floor;
    if (below) return PointClass::NewFloor;
    return z_ceiling <= params.outlier_gate ? PointClass::Ceiling : PointClass::NewCeiling;
  }
  if (ceiling.valid) {
    if (!below && z_ceiling <= params.outlier_gate) return PointClass::Ceiling;
    if (!below) return PointClass::NewCeiling;
    return PointClass::NewFloor;
  }
  return below ? PointClass::NewFloor : PointClass::NewCeiling;
}

ElevationEstimate fuse(const ElevationEstimate& est, double meas_height,
                       double meas_variance) {
  if (meas_variance <= 0.0) throw std::invalid_argument("measurement variance must be positive");
  if (!est.valid) return {meas_height, meas_variance, true};
  if (est.variance <= 0.0) throw std::invalid_argument("estimate variance must be positive");
  const double denom = meas_variance + est.variance;
  ElevationEstimate out;
  out.mean = (meas_variance * est.mean + est.variance * meas_height) / denom;
  out.variance = est.variance * meas_variance / denom;
  out.valid = true;
  return out;
}

namespace {

double snap(double v, double res) { return std::round(v / res) * res; }

}  // namespace

MultiElevationMap::MultiElevationMap(const MappingParams& params, double center_x,
                                     double center_y)
    : params_(params),
      n_(static_cast<int>(std::round(params.side_length / params.resolution))),
      cx_(snap(center_x, params.resolution)),
      cy_(snap(center_y, params.resolution)),
      floor_(n_ * n_),
      ceiling_(n_ * n_),
      floor_outliers_(n_ * n_, 0),
      ceiling_outliers_(n_ * n_, 0) {
  if (n_ <= 0) throw std::invalid_argument("map must have at least one cell");
}

int MultiElevationMap::cell_index(double x, double y) const {
  const double half = 0.5 * n_ * params_.resolution;
  const double lx = x - (cx_ - half);
  const double ly = y - (cy_ - half);
  const int i = static_cast<int>(std::floor(lx / params_.resolution));
  const int j = static_cast<int>(std::floor(ly / params_.resolution));
  if (i < 0 || i >= n_ || j < 0 || j >= n_) return -1;
  return j * n_ + i;
}

Eigen::Vector2d MultiElevationMap::cell_center(int index) const {
  const int i = index % n_;
  const int j = index / n_;
  const double half = 0.5 * n_ * params_.resolution;
  return {cx_ - half + (i + 0.5) * params_.resolution,
          cy_ - half + (j + 0.5) * params_.resolution};
}

ScanStats MultiElevationMap::ingest_scan(const std::vector<DepthMeasurement>& points,
                                         double body_ref) {
  ScanStats stats;
  for (const auto& m : points) {
    const Eigen::Vector3d bin = m.point + params_.bin_push * m.ray;
    const int idx = cell_index(bin.x(), bin.y());
    if (idx < 0) {
      ++stats.dropped_outside;
      continue;
    }
    const double h = m.point.z();
    ElevationEstimate& f = floor_[idx];
    ElevationEstimate& c = ceiling_[idx];
    const PointClass cls = classify(h, f, c, body_ref, params_);

    auto would_invert = [&](const ElevationEstimate& nf, const ElevationEstimate& nc) {
      return nf.valid && nc.valid && nc.mean <= nf.mean + params_.min_separation;
    };

    switch (cls) {
      case PointClass::Floor: {
        const ElevationEstimate nf = fuse(f, h, m.variance);
        if (would_invert(nf, c)) { ++stats.dropped_separation; break; }
        f = nf;
        if (floor_outliers_[idx] > 0) --floor_outliers_[idx];
        ++stats.fused_floor;
        break;
      }
      case PointClass::Ceiling: {
        const ElevationEstimate nc = fuse(c, h, m.variance);
        if (would_invert(f, nc)) { ++stats.dropped_separation; break; }
        c = nc;
        if (ceiling_outliers_[idx] > 0) --ceiling_outliers_[idx];
        ++stats.fused_ceiling;
        break;
      }
      case PointClass::NewFloor: {
        // replacing a live layer needs sustained evidence; initializing an
        // empty one does not
        if (f.valid && ++floor_outliers_[idx] < params_.outlier_reinit_count) {
          ++stats.dropped_gate;
          break;
        }
        const ElevationEstimate nf{h, m.variance, true};
        if (would_invert(nf, c)) { ++stats.dropped_separation; break; }
        f = nf;
        floor_outliers_[idx] = 0;
        ++stats.new_floor;
        break;
      }
      case PointClass::NewCeiling: {
        if (c.valid && ++ceiling_outliers_[idx] < params_.outlier_reinit_count) {
          ++stats.dropped_gate;
          break;
        }
        const ElevationEstimate nc{h, m.variance, true};
        if (would_invert(f, nc)) { ++stats.dropped_separation; break; }
        c = nc;
        ceiling_outliers_[idx] = 0;
        ++stats.new_ceiling;
        break;
      }
    }
  }
  return stats;
}

void MultiElevationMap::recenter(double new_x, double new_y) {
  const double sx = snap(new_x, params_.resolution);
  const double sy = snap(new_y, params_.resolution);
  const int di = static_cast<int>(std::round((sx - cx_) / params_.resolution));
  const int dj = static_cast<int>(std::round((sy - cy_) / params_.resolution));
  if (di == 0 && dj == 0) return;

  std::vector<ElevationEstimate> nf(n_ * n_), nc(n_ * n_);
  std::vector<uint8_t> nfo(n_ * n_, 0), nco(n_ * n_, 0);
  for (int j = 0; j < n_; ++j) {
    for (int i = 0; i < n_; ++i) {
      const int si = i + di;
      const int sj = j + dj;
      if (si < 0 || si >= n_ || sj < 0 || sj >= n_) continue;
      nf[j * n_ + i] = floor_[sj * n_ + si];
      nc[j * n_ + i] = ceiling_[sj * n_ + si];
      nfo[j * n_ + i] = floor_outliers_[sj * n_ + si];
      nco[j * n_ + i] = ceiling_outliers_[sj * n_ + si];
    }
  }
  floor_ = std::move(nf);
  ceiling_ = std::move(nc);
  floor_outliers_ = std::move(nfo);
  ceiling_outliers_ = std::move(nco);
  cx_ = sx;
  cy_ = sy;
}

void MultiElevationMap::inflate_variance(double distance_moved) {
  if (distance_moved <= 0.0) return;
  const double add = params_.drift_variance * distance_moved;
  for (auto* layer : {&floor_, &ceiling_})
    for (auto& e : *layer)
      if (e.valid) e.variance += add;
}

void MultiElevationMap::save(std::ostream& os) const {
  os.precision(17);
  os << "cnav_multi_elevation_map 1\n";
  os << cx_ << " " << cy_ << " " << params_.side_length << " " << params_.resolution << "\n";
  auto dump_layer = [&](const std::vector<ElevationEstimate>& layer, bool mean) {
    for (int idx = 0; idx < n_ * n_; ++idx) {
      if (idx) os << " ";
      if (!layer[idx].valid)
        os << "nan";
      else
        os << (mean ? layer[idx].mean : layer[idx].variance);
    }
    os << "\n";
  };
  dump_layer(floor_, true);
  dump_layer(floor_, false);
  dump_layer(ceiling_, true);
  dump_layer(ceiling_, false);
}

MultiElevationMap MultiElevationMap::load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "cnav_multi_elevation_map" || version != 1)
    throw std::runtime_error("not a map dump");
  MappingParams p;
  double cx, cy;
  is >> cx >> cy >> p.side_length >> p.resolution;
  MultiElevationMap map(p, cx, cy);
  const int total = map.n_ * map.n_;
  auto read_layer = [&](std::vector<ElevationEstimate>& layer, bool mean) {
    for (int idx = 0; idx < total; ++idx) {
      std::string tok;
      is >> tok;
      if (tok == "nan") {
        layer[idx].valid = false;
      } else {
        if (mean)
          layer[idx].mean = std::stod(tok);
        else
          layer[idx].variance = std::stod(tok);
        layer[idx].valid = true;
      }
    }
  };
  read_layer(map.floor_, true);
  read_layer(map.floor_, false);
  read_layer(map.ceiling_, true);
  read_layer(map.ceiling_, false);
  if (!is) throw std::runtime_error("truncated map dump");
  return map;
}

}  // namespace cnav
