#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

// Robot-centric multi-elevation map: a 2D grid that follows the robot and
// keeps an independent Gaussian floor and ceiling height estimate per cell.
// Measurements are classified floor/ceiling by maximum a posteriori and then
// fused with a per-cell scalar Kalman filter.
//
// Concurrency: ingest/recenter mutate the map and must be serialized by the
// caller. A MapSnapshot is a value copy and can be shared freely.

namespace cnav {

struct ElevationEstimate {
  double mean = 0.0;      // m
  double variance = 0.0;  // m^2
  bool valid = false;
};

struct DepthMeasurement {
  Eigen::Vector3d point;  // map frame, m
  double variance;        // m^2
  // unit ray direction from the sensor; used to bin surface hits into the
  // cell behind the surface rather than the free cell they graze
  Eigen::Vector3d ray = Eigen::Vector3d::Zero();
};

enum class PointClass { Floor, Ceiling, NewFloor, NewCeiling };

struct MappingParams {
  double side_length = 6.0;    // m
  double resolution = 0.05;    // m per cell
  double prior_floor = 0.5;    // P(floor); P(ceiling) = 1 - prior_floor
  double outlier_gate = 3.0;   // reinit beyond this many sigmas
  int outlier_reinit_count = 5;  // leaky gated-hit count before a reinit
  double bin_push = 0.025;     // m, cell binning advance along the ray
  double drift_variance = 1e-4;  // m^2 added per meter moved
  double min_separation = 0.0;   // reject fusions that would invert layers
};

struct ScanStats {
  int fused_floor = 0;
  int fused_ceiling = 0;
  int new_floor = 0;
  int new_ceiling = 0;
  int dropped_outside = 0;
  int dropped_separation = 0;
  int dropped_gate = 0;  // gated outliers awaiting confirmation
};

/// Normal density, exposed for the classification tests.
double gaussian_likelihood(double x, double mean, double variance);

/// MAP classification of a height measurement against one cell's layers.
/// body_ref is the robot-body reference height: with no usable layer match,
/// measurements below it start a floor, above it a ceiling.
PointClass classify(double h, const ElevationEstimate& floor,
                    const ElevationEstimate& ceiling, double body_ref,
                    const MappingParams& params);

/// Scalar Kalman fusion of a height measurement into an estimate.
/// An invalid estimate is initialized to the measurement.
ElevationEstimate fuse(const ElevationEstimate& est, double meas_height,
                       double meas_variance);

class MultiElevationMap {
 public:
  MultiElevationMap(const MappingParams& params, double center_x, double center_y);

  const MappingParams& params() const { return params_; }
  int cells_per_side() const { return n_; }
  double center_x() const { return cx_; }
  double center_y() const { return cy_; }

  /// Cell index for a map-frame position, or -1 outside the grid.
  int cell_index(double x, double y) const;
  /// Centre position of a cell.
  Eigen::Vector2d cell_center(int index) const;

  const ElevationEstimate& floor(int index) const { return floor_[index]; }
  const ElevationEstimate& ceiling(int index) const { return ceiling_[index]; }

  /// Classify-then-fuse a batch of measurements. body_ref as in classify().
  ScanStats ingest_scan(const std::vector<DepthMeasurement>& points, double body_ref);

  /// Translate the grid by whole cells towards new_center. Retained cells are
  /// bit-identical; cells entering the window are invalid.
  void recenter(double new_x, double new_y);

  /// Motion-uncertainty inflation: add drift_variance * distance to every
  /// valid layer variance. Called by the odometry integration, not recenter.
  void inflate_variance(double distance_moved);

  void save(std::ostream& os) const;
  static MultiElevationMap load(std::istream& is);

 private:
  MappingParams params_;
  int n_;
  double cx_, cy_;  // grid centre, snapped to the cell lattice
  std::vector<ElevationEstimate> floor_;
  std::vector<ElevationEstimate> ceiling_;
  // leaky gated-outlier counts per cell: gated hits increment, agreeing
  // fusions decrement, a full count reinitializes the layer
  std::vector<uint8_t> floor_outliers_;
  std::vector<uint8_t> ceiling_outliers_;
};

}  // namespace cnav
