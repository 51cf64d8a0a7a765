#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace platoon {

/// Raised for malformed or physically inconsistent input data. Carries the
/// offending row (1-based, header excluded) and column when known.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt,
                     std::string column = {})
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  std::optional<std::size_t> row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::optional<std::size_t> row_;
  std::string column_;
};

inline constexpr double kDefaultGridStep = 0.1;      // s
inline constexpr int kDefaultAccelWindow = 5;        // samples
inline constexpr double kDefaultVehicleLength = 5.0; // m
inline constexpr double kGravity = 9.81;             // m/s^2

/// Kinematic state of one vehicle at one instant. Optional quantities are
/// absent when neither recorded nor derived yet.
struct TrajectorySample {
  double t = 0.0;
  double v = 0.0;
  std::optional<double> a;
  std::optional<double> s;
  std::optional<double> h;
  std::optional<double> theta;
};

/// Column-oriented time series for a single vehicle. The optional channels
/// (a, s, h, theta) are either empty or exactly as long as t.
struct Trajectory {
  std::string vehicle_id;
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> a;
  std::vector<double> s;
  std::vector<double> h;
  std::vector<double> theta;
  /// Set when grade was requested but no altitude was available.
  bool grade_missing = false;

  std::size_t size() const noexcept { return t.size(); }
  bool empty() const noexcept { return t.empty(); }
  bool has_accel() const noexcept { return !a.empty(); }
  bool has_position() const noexcept { return !s.empty(); }
  bool has_altitude() const noexcept { return !h.empty(); }
  bool has_grade() const noexcept { return !theta.empty(); }
  double duration() const noexcept { return empty() ? 0.0 : t.back() - t.front(); }

  TrajectorySample sample(std::size_t i) const;
  void push_back(const TrajectorySample& sample);

  /// Checks channel lengths, v >= 0, strictly increasing t, non-decreasing s
  /// and |theta| < pi/2. Throws DataError on the first violation.
  void validate() const;
  /// Returns the grid step if t is uniform within `rel_tol`, otherwise nullopt.
  std::optional<double> uniform_step(double rel_tol = 1e-6) const;
};

enum class DrivingMode { Human, Acc, Mixed };

std::string to_string(DrivingMode mode);
DrivingMode parse_driving_mode(const std::string& text);

/// Synchronized platoon. vehicles[0] is the leader; ivs[k] is the spacing
/// between vehicles[k] and vehicles[k + 1] (empty when not available).
struct PlatoonDataset {
  std::vector<Trajectory> vehicles;
  std::vector<std::vector<double>> ivs;
  DrivingMode mode = DrivingMode::Human;
  std::string name;
  std::string direction;

  std::size_t pair_count() const noexcept {
    return vehicles.empty() ? 0 : vehicles.size() - 1;
  }
  bool has_ivs() const noexcept;
  /// Same time grid on every vehicle and ivs lengths matching it.
  void validate() const;
};

// --- numerics shared by every module -------------------------------------

/// Trapezoidal integral of y over t. Zero-length intervals contribute nothing.
double trapezoid(std::span<const double> t, std::span<const double> y);
/// Same, restricted to samples [first, last] inclusive.
double trapezoid(std::span<const double> t, std::span<const double> y, std::size_t first,
                 std::size_t last);
/// Running trapezoidal integral, starting from `initial`.
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y,
                                         double initial = 0.0);
/// Piecewise-linear interpolation of (xs, ys) at x; clamps outside the range.
double interpolate(std::span<const double> xs, std::span<const double> ys, double x);

// --- operations -----------------------------------------------------------

/// Linear interpolation of every present channel onto the uniform grid
/// t_first + k*dt covering [t_first, t_last].
Trajectory resample(const Trajectory& traj, double dt);
/// Resamples every vehicle and ivs series onto one shared grid.
PlatoonDataset resample(const PlatoonDataset& dataset, double dt);

/// Centered finite difference of v followed by a centered moving average of
/// `window` samples (truncated at the ends). Recorded acceleration is kept
/// unless `force` is set.
Trajectory derive_acceleration(const Trajectory& traj, int window = kDefaultAccelWindow,
                               bool force = false);

/// theta = atan(dh/ds) over a centered window of `window` samples. Where ds
/// is below `min_ds` the previous grade is carried forward. Without altitude
/// theta is all zeros and grade_missing is set. Missing s is integrated from v.
Trajectory derive_grade(const Trajectory& traj, int window = 3, double min_ds = 0.5);

/// Travelled distance derived from v when s is absent; otherwise unchanged.
Trajectory ensure_position(const Trajectory& traj);

/// Fills every missing ivs series from positions: s_leader - s_follower - L.
/// Provided series pass through untouched. Throws DataError on negative
/// spacing, naming the pair and the first offending time.
PlatoonDataset compute_ivs(const PlatoonDataset& dataset,
                           double vehicle_length = kDefaultVehicleLength);

struct PrepareOptions {
  double dt = kDefaultGridStep;
  int accel_window = kDefaultAccelWindow;
  bool force_accel = false;
  double vehicle_length = kDefaultVehicleLength;
};

/// resample -> compute_ivs -> derive_acceleration -> derive_grade, the chain
/// used before any energy or behavior analysis. Spacing is only derived from
/// recorded positions, never from integrated speed.
PlatoonDataset prepare(const PlatoonDataset& raw, const PrepareOptions& options = {});

}  // namespace platoon
