#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "platoon/segments.hpp"
#include "platoon/trajectory.hpp"

namespace platoon {

/// Road-load and mass description shared by every platoon member under
/// normalization. Forces in N, mass in kg.
struct VehicleParams {
  double mass = 1500.0;
  double f0 = 213.0;
  double f1 = 0.0861;
  double f2 = 0.0027;
  double g = kGravity;
  double length = kDefaultVehicleLength;

  void validate() const;
};

/// VT-micro regression coefficients, K[i][j] multiplies v^i * a^j.
struct VtMicroCoefficients {
  std::array<std::array<double, 4>, 4> k = {{
      {-7.537, 0.4438, 0.1716, -0.0420},
      {0.0973, 0.0518, 0.0029, -0.0071},
      {-0.003, -7.42e-4, 1.09e-4, 1.16e-4},
      {5.3e-5, 6e-6, -1e-5, -6e-6},
  }};
};

/// Piecewise VSP fuel map: constant below `lower`, quadratic on
/// [lower, upper), linear from `upper` on. Rates in g/s, rho in g/L.
struct VspParams {
  double f = 2.48e-3;
  double alpha = 1.98e-3;
  double beta = 3.97e-2;
  double gamma = 2.01e-1;
  double delta = 7.93e-2;
  double epsilon = 2.48e-3;
  double rho = 850.0;
  double lower = -10.0;
  double upper = 10.0;

  void validate() const;
};

/// ARRB polynomial, producing ml/s.
struct ArrbParams {
  double beta1 = 0.666;
  double beta2 = 0.019;
  double beta3 = 0.001;
  double beta4 = 0.00005;
  double gamma1 = 0.12;
  double gamma2 = 0.058;
};

enum class FuelModel { VtMicro, Vsp, Arrb };
inline constexpr std::array<FuelModel, 3> kFuelModels = {FuelModel::VtMicro, FuelModel::Vsp,
                                                         FuelModel::Arrb};
std::string to_string(FuelModel model);
FuelModel parse_fuel_model(const std::string& text);

struct ModelCoefficients {
  VtMicroCoefficients vt_micro;
  VspParams vsp;
  ArrbParams arrb;
};

// --- instantaneous models -------------------------------------------------

/// Tractive power at the wheels [kW], clamped at zero.
double tractive_power(double v, double a, double theta, const VehicleParams& p);
/// VT-micro fuel rate [L/s].
double vt_micro_rate(double v, double a, const VtMicroCoefficients& k);
/// Vehicle specific power [W/kg]. theta enters linearly, in radians.
double vsp_power(double v, double a, double theta);
/// VSP fuel rate in g/s, before density conversion.
double vsp_rate_grams(double specific_power, const VspParams& p);
/// VSP fuel rate [L/s].
double vsp_rate(double specific_power, const VspParams& p);
/// ARRB fuel rate [L/s]; only positive acceleration enters the squared term.
double arrb_rate(double v, double a, const ArrbParams& p);
/// Dispatches to the selected model [L/s].
double fuel_rate(FuelModel model, double v, double a, double theta, const ModelCoefficients& c);

/// Jumps of the VSP map at its two breakpoints, in g/s (right minus left).
struct VspDiscontinuity {
  double at_lower = 0.0;
  double at_upper = 0.0;
};
VspDiscontinuity vsp_discontinuity(const VspParams& p);

// --- per-distance aggregation ---------------------------------------------

/// Tractive energy per distance [kWh/100 km] over samples [first, last].
/// The trajectory needs speed and acceleration; missing grade counts as flat.
/// Throws DataError when the covered distance is zero.
double tractive_energy(const Trajectory& traj, const VehicleParams& p);
double tractive_energy(const Trajectory& traj, const VehicleParams& p, std::size_t first,
                       std::size_t last);

/// Fuel consumption per distance [L/100 km].
double fuel_consumption(const Trajectory& traj, FuelModel model, const ModelCoefficients& c);
double fuel_consumption(const Trajectory& traj, FuelModel model, const ModelCoefficients& c,
                        std::size_t first, std::size_t last);

// --- platoon assessment ---------------------------------------------------

/// One vehicle, one segment class.
struct EnergyRow {
  std::string vehicle_id;
  std::size_t position = 0;  // 0 = leader
  SegmentClass segment = SegmentClass::Whole;
  double distance = 0.0;     // m
  double duration = 0.0;     // s
  double tractive = 0.0;     // kWh/100 km
  std::array<double, 3> fuel{};  // L/100 km, indexed like kFuelModels
  double tractive_ratio = 1.0;   // relative to the leader, same segment class
  std::array<double, 3> fuel_ratio{1.0, 1.0, 1.0};
  double mass = 0.0;             // mass actually applied
};

struct EnergyReport {
  std::vector<EnergyRow> rows;  // vehicle order, then Whole/Steady/Perturbation
  VspDiscontinuity vsp_jumps;
  bool normalized = true;

  const EnergyRow* find(const std::string& vehicle_id, SegmentClass segment) const;
};

struct AssessOptions {
  VehicleParams vehicle;
  ModelCoefficients coefficients;
  /// Apply `vehicle` to every member; otherwise per-vehicle masses apply.
  bool normalize = true;
  std::vector<std::pair<std::string, double>> vehicle_masses;
  /// When given, Steady and Perturbation rows are emitted next to Whole.
  std::optional<SegmentLabel> segments;
};

EnergyReport assess_platoon(const PlatoonDataset& dataset, const AssessOptions& options = {});

}  // namespace platoon
