#include "platoon/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace platoon {

namespace {

// kWh/100 km from kW*s over m: (kW*s / 3600) / (m / 1e5) = 1/0.036.
constexpr double kEnergyScale = 0.036;
// L/100 km from L over m.
constexpr double kFuelScale = 1e-5;

struct Integrals {
  double numerator = 0.0;  // integral of the rate
  double distance = 0.0;   // integral of v
  double duration = 0.0;
};

template <typename Rate>
Integrals integrate(const Trajectory& traj, std::size_t first, std::size_t last, Rate rate) {
  if (traj.size() < 2) throw DataError("vehicle " + traj.vehicle_id + ": needs >= 2 samples");
  if (!traj.has_accel()) {
    throw DataError("vehicle " + traj.vehicle_id + ": acceleration not available");
  }
  if (last >= traj.size() || first > last) throw std::out_of_range("bad sample range");
  Integrals out;
  double prev = rate(first);
  for (std::size_t i = first + 1; i <= last; ++i) {
    const double cur = rate(i);
    const double dt = traj.t[i] - traj.t[i - 1];
    out.numerator += 0.5 * (prev + cur) * dt;
    out.distance += 0.5 * (traj.v[i] + traj.v[i - 1]) * dt;
    out.duration += dt;
    prev = cur;
  }
  return out;
}

double grade_at(const Trajectory& traj, std::size_t i) {
  return traj.has_grade() ? traj.theta[i] : 0.0;
}

Integrals tractive_integrals(const Trajectory& traj, const VehicleParams& p, std::size_t first,
                             std::size_t last) {
  return integrate(traj, first, last, [&](std::size_t i) {
    return tractive_power(traj.v[i], traj.a[i], grade_at(traj, i), p);
  });
}

Integrals fuel_integrals(const Trajectory& traj, FuelModel model, const ModelCoefficients& c,
                         std::size_t first, std::size_t last) {
  return integrate(traj, first, last, [&](std::size_t i) {
    return fuel_rate(model, traj.v[i], traj.a[i], grade_at(traj, i), c);
  });
}

double per_distance(const Integrals& in, double scale, const std::string& id) {
  if (!(in.distance > 0.0)) {
    throw DataError("vehicle " + id + ": zero distance travelled, consumption undefined");
  }
  return in.numerator / (scale * in.distance);
}

Integrals& operator+=(Integrals& lhs, const Integrals& rhs) {
  lhs.numerator += rhs.numerator;
  lhs.distance += rhs.distance;
  lhs.duration += rhs.duration;
  return lhs;
}

}  // namespace

void VehicleParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("vehicle mass must be positive");
  if (f0 < 0.0 || f1 < 0.0 || f2 < 0.0) {
    throw std::invalid_argument("road load coefficients must be non-negative");
  }
  if (!(length > 0.0)) throw std::invalid_argument("vehicle length must be positive");
  if (g != kGravity) throw std::invalid_argument("gravitational acceleration is fixed at 9.81");
}

void VspParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("fuel density must be positive");
  if (!(lower < upper)) throw std::invalid_argument("VSP mode bounds must satisfy lower < upper");
}

std::string to_string(FuelModel model) {
  switch (model) {
    case FuelModel::VtMicro: return "vt_micro";
    case FuelModel::Vsp: return "vsp";
    case FuelModel::Arrb: return "arrb";
  }
  return "vt_micro";
}

FuelModel parse_fuel_model(const std::string& text) {
  for (auto m : kFuelModels) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown fuel model '" + text + "'");
}

double tractive_power(double v, double a, double theta, const VehicleParams& p) {
  const double force =
      p.f0 + p.f1 * v + p.f2 * v * v + 1.03 * p.mass * a + p.mass * p.g * std::sin(theta);
  return 1e-3 * std::max(0.0, force * v);
}

double vt_micro_rate(double v, double a, const VtMicroCoefficients& k) {
  double exponent = 0.0;
  double vi = 1.0;
  for (int i = 0; i < 4; ++i) {
    double aj = 1.0;
    for (int j = 0; j < 4; ++j) {
      exponent += k.k[i][j] * vi * aj;
      aj *= a;
    }
    vi *= v;
  }
  return std::exp(exponent);
}

double vsp_power(double v, double a, double theta) {
  return v * (1.1 * a + 9.81 * theta + 0.132) + 3.02e-4 * v * v * v;
}

double vsp_rate_grams(double specific_power, const VspParams& p) {
  if (specific_power < p.lower) return p.f;
  // The linear branch owns the shared upper breakpoint.
  if (specific_power < p.upper) {
    return p.alpha * specific_power * specific_power + p.beta * specific_power + p.gamma;
  }
  return p.delta * specific_power + p.epsilon;
}

double vsp_rate(double specific_power, const VspParams& p) {
  return vsp_rate_grams(specific_power, p) / p.rho;
}

double arrb_rate(double v, double a, const ArrbParams& p) {
  const double a_pos = std::max(0.0, a);
  const double ml_per_s = p.beta1 + p.beta2 * v + p.beta3 * v * v + p.beta4 * v * v * v +
                          p.gamma1 * v * a + p.gamma2 * v * a_pos * a_pos;
  return 1e-3 * ml_per_s;
}

double fuel_rate(FuelModel model, double v, double a, double theta, const ModelCoefficients& c) {
  switch (model) {
    case FuelModel::VtMicro: return vt_micro_rate(v, a, c.vt_micro);
    case FuelModel::Vsp: return vsp_rate(vsp_power(v, a, theta), c.vsp);
    case FuelModel::Arrb: return arrb_rate(v, a, c.arrb);
  }
  return 0.0;
}

VspDiscontinuity vsp_discontinuity(const VspParams& p) {
  auto quadratic = [&](double x) { return p.alpha * x * x + p.beta * x + p.gamma; };
  return {quadratic(p.lower) - p.f, (p.delta * p.upper + p.epsilon) - quadratic(p.upper)};
}

double tractive_energy(const Trajectory& traj, const VehicleParams& p) {
  return tractive_energy(traj, p, 0, traj.empty() ? 0 : traj.size() - 1);
}

double tractive_energy(const Trajectory& traj, const VehicleParams& p, std::size_t first,
                       std::size_t last) {
  return per_distance(tractive_integrals(traj, p, first, last), kEnergyScale, traj.vehicle_id);
}

double fuel_consumption(const Trajectory& traj, FuelModel model, const ModelCoefficients& c) {
  return fuel_consumption(traj, model, c, 0, traj.empty() ? 0 : traj.size() - 1);
}

double fuel_consumption(const Trajectory& traj, FuelModel model, const ModelCoefficients& c,
                        std::size_t first, std::size_t last) {
  return per_distance(fuel_integrals(traj, model, c, first, last), kFuelScale, traj.vehicle_id);
}

const EnergyRow* EnergyReport::find(const std::string& vehicle_id, SegmentClass segment) const {
  auto it = std::find_if(rows.begin(), rows.end(), [&](const EnergyRow& r) {
    return r.vehicle_id == vehicle_id && r.segment == segment;
  });
  return it == rows.end() ? nullptr : &*it;
}

EnergyReport assess_platoon(const PlatoonDataset& dataset, const AssessOptions& options) {
  options.vehicle.validate();
  options.coefficients.vsp.validate();
  if (dataset.vehicles.empty()) throw DataError("assess: dataset has no vehicles");

  std::vector<SegmentClass> classes = {SegmentClass::Whole};
  if (options.segments) {
    options.segments->validate();
    classes.push_back(SegmentClass::Steady);
    classes.push_back(SegmentClass::Perturbation);
  }

  EnergyReport report;
  report.normalized = options.normalize;
  report.vsp_jumps = vsp_discontinuity(options.coefficients.vsp);

  for (std::size_t v = 0; v < dataset.vehicles.size(); ++v) {
    const auto& traj = dataset.vehicles[v];
    VehicleParams params = options.vehicle;
    if (!options.normalize) {
      for (const auto& [id, mass] : options.vehicle_masses) {
        if (id == traj.vehicle_id) params.mass = mass;
      }
      params.validate();
    }

    for (SegmentClass cls : classes) {
      std::vector<std::pair<std::size_t, std::size_t>> ranges;
      if (cls == SegmentClass::Whole) {
        ranges.emplace_back(0, traj.size() - 1);
      } else {
        for (const auto& seg : options.segments->of_class(cls)) {
          ranges.push_back(sample_range(traj.t, seg));
        }
      }
      if (ranges.empty()) continue;

      Integrals tractive;
      std::array<Integrals, 3> fuel{};
      for (auto [first, last] : ranges) {
        tractive += tractive_integrals(traj, params, first, last);
        for (std::size_t m = 0; m < kFuelModels.size(); ++m) {
          fuel[m] += fuel_integrals(traj, kFuelModels[m], options.coefficients, first, last);
        }
      }
      EnergyRow row;
      row.vehicle_id = traj.vehicle_id;
      row.position = v;
      row.segment = cls;
      row.distance = tractive.distance;
      row.duration = tractive.duration;
      row.mass = params.mass;
      row.tractive = per_distance(tractive, kEnergyScale, traj.vehicle_id);
      for (std::size_t m = 0; m < fuel.size(); ++m) {
        row.fuel[m] = per_distance(fuel[m], kFuelScale, traj.vehicle_id);
      }
      report.rows.push_back(row);
    }
  }

  for (auto& row : report.rows) {
    const EnergyRow* lead = report.find(dataset.vehicles.front().vehicle_id, row.segment);
    if (lead == nullptr) continue;
    row.tractive_ratio = lead->tractive > 0.0 ? row.tractive / lead->tractive : 0.0;
    for (std::size_t m = 0; m < row.fuel.size(); ++m) {
      row.fuel_ratio[m] = row.fuel[m] / lead->fuel[m];
    }
  }
  return report;
}

}  // namespace platoon
