#include "platoon/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace platoon {

namespace {

std::string format_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

void check_channel(const std::vector<double>& channel, std::size_t n, const char* name,
                   const std::string& id) {
  if (!channel.empty() && channel.size() != n) {
    throw DataError("vehicle " + id + ": channel '" + name + "' has " +
                    std::to_string(channel.size()) + " samples, expected " + std::to_string(n));
  }
}

// Position of x within a sorted grid, snapping to a node when within tol.
struct Bracket {
  std::size_t lo;
  double frac;  // 0 means exactly at node lo
};

Bracket locate(std::span<const double> xs, double x, double tol) {
  if (x <= xs.front()) return {0, 0.0};
  if (x >= xs.back()) return {xs.size() - 1, 0.0};
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  std::size_t lo = hi - 1;
  if (x - xs[lo] <= tol) return {lo, 0.0};
  if (xs[hi] - x <= tol) return {hi, 0.0};
  return {lo, (x - xs[lo]) / (xs[hi] - xs[lo])};
}

double eval(const std::vector<double>& ys, const Bracket& b) {
  if (b.frac == 0.0) return ys[b.lo];
  return ys[b.lo] + b.frac * (ys[b.lo + 1] - ys[b.lo]);
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  const double span = t1 - t0;
  const auto steps = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = t0 + static_cast<double>(k) * dt;
  return grid;
}

}  // namespace

TrajectorySample Trajectory::sample(std::size_t i) const {
  TrajectorySample out;
  out.t = t.at(i);
  out.v = v.at(i);
  if (has_accel()) out.a = a[i];
  if (has_position()) out.s = s[i];
  if (has_altitude()) out.h = h[i];
  if (has_grade()) out.theta = theta[i];
  return out;
}

void Trajectory::push_back(const TrajectorySample& smp) {
  const bool first = t.empty();
  auto push_optional = [first](std::vector<double>& channel, const std::optional<double>& value,
                               const char* name) {
    if (!first && channel.empty() == value.has_value()) {
      throw std::invalid_argument(std::string("inconsistent optional channel '") + name + "'");
    }
    if (value) channel.push_back(*value);
  };
  push_optional(a, smp.a, "a");
  push_optional(s, smp.s, "s");
  push_optional(h, smp.h, "h");
  push_optional(theta, smp.theta, "theta");
  t.push_back(smp.t);
  v.push_back(smp.v);
}

void Trajectory::validate() const {
  const std::size_t n = t.size();
  if (v.size() != n) throw DataError("vehicle " + vehicle_id + ": speed length mismatch");
  check_channel(a, n, "a", vehicle_id);
  check_channel(s, n, "s", vehicle_id);
  check_channel(h, n, "h", vehicle_id);
  check_channel(theta, n, "theta", vehicle_id);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) {
      throw DataError("vehicle " + vehicle_id + ": invalid speed " + std::to_string(v[i]) +
                          " at t=" + format_time(t[i]),
                      i + 1, vehicle_id);
    }
    if (i > 0 && !(t[i] > t[i - 1])) {
      throw DataError("vehicle " + vehicle_id + ": time not strictly increasing at t=" +
                          format_time(t[i]),
                      i + 1);
    }
    if (!s.empty() && i > 0 && s[i] < s[i - 1]) {
      throw DataError("vehicle " + vehicle_id + ": distance decreasing at t=" + format_time(t[i]),
                      i + 1, vehicle_id);
    }
    if (!theta.empty() && !(std::abs(theta[i]) < std::numbers::pi / 2)) {
      throw DataError("vehicle " + vehicle_id + ": grade out of range at t=" + format_time(t[i]),
                      i + 1, vehicle_id);
    }
  }
}

std::optional<double> Trajectory::uniform_step(double rel_tol) const {
  if (t.size() < 2) return std::nullopt;
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) return std::nullopt;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > rel_tol * dt + 1e-12) return std::nullopt;
  }
  return dt;
}

std::string to_string(DrivingMode mode) {
  switch (mode) {
    case DrivingMode::Human: return "Human";
    case DrivingMode::Acc: return "ACC";
    case DrivingMode::Mixed: return "Mixed";
  }
  return "Human";
}

DrivingMode parse_driving_mode(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "human") return DrivingMode::Human;
  if (lower == "acc") return DrivingMode::Acc;
  if (lower == "mixed") return DrivingMode::Mixed;
  throw std::invalid_argument("unknown driving mode '" + text + "'");
}

bool PlatoonDataset::has_ivs() const noexcept {
  if (ivs.size() != pair_count()) return false;
  return std::all_of(ivs.begin(), ivs.end(), [](const auto& series) { return !series.empty(); });
}

void PlatoonDataset::validate() const {
  if (vehicles.empty()) throw DataError("dataset has no vehicles");
  const auto& grid = vehicles.front().t;
  for (const auto& traj : vehicles) {
    traj.validate();
    if (traj.t != grid) {
      throw DataError("vehicle " + traj.vehicle_id + " is not on the leader's time grid");
    }
  }
  if (!ivs.empty() && ivs.size() != pair_count()) {
    throw DataError("expected " + std::to_string(pair_count()) + " ivs series, got " +
                    std::to_string(ivs.size()));
  }
  for (std::size_t k = 0; k < ivs.size(); ++k) {
    if (!ivs[k].empty() && ivs[k].size() != grid.size()) {
      throw DataError("ivs series " + std::to_string(k) + " length mismatch");
    }
  }
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  if (t.size() < 2) return 0.0;
  return trapezoid(t, y, 0, t.size() - 1);
}

double trapezoid(std::span<const double> t, std::span<const double> y, std::size_t first,
                 std::size_t last) {
  if (t.size() != y.size()) throw std::invalid_argument("trapezoid: length mismatch");
  if (last >= t.size() || first > last) throw std::out_of_range("trapezoid: bad index range");
  double sum = 0.0;
  for (std::size_t i = first + 1; i <= last; ++i) {
    sum += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
  }
  return sum;
}

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y,
                                         double initial) {
  if (t.size() != y.size()) throw std::invalid_argument("cumulative_trapezoid: length mismatch");
  std::vector<double> out(t.size(), initial);
  for (std::size_t i = 1; i < t.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
  }
  return out;
}

double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("interpolate: bad input");
  const Bracket b = locate(xs, x, 0.0);
  if (b.frac == 0.0) return ys[b.lo];
  return ys[b.lo] + b.frac * (ys[b.lo + 1] - ys[b.lo]);
}

Trajectory resample(const Trajectory& traj, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("resample: dt must be positive");
  if (traj.size() < 2) throw DataError("resample: vehicle " + traj.vehicle_id +
                                       " needs at least 2 samples");
  if (dt > traj.duration()) {
    throw DataError("resample: dt " + std::to_string(dt) + " s exceeds duration of vehicle " +
                    traj.vehicle_id);
  }
  const auto grid = uniform_grid(traj.t.front(), traj.t.back(), dt);
  const double tol = 1e-9 * dt;

  Trajectory out;
  out.vehicle_id = traj.vehicle_id;
  out.grade_missing = traj.grade_missing;
  out.t.reserve(grid.size());
  for (double tg : grid) {
    const Bracket b = locate(traj.t, tg, tol);
    out.t.push_back(b.frac == 0.0 ? traj.t[b.lo] : tg);
    out.v.push_back(eval(traj.v, b));
    if (traj.has_accel()) out.a.push_back(eval(traj.a, b));
    if (traj.has_position()) out.s.push_back(eval(traj.s, b));
    if (traj.has_altitude()) out.h.push_back(eval(traj.h, b));
    if (traj.has_grade()) out.theta.push_back(eval(traj.theta, b));
  }
  return out;
}

PlatoonDataset resample(const PlatoonDataset& dataset, double dt) {
  dataset.validate();
  PlatoonDataset out;
  out.mode = dataset.mode;
  out.name = dataset.name;
  out.direction = dataset.direction;
  for (const auto& traj : dataset.vehicles) out.vehicles.push_back(resample(traj, dt));
  const auto& src_t = dataset.vehicles.front().t;
  const auto& dst_t = out.vehicles.front().t;
  for (const auto& series : dataset.ivs) {
    if (series.empty()) {
      out.ivs.emplace_back();
      continue;
    }
    std::vector<double> res;
    res.reserve(dst_t.size());
    for (double tg : dst_t) res.push_back(eval(series, locate(src_t, tg, 1e-9 * dt)));
    out.ivs.push_back(std::move(res));
  }
  return out;
}

Trajectory derive_acceleration(const Trajectory& traj, int window, bool force) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("derive_acceleration: window must be odd and >= 1");
  }
  if (traj.has_accel() && !force) return traj;
  const std::size_t n = traj.size();
  if (n < 2 || n < static_cast<std::size_t>(window)) {
    throw DataError("derive_acceleration: vehicle " + traj.vehicle_id + " has " +
                    std::to_string(n) + " samples, fewer than the window");
  }
  const auto step = traj.uniform_step();
  if (!step) throw DataError("derive_acceleration: vehicle " + traj.vehicle_id +
                             " is not on a uniform grid");
  const double dt = *step;

  std::vector<double> raw(n);
  raw[0] = (traj.v[1] - traj.v[0]) / dt;
  raw[n - 1] = (traj.v[n - 1] - traj.v[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) raw[i] = (traj.v[i + 1] - traj.v[i - 1]) / (2.0 * dt);

  Trajectory out = traj;
  out.a.assign(n, 0.0);
  const auto half = static_cast<std::size_t>(window / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += raw[j];
    out.a[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

Trajectory ensure_position(const Trajectory& traj) {
  if (traj.has_position()) return traj;
  Trajectory out = traj;
  out.s = cumulative_trapezoid(traj.t, traj.v);
  return out;
}

Trajectory derive_grade(const Trajectory& traj, int window, double min_ds) {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("derive_grade: window must be odd and >= 3");
  }
  Trajectory out = ensure_position(traj);
  const std::size_t n = out.size();
  if (!out.has_altitude()) {
    out.theta.assign(n, 0.0);
    out.grade_missing = true;
    return out;
  }
  out.grade_missing = false;
  out.theta.assign(n, 0.0);
  const auto half = static_cast<std::size_t>(window / 2);
  std::optional<double> previous;
  std::size_t first_valid = n;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    const double ds = out.s[hi] - out.s[lo];
    if (ds >= min_ds) {
      out.theta[i] = std::atan((out.h[hi] - out.h[lo]) / ds);
      previous = out.theta[i];
      if (first_valid == n) first_valid = i;
    } else if (previous) {
      out.theta[i] = *previous;
    }
  }
  // A leading standstill has no previous grade; it takes the first valid one.
  for (std::size_t i = 0; i < first_valid && first_valid < n; ++i) {
    out.theta[i] = out.theta[first_valid];
  }
  return out;
}

PlatoonDataset compute_ivs(const PlatoonDataset& dataset, double vehicle_length) {
  dataset.validate();
  PlatoonDataset out = dataset;
  out.ivs.resize(dataset.pair_count());
  for (std::size_t k = 0; k < out.pair_count(); ++k) {
    if (!out.ivs[k].empty()) continue;
    const auto& leader = out.vehicles[k];
    const auto& follower = out.vehicles[k + 1];
    if (!leader.has_position() || !follower.has_position()) {
      throw DataError("compute_ivs: positions missing for pair " + leader.vehicle_id + "-" +
                      follower.vehicle_id + " and no spacing provided");
    }
    std::vector<double> gap(leader.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
      gap[i] = leader.s[i] - follower.s[i] - vehicle_length;
      if (gap[i] < 0.0) {
        throw DataError("compute_ivs: negative spacing " + std::to_string(gap[i]) +
                            " m between " + leader.vehicle_id + " and " + follower.vehicle_id +
                            " at t=" + format_time(leader.t[i]),
                        i + 1, follower.vehicle_id);
      }
    }
    out.ivs[k] = std::move(gap);
  }
  return out;
}

PlatoonDataset prepare(const PlatoonDataset& raw, const PrepareOptions& options) {
  PlatoonDataset ds = resample(raw, options.dt);
  ds.ivs.resize(ds.pair_count());
  for (std::size_t k = 0; k < ds.pair_count(); ++k) {
    if (ds.ivs[k].empty() &&
        !(ds.vehicles[k].has_position() && ds.vehicles[k + 1].has_position())) {
      throw DataError("no spacing recorded and no positions for pair " +
                      ds.vehicles[k].vehicle_id + "-" + ds.vehicles[k + 1].vehicle_id);
    }
  }
  ds = compute_ivs(ds, options.vehicle_length);
  for (auto& traj : ds.vehicles) {
    traj = derive_acceleration(traj, options.accel_window, options.force_accel);
    if (!traj.has_grade()) traj = derive_grade(traj);
  }
  return ds;
}

}  // namespace platoon
