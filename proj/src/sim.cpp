#include "platoon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace platoon {

namespace {

// One constant-acceleration piece of the leader profile.
struct Piece {
  double t0, t1;
  double v0;
  double a;
  double s0;
};

std::vector<Piece> leader_pieces(const LeaderCycle& cycle) {
  std::vector<Piece> pieces;
  double t = 0.0, v = cycle.base_speed, s = 0.0;
  auto push = [&](double t1, double a) {
    if (t1 <= t) return;
    pieces.push_back({t, t1, v, a, s});
    const double dt = t1 - t;
    s += v * dt + 0.5 * a * dt * dt;
    v += a * dt;
    t = t1;
  };
  for (std::size_t k = 0; k < cycle.events.size(); ++k) {
    const auto& ev = cycle.events[k];
    push(ev.t_start, 0.0);
    const double dv = ev.target_speed - v;
    const double ramp = std::abs(dv) / ev.accel;
    const double end = ev.t_start + ramp;
    const double limit =
        k + 1 < cycle.events.size() ? cycle.events[k + 1].t_start : cycle.duration;
    if (end > limit + 1e-9) {
      throw InfeasibleCycle("leader event " + std::to_string(k + 1) + " (t_start=" +
                            std::to_string(ev.t_start) + " s, target " +
                            std::to_string(ev.target_speed) + " m/s) cannot reach its target before " +
                            std::to_string(limit) + " s");
    }
    push(end, dv >= 0.0 ? ev.accel : -ev.accel);
    v = ev.target_speed;  // remove rounding drift
  }
  push(cycle.duration, 0.0);
  return pieces;
}

std::vector<double> output_grid(double duration, double dt) {
  const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

std::string vehicle_name(std::size_t index) { return "C" + std::to_string(index + 1); }

}  // namespace

void LeaderCycle::validate() const {
  if (!(base_speed >= 0.0)) throw std::invalid_argument("leader.base_speed must be >= 0");
  if (!(duration > 0.0)) throw std::invalid_argument("leader.duration must be positive");
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& ev = events[k];
    const std::string where = "leader.events[" + std::to_string(k) + "]";
    if (!(ev.target_speed >= 0.0)) throw std::invalid_argument(where + ".target_speed must be >= 0");
    if (!(ev.accel > 0.0)) throw std::invalid_argument(where + ".accel must be positive");
    if (!(ev.t_start >= 0.0 && ev.t_start < duration)) {
      throw std::invalid_argument(where + ".t_start outside the cycle");
    }
    if (k > 0 && !(ev.t_start > events[k - 1].t_start)) {
      throw InfeasibleCycle(where + " starts before the previous event");
    }
  }
  for (std::size_t k = 1; k < grade.size(); ++k) {
    if (!(grade[k].s > grade[k - 1].s)) {
      throw std::invalid_argument("leader.grade distances must be strictly increasing");
    }
  }
}

double LeaderCycle::grade_at(double s) const {
  if (grade.empty()) return 0.0;
  if (s <= grade.front().s) return grade.front().theta;
  if (s >= grade.back().s) return grade.back().theta;
  auto it = std::upper_bound(grade.begin(), grade.end(), s,
                             [](double x, const GradePoint& g) { return x < g.s; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  return lo.theta + (s - lo.s) / (hi.s - lo.s) * (hi.theta - lo.theta);
}

void AccControllerParams::validate() const {
  if (!(headway > 0.0)) throw std::invalid_argument("headway must be positive");
  if (!(standstill >= 0.0)) throw std::invalid_argument("standstill spacing must be >= 0");
  if (!(a_min < 0.0 && a_max > 0.0)) throw std::invalid_argument("need a_min < 0 < a_max");
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) {
    throw std::invalid_argument("controller gains must be finite");
  }
  if (!(v_set > 0.0)) throw std::invalid_argument("v_set must be positive");
}

void HumanModelParams::validate() const {
  if (!(desired_speed > 0.0 && headway > 0.0 && min_gap > 0.0 && max_accel > 0.0 &&
        comfortable_decel > 0.0)) {
    throw std::invalid_argument("IDM parameters must be positive");
  }
  if (!(exponent >= 1.0)) throw std::invalid_argument("IDM exponent must be >= 1");
}

Trajectory generate_leader(const LeaderCycle& cycle, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("generate_leader: dt must be positive");
  cycle.validate();
  const auto pieces = leader_pieces(cycle);

  Trajectory traj;
  traj.vehicle_id = vehicle_name(0);
  traj.t = output_grid(cycle.duration, dt);
  std::size_t p = 0;
  for (double t : traj.t) {
    while (p + 1 < pieces.size() && t >= pieces[p].t1) ++p;
    const auto& pc = pieces[p];
    const double tau = std::min(t, pc.t1) - pc.t0;
    const double v = std::max(0.0, pc.v0 + pc.a * tau);
    const double s = pc.s0 + pc.v0 * tau + 0.5 * pc.a * tau * tau;
    traj.v.push_back(v);
    traj.s.push_back(s);
    traj.a.push_back(t < pc.t1 ? pc.a : 0.0);
    traj.theta.push_back(cycle.grade_at(s));
  }
  return traj;
}

double step_acc_follower(AccState& state, const VehicleState& own, const VehicleState& leader,
                         const AccControllerParams& p, double vehicle_length, double dt) {
  const double gap = leader.s - own.s - vehicle_length;
  if (!(gap > 0.0)) throw CollisionError(gap);
  const double error = gap - (p.standstill + p.headway * own.v);
  const double error_rate = leader.v - own.v - p.headway * own.a;
  double command = p.kp * error + p.ki * state.integral + p.kd * error_rate;
  command = std::min(command, (p.v_set - own.v) / dt);
  const double clamped = std::clamp(command, p.a_min, p.a_max);
  if (clamped == command) state.integral += error * dt;
  return clamped;
}

double step_human_follower(const VehicleState& own, const VehicleState& leader,
                           const HumanModelParams& p, double vehicle_length) {
  const double gap = leader.s - own.s - vehicle_length;
  if (!(gap > 0.0)) throw CollisionError(gap);
  const double closing = own.v - leader.v;
  const double desired =
      p.min_gap + std::max(0.0, own.v * p.headway +
                                    own.v * closing /
                                        (2.0 * std::sqrt(p.max_accel * p.comfortable_decel)));
  const double accel = p.max_accel * (1.0 - std::pow(own.v / p.desired_speed, p.exponent) -
                                      (desired / gap) * (desired / gap));
  return std::max(kHumanMinAccel, accel);
}

double equilibrium_gap(const FollowerModel& model, double v) {
  if (const auto* acc = std::get_if<AccControllerParams>(&model)) {
    return acc->standstill + acc->headway * v;
  }
  const auto& idm = std::get<HumanModelParams>(model);
  const double free = 1.0 - std::pow(v / idm.desired_speed, idm.exponent);
  if (!(free > 0.0)) {
    throw std::invalid_argument("IDM has no equilibrium at or above its desired speed");
  }
  return (idm.min_gap + v * idm.headway) / std::sqrt(free);
}

void Scenario::validate() const {
  leader.validate();
  if (followers.empty()) throw std::invalid_argument("scenario needs at least one follower");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(output_dt >= dt)) throw std::invalid_argument("output_dt must be >= dt");
  if (!(vehicle_length > 0.0)) throw std::invalid_argument("vehicle_length must be positive");
  if (!(accel_noise >= 0.0)) throw std::invalid_argument("accel_noise must be >= 0");
  for (const auto& f : followers) {
    std::visit([](const auto& params) { params.validate(); }, f);
  }
}

SimulationResult simulate_platoon(const Scenario& scenario) {
  scenario.validate();
  const double dt = scenario.dt;
  const double length = scenario.vehicle_length;
  const Trajectory lead = generate_leader(scenario.leader, dt);
  const std::size_t n = lead.size();
  const std::size_t vehicles = scenario.followers.size() + 1;

  std::vector<Trajectory> trajs(vehicles);
  trajs[0] = lead;
  std::vector<VehicleState> state(vehicles);
  std::vector<AccState> memory(vehicles);
  state[0] = {lead.s[0], lead.v[0], lead.a[0]};
  for (std::size_t i = 1; i < vehicles; ++i) {
    const double v0 = lead.v[0];
    state[i].v = v0;
    state[i].s = state[i - 1].s - length - equilibrium_gap(scenario.followers[i - 1], v0);
    trajs[i].vehicle_id = vehicle_name(i);
    trajs[i].t.reserve(n);
  }

  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::optional<Collision> collision;
  std::vector<double> accel(vehicles, 0.0);
  std::size_t recorded = n;
  for (std::size_t k = 0; k < n && !collision; ++k) {
    state[0] = {lead.s[k], lead.v[k], lead.a[k]};
    for (std::size_t i = 1; i < vehicles; ++i) {
      const auto& model = scenario.followers[i - 1];
      double command = 0.0;
      try {
        if (const auto* acc = std::get_if<AccControllerParams>(&model)) {
          command = step_acc_follower(memory[i], state[i], state[i - 1], *acc, length, dt);
        } else {
          command = step_human_follower(state[i], state[i - 1], std::get<HumanModelParams>(model),
                                        length);
          if (scenario.accel_noise > 0.0) command += scenario.accel_noise * noise(rng);
        }
      } catch (const CollisionError& err) {
        collision = Collision{lead.t[k], vehicle_name(i), err.gap()};
        recorded = k;
        break;
      }
      double achieved = command - kGravity * std::sin(scenario.leader.grade_at(state[i].s));
      if (state[i].v + achieved * dt < 0.0) achieved = -state[i].v / dt;
      accel[i] = achieved;
    }
    if (collision) break;
    for (std::size_t i = 1; i < vehicles; ++i) {
      auto& tr = trajs[i];
      tr.t.push_back(lead.t[k]);
      tr.v.push_back(state[i].v);
      tr.s.push_back(state[i].s);
      tr.a.push_back(accel[i]);
      tr.theta.push_back(scenario.leader.grade_at(state[i].s));
      state[i].s += state[i].v * dt + 0.5 * accel[i] * dt * dt;
      state[i].v = std::max(0.0, state[i].v + accel[i] * dt);
      state[i].a = accel[i];
    }
  }

  if (recorded < n) {
    auto& tr = trajs[0];
    tr.t.resize(recorded);
    tr.v.resize(recorded);
    tr.s.resize(recorded);
    tr.a.resize(recorded);
    tr.theta.resize(recorded);
  }

  PlatoonDataset ds;
  ds.name = scenario.name;
  const bool any_acc = std::any_of(scenario.followers.begin(), scenario.followers.end(),
                                   [](const auto& f) { return f.index() == 0; });
  const bool any_human = std::any_of(scenario.followers.begin(), scenario.followers.end(),
                                     [](const auto& f) { return f.index() == 1; });
  ds.mode = any_acc && any_human ? DrivingMode::Mixed
                                 : (any_acc ? DrivingMode::Acc : DrivingMode::Human);
  ds.vehicles = std::move(trajs);
  for (std::size_t i = 1; i < vehicles; ++i) {
    std::vector<double> gap(ds.vehicles[i].size());
    for (std::size_t k = 0; k < gap.size(); ++k) {
      gap[k] = ds.vehicles[i - 1].s[k] - ds.vehicles[i].s[k] - length;
    }
    ds.ivs.push_back(std::move(gap));
  }

  const bool resample_output =
      std::abs(scenario.output_dt - dt) > 1e-12 && recorded >= 2 &&
      ds.vehicles.front().duration() >= scenario.output_dt;
  if (resample_output) ds = resample(ds, scenario.output_dt);
  return {std::move(ds), collision};
}

double acc_string_gain(const AccControllerParams& p, double omega) {
  // V_f / V_l = C / (s^2 + C (1 + T s)),  C = kp + ki/s + kd s.
  const std::complex<double> s(0.0, omega);
  const std::complex<double> c = p.kp + p.ki / s + p.kd * s;
  return std::abs(c / (s * s + c * (1.0 + p.headway * s)));
}

double acc_peak_string_gain(const AccControllerParams& p, double omega_max) {
  double peak = 0.0;
  constexpr int kSteps = 5000;
  for (int i = 1; i <= kSteps; ++i) {
    peak = std::max(peak, acc_string_gain(p, omega_max * i / kSteps));
  }
  return peak;
}

double perturbation_frequency(const LeaderCycle& cycle) {
  if (cycle.events.empty()) return 0.0;
  double ramp_time = 0.0;
  std::size_t ramps = 0;
  for (const auto& pc : leader_pieces(cycle)) {
    if (pc.a == 0.0) continue;
    ramp_time += pc.t1 - pc.t0;
    ++ramps;
  }
  // A down ramp and the matching up ramp make one period.
  return ramps > 0 ? std::numbers::pi * static_cast<double>(ramps) / ramp_time : 0.0;
}

AccControllerParams acc_preset(AccPreset preset) {
  AccControllerParams p;
  if (preset == AccPreset::Stable) {
    p.kp = 3.0;
    p.ki = 0.0;
    p.kd = 0.4;
  } else {
    p.kp = 0.3;
    p.ki = 0.0;
    p.kd = 0.5;
  }
  return p;
}

HumanModelParams human_preset() { return HumanModelParams{}; }

LeaderCycle default_cycle() {
  LeaderCycle cycle;
  cycle.base_speed = 27.0;
  cycle.duration = 240.0;
  // Three back-to-back dips of 6 m/s at 0.5 m/s^2: a 24 s stop-and-go wave.
  cycle.events = {{60.0, 21.0, 0.5}, {72.0, 27.0, 0.5},  {84.0, 21.0, 0.5},
                  {96.0, 27.0, 0.5}, {108.0, 21.0, 0.5}, {120.0, 27.0, 0.5}};
  return cycle;
}

Scenario preset_scenario(const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.leader = default_cycle();
  FollowerModel model;
  if (name == "stable") {
    model = acc_preset(AccPreset::Stable);
  } else if (name == "unstable") {
    model = acc_preset(AccPreset::Unstable);
  } else if (name == "human") {
    model = human_preset();
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  sc.followers.assign(4, model);
  return sc;
}

}  // namespace platoon
