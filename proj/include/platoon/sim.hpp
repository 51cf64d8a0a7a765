#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "platoon/trajectory.hpp"

namespace platoon {

/// From t_start the leader ramps to target_speed at |accel| m/s^2.
struct LeaderEvent {
  double t_start = 0.0;
  double target_speed = 0.0;
  double accel = 1.0;
};

/// Road grade as a function of travelled distance, linearly interpolated.
struct GradePoint {
  double s = 0.0;
  double theta = 0.0;
};

struct LeaderCycle {
  double base_speed = 25.0;
  std::vector<LeaderEvent> events;
  double duration = 200.0;
  std::vector<GradePoint> grade;

  void validate() const;
  double grade_at(double s) const;
};

/// Constant time-headway policy with PID on the spacing error.
struct AccControllerParams {
  double headway = 1.2;     // T, s
  double standstill = 2.0;  // s0, m
  double kp = 0.3;
  double ki = 0.0;
  double kd = 0.5;
  double a_min = -3.0;
  double a_max = 2.0;
  double v_set = 40.0;

  void validate() const;
};

/// Intelligent Driver Model used as the human-driver surrogate.
struct HumanModelParams {
  double desired_speed = 33.0;
  double headway = 1.5;
  double min_gap = 2.0;
  double max_accel = 1.0;
  double comfortable_decel = 1.5;
  double exponent = 4.0;

  void validate() const;
};

inline constexpr double kHumanMinAccel = -9.0;

using FollowerModel = std::variant<AccControllerParams, HumanModelParams>;

struct VehicleState {
  double s = 0.0;
  double v = 0.0;
  double a = 0.0;  // last achieved acceleration
};

/// Controller memory carried between ACC steps.
struct AccState {
  double integral = 0.0;
};

/// Thrown by the step functions when the bumper-to-bumper gap is not positive.
class CollisionError : public std::runtime_error {
 public:
  explicit CollisionError(double gap)
      : std::runtime_error("non-positive gap " + std::to_string(gap) + " m"), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

/// Raised for cycles whose events cannot be executed as scheduled.
class InfeasibleCycle : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scripted leader with piecewise-constant acceleration, sampled every dt.
Trajectory generate_leader(const LeaderCycle& cycle, double dt);

/// Acceleration command of a CTH-PID follower. Updates the integral unless
/// the command saturates.
double step_acc_follower(AccState& state, const VehicleState& own, const VehicleState& leader,
                         const AccControllerParams& p, double vehicle_length, double dt);

/// IDM acceleration, bounded below by kHumanMinAccel.
double step_human_follower(const VehicleState& own, const VehicleState& leader,
                           const HumanModelParams& p, double vehicle_length);

/// Bumper-to-bumper gap at which the model holds speed v behind a leader at v.
double equilibrium_gap(const FollowerModel& model, double v);

struct Scenario {
  std::string name;
  LeaderCycle leader;
  std::vector<FollowerModel> followers;
  double dt = 0.05;          // integration step
  double output_dt = 0.1;    // grid of the returned dataset
  double vehicle_length = kDefaultVehicleLength;
  std::uint64_t seed = 0;
  double accel_noise = 0.0;  // std of additive noise on human commands, m/s^2

  void validate() const;
};

struct Collision {
  double time = 0.0;
  std::string vehicle_id;
  double gap = 0.0;
};

struct SimulationResult {
  PlatoonDataset dataset;
  std::optional<Collision> collision;
};

/// Integrates the chain with forward Euler on speed; positions advance with
/// the exact constant-acceleration update. On collision the dataset holds the
/// samples up to the offending time.
SimulationResult simulate_platoon(const Scenario& scenario);

// --- presets and linear analysis ------------------------------------------

/// |V_follower / V_leader| at angular frequency omega for the linearized CTH
/// loop; above one means the chain amplifies that frequency.
double acc_string_gain(const AccControllerParams& p, double omega);
/// Peak of acc_string_gain over omega in (0, omega_max].
double acc_peak_string_gain(const AccControllerParams& p, double omega_max = 5.0);

/// Angular frequency of the cycle's speed oscillation: a down ramp and an up
/// ramp form one period, so omega = pi / mean ramp duration. Zero without
/// events.
double perturbation_frequency(const LeaderCycle& cycle);

enum class AccPreset { Stable, Unstable };
AccControllerParams acc_preset(AccPreset preset);
HumanModelParams human_preset();
/// Cruise, three back-to-back dips of 6 m/s, cruise.
LeaderCycle default_cycle();
/// "stable", "unstable" (ACC followers) or "human" (IDM followers), 5 vehicles.
Scenario preset_scenario(const std::string& name);

}  // namespace platoon
