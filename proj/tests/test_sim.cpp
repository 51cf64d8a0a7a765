#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "platoon/analysis.hpp"
#include "platoon/energy.hpp"
#include "platoon/sim.hpp"

using namespace platoon;

namespace {

LeaderCycle flat_cycle(double v, double duration) {
  LeaderCycle cycle;
  cycle.base_speed = v;
  cycle.duration = duration;
  return cycle;
}

/// One dip of 6 m/s and the recovery.
LeaderCycle pulse_cycle() {
  LeaderCycle cycle;
  cycle.base_speed = 27.0;
  cycle.duration = 150.0;
  cycle.events = {{30.0, 21.0, 0.5}, {42.0, 27.0, 0.5}};
  return cycle;
}

Scenario platoon_of(const FollowerModel& model, const LeaderCycle& cycle, std::size_t followers = 4) {
  Scenario sc;
  sc.name = "test";
  sc.leader = cycle;
  sc.followers.assign(followers, model);
  return sc;
}

std::vector<double> ratios(const StabilityMetrics& m) {
  std::vector<double> out;
  for (const auto& f : m.intervals.at(0).followers) out.push_back(f.l2_ratio.value());
  return out;
}

/// Integrates one follower behind a constant-speed leader from an off-equilibrium gap.
template <typename Step>
double settle_gap(double v, double initial_gap, double length, Step step) {
  const double dt = 0.05;
  VehicleState lead{initial_gap + length, v, 0.0};
  VehicleState own{0.0, v, 0.0};
  for (int k = 0; k < static_cast<int>(300.0 / dt); ++k) {
    const double a = step(own, lead);
    own.s += own.v * dt + 0.5 * a * dt * dt;
    own.v = std::max(0.0, own.v + a * dt);
    own.a = a;
    lead.s += v * dt;
  }
  return lead.s - own.s - length;
}

}  // namespace

// --- leader ----------------------------------------------------------------------

TEST(Leader, NoEventsHoldsSpeed) {
  const auto traj = generate_leader(flat_cycle(15.0, 10.0), 0.1);
  ASSERT_EQ(traj.size(), 101u);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(traj.v[i], 15.0);
    EXPECT_EQ(traj.a[i], 0.0);
    EXPECT_NEAR(traj.s[i], 15.0 * traj.t[i], 1e-9);
  }
}

TEST(Leader, SingleRampMatchesKinematics) {
  LeaderCycle cycle = flat_cycle(20.0, 20.0);
  cycle.events = {{5.0, 10.0, 2.0}};
  const auto traj = generate_leader(cycle, 0.1);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.t[i];
    double v, s;
    if (t <= 5.0) {
      v = 20.0;
      s = 20.0 * t;
    } else if (t <= 10.0) {
      const double tau = t - 5.0;
      v = 20.0 - 2.0 * tau;
      s = 100.0 + 20.0 * tau - tau * tau;
    } else {
      v = 10.0;
      s = 100.0 + 75.0 + 10.0 * (t - 10.0);
    }
    EXPECT_NEAR(traj.v[i], v, 1e-9) << "t=" << t;
    EXPECT_NEAR(traj.s[i], s, 1e-9) << "t=" << t;
  }
  EXPECT_EQ(traj.a[60], -2.0);
  EXPECT_EQ(traj.a[110], 0.0);
}

TEST(Leader, OverlappingRampIsInfeasible) {
  LeaderCycle cycle = flat_cycle(20.0, 60.0);
  cycle.events = {{5.0, 10.0, 2.0}, {8.0, 20.0, 2.0}};
  try {
    generate_leader(cycle, 0.1);
    FAIL() << "expected InfeasibleCycle";
  } catch (const InfeasibleCycle& err) {
    EXPECT_NE(std::string(err.what()).find("event 1"), std::string::npos);
  }
}

TEST(Leader, GradeFollowsDistance) {
  LeaderCycle cycle = flat_cycle(10.0, 10.0);
  cycle.grade = {{0.0, 0.0}, {100.0, 0.02}};
  EXPECT_DOUBLE_EQ(cycle.grade_at(50.0), 0.01);
  EXPECT_DOUBLE_EQ(cycle.grade_at(500.0), 0.02);
  const auto traj = generate_leader(cycle, 0.5);
  EXPECT_NEAR(traj.theta[10], 0.01, 1e-12);
}

// --- ACC follower -------------------------------------------------------------

TEST(Acc, ZeroErrorGivesZeroCommand) {
  const AccControllerParams p;
  AccState memory;
  const double v = 20.0;
  const VehicleState own{0.0, v, 0.0};
  const VehicleState lead{p.standstill + p.headway * v + 4.5, v, 0.0};
  EXPECT_DOUBLE_EQ(step_acc_follower(memory, own, lead, p, 4.5, 0.05), 0.0);
  EXPECT_DOUBLE_EQ(memory.integral, 0.0);
}

TEST(Acc, CommandSaturatesAndFreezesIntegral) {
  AccControllerParams p;
  p.ki = 0.1;
  AccState memory;
  const VehicleState own{0.0, 20.0, 0.0};
  const VehicleState far{500.0, 20.0, 0.0};
  EXPECT_DOUBLE_EQ(step_acc_follower(memory, own, far, p, 4.5, 0.05), p.a_max);
  EXPECT_DOUBLE_EQ(memory.integral, 0.0);
  const VehicleState close{10.0, 10.0, 0.0};
  EXPECT_DOUBLE_EQ(step_acc_follower(memory, own, close, p, 4.5, 0.05), p.a_min);
}

TEST(Acc, SetSpeedCapsCommand) {
  AccControllerParams p;
  p.v_set = 20.0;
  AccState memory;
  const VehicleState own{0.0, 20.0, 0.0};
  const VehicleState far{500.0, 30.0, 0.0};
  EXPECT_LE(step_acc_follower(memory, own, far, p, 4.5, 0.05), 0.0);
}

TEST(Acc, CollisionOnNonPositiveGap) {
  AccState memory;
  const VehicleState own{0.0, 20.0, 0.0};
  const VehicleState lead{4.5, 20.0, 0.0};
  EXPECT_THROW(step_acc_follower(memory, own, lead, {}, 4.5, 0.05), CollisionError);
}

TEST(Acc, SettlesAtConstantHeadwaySpacing) {
  for (auto preset : {AccPreset::Stable, AccPreset::Unstable}) {
    const auto p = acc_preset(preset);
    AccState memory;
    const double gap = settle_gap(20.0, 40.0, 4.5, [&](const VehicleState& own, const VehicleState& lead) {
      return step_acc_follower(memory, own, lead, p, 4.5, 0.05);
    });
    EXPECT_LT(std::abs(gap - (p.standstill + p.headway * 20.0)), 0.1);
  }
}

TEST(Acc, ProportionalOnlyLoopOvershoots) {
  // Without kd the closed loop is s^2 + kp T s + kp: under-damped for kp < 4 / T^2.
  AccControllerParams p;
  p.kp = 1.0;
  p.kd = 0.0;
  p.ki = 0.0;
  LeaderCycle cycle = flat_cycle(20.0, 60.0);
  cycle.events = {{5.0, 10.0, 2.0}};
  const auto ds = simulate_platoon(platoon_of(p, cycle, 1)).dataset;
  const auto& f = ds.vehicles[1].v;
  const double lowest = *std::min_element(f.begin(), f.end());
  EXPECT_LT(lowest, 10.0 - 0.1);
}

// --- human surrogate ------------------------------------------------------------

TEST(Human, FreeFlowAtDesiredSpeed) {
  const HumanModelParams p;
  const VehicleState own{0.0, p.desired_speed, 0.0};
  const VehicleState lead{1e6, p.desired_speed, 0.0};
  EXPECT_NEAR(step_human_follower(own, lead, p, 4.5), 0.0, 1e-6);
}

TEST(Human, SettlesAtEquilibriumSpacing) {
  const HumanModelParams p;
  const double v = 20.0;
  const double expected = equilibrium_gap(p, v);
  const double gap = settle_gap(v, expected + 15.0, 4.5, [&](const VehicleState& own, const VehicleState& lead) {
    return step_human_follower(own, lead, p, 4.5);
  });
  EXPECT_LT(std::abs(gap - expected), 0.1);
  // At the closed-form spacing the model holds speed.
  const VehicleState own{0.0, v, 0.0};
  EXPECT_NEAR(step_human_follower(own, {expected + 4.5, v, 0.0}, p, 4.5), 0.0, 1e-12);
}

TEST(Human, DecelerationGrowsAsGapShrinks) {
  const HumanModelParams p;
  const VehicleState own{0.0, 20.0, 0.0};
  double previous = std::numeric_limits<double>::infinity();
  for (double gap = 80.0; gap > 2.0; gap -= 1.0) {
    const double a = step_human_follower(own, {gap + 4.5, 18.0, 0.0}, p, 4.5);
    if (previous > kHumanMinAccel) {
      EXPECT_LT(a, previous);
    } else {
      EXPECT_EQ(a, kHumanMinAccel);
    }
    EXPECT_GE(a, kHumanMinAccel);
    previous = a;
  }
}

TEST(Human, NoEquilibriumAboveDesiredSpeed) {
  EXPECT_THROW(equilibrium_gap(HumanModelParams{}, 40.0), std::invalid_argument);
}

// --- platoon ---------------------------------------------------------------------

TEST(Simulate, EquilibriumPersists) {
  const auto ds = simulate_platoon(platoon_of(acc_preset(AccPreset::Stable), flat_cycle(25.0, 60.0)))
                      .dataset;
  ASSERT_EQ(ds.vehicles.size(), 5u);
  for (const auto& traj : ds.vehicles) {
    for (double v : traj.v) EXPECT_NEAR(v, 25.0, 1e-9);
  }
  for (const auto& gaps : ds.ivs) {
    for (double g : gaps) EXPECT_NEAR(g, 2.0 + 1.2 * 25.0, 1e-9);
  }
  EXPECT_EQ(ds.mode, DrivingMode::Acc);
  EXPECT_EQ(ds.vehicles[4].vehicle_id, "C5");
  EXPECT_NEAR(ds.vehicles[0].t[1], 0.1, 1e-12);
}

TEST(Simulate, UnderDampedGainsAmplifyOnePulse) {
  const auto ds = simulate_platoon(platoon_of(acc_preset(AccPreset::Unstable), pulse_cycle())).dataset;
  const auto labels = segment_steady_perturbation(ds.vehicles[0]);
  const auto m = l2_amplification(ds, labels);
  ASSERT_EQ(m.intervals.size(), 1u);
  const auto r = ratios(m);
  for (std::size_t k = 1; k < r.size(); ++k) EXPECT_GT(r[k], r[k - 1]);
  EXPECT_GT(r.front(), 1.0);
  EXPECT_EQ(m.verdict, StabilityVerdict::Amplifying);
}

TEST(Simulate, DampedGainsAttenuateOnePulse) {
  const auto ds = simulate_platoon(platoon_of(acc_preset(AccPreset::Stable), pulse_cycle())).dataset;
  const auto m = l2_amplification(ds, segment_steady_perturbation(ds.vehicles[0]));
  for (double r : ratios(m)) EXPECT_LE(r, 1.0);
  EXPECT_EQ(m.verdict, StabilityVerdict::Attenuating);
}

TEST(Simulate, Deterministic) {
  auto sc = preset_scenario("human");
  sc.accel_noise = 0.2;
  sc.seed = 42;
  const auto a = simulate_platoon(sc).dataset;
  const auto b = simulate_platoon(sc).dataset;
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    EXPECT_EQ(a.vehicles[i].v, b.vehicles[i].v);
    EXPECT_EQ(a.vehicles[i].s, b.vehicles[i].s);
  }
  EXPECT_EQ(a.ivs, b.ivs);
  sc.seed = 43;
  const auto c = simulate_platoon(sc).dataset;
  EXPECT_NE(a.vehicles[2].v, c.vehicles[2].v);
}

TEST(Simulate, HalvingStepBarelyMovesFinalPositions) {
  for (const char* name : {"stable", "unstable", "human"}) {
    auto coarse = preset_scenario(name);
    auto fine = coarse;
    fine.dt = coarse.dt / 2.0;
    const auto a = simulate_platoon(coarse).dataset;
    const auto b = simulate_platoon(fine).dataset;
    for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
      const double sa = a.vehicles[i].s.back(), sb = b.vehicles[i].s.back();
      EXPECT_LT(std::abs(sa - sb), 1e-3 * std::abs(sa)) << name << " " << a.vehicles[i].vehicle_id;
    }
  }
}

TEST(Simulate, SpeedsAndCommandsStayInBounds) {
  for (const char* name : {"stable", "unstable", "human"}) {
    const auto sc = preset_scenario(name);
    const auto ds = simulate_platoon(sc).dataset;
    for (std::size_t i = 1; i < ds.vehicles.size(); ++i) {
      for (double v : ds.vehicles[i].v) EXPECT_GE(v, 0.0);
      for (double a : ds.vehicles[i].a) {
        if (std::string(name) == "human") {
          EXPECT_GE(a, kHumanMinAccel - 1e-9);
          EXPECT_LE(a, human_preset().max_accel + 1e-9);
        } else {
          EXPECT_GE(a, sc.followers[0].index() == 0 ? -3.0 - 1e-9 : 0.0);
          EXPECT_LE(a, 2.0 + 1e-9);
        }
      }
    }
  }
}

TEST(Simulate, CollisionStopsWithPartialOutput) {
  AccControllerParams weak;
  weak.kp = 0.01;
  weak.kd = 0.0;
  LeaderCycle cycle = flat_cycle(27.0, 60.0);
  cycle.events = {{10.0, 0.0, 8.0}};
  const auto result = simulate_platoon(platoon_of(weak, cycle, 2));
  ASSERT_TRUE(result.collision.has_value());
  EXPECT_EQ(result.collision->vehicle_id, "C2");
  EXPECT_GT(result.collision->time, 10.0);
  EXPECT_LE(result.collision->gap, 0.0);
  const auto& lead = result.dataset.vehicles[0];
  EXPECT_LT(lead.t.back(), result.collision->time + 1e-9);
  EXPECT_GT(lead.t.back(), result.collision->time - 0.2);
  for (const auto& traj : result.dataset.vehicles) EXPECT_EQ(traj.size(), lead.size());
}

TEST(Simulate, GradeSlowsFollowers) {
  auto flat = platoon_of(acc_preset(AccPreset::Stable), flat_cycle(25.0, 60.0), 1);
  auto hill = flat;
  hill.leader.grade = {{0.0, 0.0}, {200.0, 0.05}};
  const auto a = simulate_platoon(flat).dataset;
  const auto b = simulate_platoon(hill).dataset;
  EXPECT_LT(b.vehicles[1].s.back(), a.vehicles[1].s.back());
}

TEST(Simulate, RejectsBadScenarios) {
  auto sc = preset_scenario("stable");
  sc.followers.clear();
  EXPECT_THROW(simulate_platoon(sc), std::invalid_argument);
  sc = preset_scenario("stable");
  sc.dt = 0.0;
  EXPECT_THROW(simulate_platoon(sc), std::invalid_argument);
  EXPECT_THROW(preset_scenario("cautious"), std::invalid_argument);
}

// --- presets and linear analysis -------------------------------------------------

TEST(StringGain, LowFrequencyLimitIsOne) {
  const auto p = acc_preset(AccPreset::Stable);
  EXPECT_NEAR(acc_string_gain(p, 1e-6), 1.0, 1e-5);
}

TEST(StringGain, ProportionalLoopBoundary) {
  // With C = kp the gain stays below one at every frequency iff kp T^2 >= 2.
  AccControllerParams p;
  p.ki = 0.0;
  p.kd = 0.0;
  p.kp = 2.0 / (p.headway * p.headway) + 0.05;
  EXPECT_LE(acc_peak_string_gain(p), 1.0 + 1e-12);
  p.kp = 2.0 / (p.headway * p.headway) - 0.3;
  EXPECT_GT(acc_peak_string_gain(p), 1.0);
}

TEST(StringGain, PresetsStraddleOneAtCycleFrequency) {
  const double omega = perturbation_frequency(default_cycle());
  EXPECT_NEAR(omega, std::numbers::pi / 12.0, 1e-12);
  EXPECT_LT(acc_string_gain(acc_preset(AccPreset::Stable), omega), 1.0);
  EXPECT_GT(acc_string_gain(acc_preset(AccPreset::Unstable), omega), 1.0);
  EXPECT_EQ(perturbation_frequency(flat_cycle(20.0, 10.0)), 0.0);
}

TEST(Presets, DefaultCycleShape) {
  const auto cycle = default_cycle();
  EXPECT_NO_THROW(cycle.validate());
  const auto traj = generate_leader(cycle, 0.1);
  EXPECT_DOUBLE_EQ(traj.v.front(), 27.0);
  EXPECT_DOUBLE_EQ(traj.v.back(), 27.0);
  EXPECT_DOUBLE_EQ(*std::min_element(traj.v.begin(), traj.v.end()), 21.0);
}

TEST(Presets, UnstableSpeedSpreadGrowsInPerturbation) {
  const auto ds = simulate_platoon(preset_scenario("unstable")).dataset;
  const auto sd = speed_std(ds, segment_steady_perturbation(ds.vehicles[0]), SegmentClass::Perturbation);
  for (std::size_t k = 1; k < sd.size(); ++k) EXPECT_GT(sd[k], sd[k - 1]);
}

TEST(Presets, HumanChainDoesNotAmplify) {
  const auto ds = simulate_platoon(preset_scenario("human")).dataset;
  const auto m = l2_amplification(ds, segment_steady_perturbation(ds.vehicles[0]));
  for (const auto& interval : m.intervals) {
    for (const auto& f : interval.followers) EXPECT_LE(f.l2_ratio.value(), 1.0);
  }
}

TEST(Presets, AmplifyingImpliesRisingPerturbationEnergy) {
  const auto ds = simulate_platoon(preset_scenario("unstable")).dataset;
  const auto labels = segment_steady_perturbation(ds.vehicles[0]);
  ASSERT_EQ(l2_amplification(ds, labels).verdict, StabilityVerdict::Amplifying);
  AssessOptions options;
  options.segments = labels;
  const auto report = assess_platoon(ds, options);
  double previous = 0.0;
  for (std::size_t i = 1; i < ds.vehicles.size(); ++i) {
    const auto* row = report.find(ds.vehicles[i].vehicle_id, SegmentClass::Perturbation);
    ASSERT_NE(row, nullptr);
    EXPECT_GE(row->tractive, previous);
    previous = row->tractive;
  }
}
