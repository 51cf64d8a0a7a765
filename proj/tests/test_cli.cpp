#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "platoon/csv.hpp"

using namespace platoon;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = PLATOON_TEST_DATA;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("platoon_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static json read_json(const fs::path& p) { return json::parse(slurp(p)); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

Trajectory cruise(const std::string& id, double v, double duration, double offset = 0.0) {
  Trajectory traj;
  traj.vehicle_id = id;
  for (int i = 0; i * 0.1 <= duration + 1e-9; ++i) {
    const double t = i * 0.1;
    traj.t.push_back(t);
    traj.v.push_back(v);
    traj.a.push_back(0.0);
    traj.s.push_back(offset + v * t);
    traj.theta.push_back(0.0);
  }
  return traj;
}

}  // namespace

TEST_F(Cli, IngestValidFixture) {
  const auto out = dir_ / "ingest";
  ASSERT_EQ(run({"--out", out.string(), "ingest", "--input", (kData / "three_vehicles.csv").string(),
                 "--schema", (kData / "three_vehicles.schema.json").string()}),
            0)
      << err_.str();
  const auto text = slurp(out / "platoon.csv");
  EXPECT_NE(text.find("# config: "), std::string::npos);
  std::istringstream in(text);
  const auto ds = read_canonical(in);
  EXPECT_EQ(ds.vehicles.size(), 3u);
  EXPECT_TRUE(ds.vehicles[0].has_accel());
}

TEST_F(Cli, IngestCorruptedFixture) {
  EXPECT_EQ(run({"--out", dir_.string(), "ingest", "--input", (kData / "corrupted.csv").string(),
                 "--schema", (kData / "three_vehicles.schema.json").string()}),
            2);
  EXPECT_NE(err_.str().find("row 4"), std::string::npos) << err_.str();
  EXPECT_NE(err_.str().find("v2"), std::string::npos);
}

TEST_F(Cli, IngestKilometresPerHour) {
  ASSERT_EQ(run({"--out", dir_.string(), "ingest", "--input", (kData / "kmh.csv").string(), "--schema",
                 (kData / "kmh.schema.json").string()}),
            0)
      << err_.str();
  std::ifstream in(dir_ / "platoon.csv");
  const auto ds = read_canonical(in);
  double vmax = 0.0;
  for (double v : ds.vehicles[0].v) vmax = std::max(vmax, v);
  EXPECT_NEAR(vmax, 21.0, 1e-9);
}

TEST_F(Cli, AssessIdenticalPlatoonHasUnitRatios) {
  PlatoonDataset ds;
  ds.name = "identical";
  for (int i = 0; i < 3; ++i) ds.vehicles.push_back(cruise("C" + std::to_string(i + 1), 20.0, 60.0, -40.0 * i));
  for (int i = 0; i < 2; ++i) ds.ivs.emplace_back(ds.vehicles[0].size(), 35.5);
  write_canonical(dir_ / "in.csv", ds);
  ASSERT_EQ(run({"--out", dir_.string(), "assess", "--input", (dir_ / "in.csv").string()}), 0) << err_.str();
  const auto doc = read_json(dir_ / "energy.json");
  for (const auto& row : doc.at("rows")) {
    EXPECT_DOUBLE_EQ(row.at("tractive_ratio").get<double>(), 1.0);
    for (const auto& [name, r] : row.at("fuel_ratio").items()) EXPECT_DOUBLE_EQ(r.get<double>(), 1.0) << name;
  }
  EXPECT_TRUE(doc.contains("config"));
  EXPECT_NE(slurp(dir_ / "energy.csv").find("# config: "), std::string::npos);
}

TEST_F(Cli, AssessCruiseMatchesClosedForm) {
  PlatoonDataset ds;
  ds.vehicles.push_back(cruise("C1", 20.0, 100.0));
  write_canonical(dir_ / "in.csv", ds);
  ASSERT_EQ(run({"--out", dir_.string(), "assess", "--input", (dir_ / "in.csv").string()}), 0) << err_.str();
  const auto doc = read_json(dir_ / "energy.json");
  const auto& row = doc.at("rows").at(0);
  EXPECT_EQ(row.at("segment"), "whole");
  EXPECT_NEAR(row.at("tractive_kwh_per_100km").get<double>(), 5.9945, 5.9945 * 1e-6);
  EXPECT_NEAR(row.at("fuel_l_per_100km").at("arrb").get<double>(), 9.23, 9.23 * 1e-6);
}

TEST_F(Cli, AssessUnstablePresetEnergyRisesInPerturbation) {
  ASSERT_EQ(run({"--out", dir_.string(), "assess", "--preset", "unstable"}), 0) << err_.str();
  const auto doc = read_json(dir_ / "energy.json");
  double previous = 0.0;
  int seen = 0;
  for (const auto& row : doc.at("rows")) {
    if (row.at("segment") != "perturbation" || row.at("position").get<int>() == 0) continue;
    const double e = row.at("tractive_kwh_per_100km").get<double>();
    EXPECT_GE(e, previous) << row.at("vehicle");
    previous = e;
    ++seen;
  }
  EXPECT_EQ(seen, 4);
}

TEST_F(Cli, AnalyzeAccPreset) {
  ASSERT_EQ(run({"--out", dir_.string(), "analyze", "--preset", "stable"}), 0) << err_.str();
  const auto m = read_json(dir_ / "metrics.json");
  EXPECT_EQ(m.at("correlation").at("self").at("C1-C1").get<double>(), 1.0);
  EXPECT_EQ(m.at("stability").at("verdict"), "attenuating");
  for (const auto& [pair, g] : m.at("gaps").items()) {
    EXPECT_NEAR(g.at("time_gap").at("mode").get<double>(), 1.2, 0.15) << pair;
    EXPECT_LT(std::abs(g.at("time_gap_vs_speed").at("slope").get<double>()), 0.005) << pair;
  }
  EXPECT_TRUE(fs::exists(dir_ / "joint_C3.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "hist_time_gap_C1-C2.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "gap_speed_C4-C5.csv"));
  EXPECT_NE(slurp(dir_ / "joint_C1.csv").find("v_bin,a_bin,mass"), std::string::npos);
}

TEST_F(Cli, AnalyzeHumanPresetSlopeIsPositive) {
  ASSERT_EQ(run({"--out", dir_.string(), "analyze", "--preset", "human"}), 0) << err_.str();
  const auto m = read_json(dir_ / "metrics.json");
  for (const auto& [pair, g] : m.at("gaps").items()) {
    EXPECT_GT(g.at("time_gap_vs_speed").at("slope").get<double>(), 0.0) << pair;
  }
}

TEST_F(Cli, SimulateIsByteIdenticalAndVerdictsSplit) {
  const auto a = dir_ / "a";
  ASSERT_EQ(run({"--out", a.string(), "simulate", "--preset", "unstable"}), 0) << err_.str();
  const std::string first = slurp(a / "platoon.csv");
  ASSERT_EQ(run({"--out", a.string(), "simulate", "--preset", "unstable"}), 0) << err_.str();
  EXPECT_TRUE(first == slurp(a / "platoon.csv"));
  EXPECT_NE(slurp(a / "platoon.csv").find("\"followers\""), std::string::npos);

  ASSERT_EQ(run({"--out", (dir_ / "u").string(), "analyze", "--input", (a / "platoon.csv").string()}), 0);
  EXPECT_EQ(read_json(dir_ / "u" / "metrics.json").at("stability").at("verdict"), "amplifying");
  ASSERT_EQ(run({"--out", (dir_ / "s").string(), "simulate", "--preset", "stable"}), 0);
  ASSERT_EQ(run({"--out", (dir_ / "s").string(), "analyze", "--input", (dir_ / "s" / "platoon.csv").string()}), 0);
  EXPECT_EQ(read_json(dir_ / "s" / "metrics.json").at("stability").at("verdict"), "attenuating");
}

TEST_F(Cli, SimulateScenarioFileErrorsNameTheField) {
  const auto path = dir_ / "scenario.json";
  std::ofstream(path) << R"({"followers": [{"type": "acc"}, {"type": "acc", "kd": "soft"}]})";
  EXPECT_EQ(run({"--out", dir_.string(), "simulate", "--scenario", path.string()}), 2);
  EXPECT_NE(err_.str().find("followers[1].kd"), std::string::npos) << err_.str();
}

TEST_F(Cli, CollisionExitsThree) {
  const auto path = dir_ / "crash.json";
  std::ofstream(path) << R"({"leader": {"base_speed": 27, "duration": 60,
      "events": [{"t_start": 10, "target_speed": 0, "accel": 8}]},
      "followers": [{"type": "acc", "kp": 0.01, "kd": 0}]})";
  EXPECT_EQ(run({"--out", dir_.string(), "simulate", "--scenario", path.string()}), 3);
  EXPECT_NE(err_.str().find("collision"), std::string::npos) << err_.str() << out_.str();
  const auto text = slurp(dir_ / "platoon.csv");
  EXPECT_NE(text.find("\"collision\""), std::string::npos);
}

TEST_F(Cli, CorrelateTwoRuns) {
  ASSERT_EQ(run({"--out", (dir_ / "h").string(), "simulate", "--preset", "human"}), 0);
  ASSERT_EQ(run({"--out", (dir_ / "a").string(), "simulate", "--preset", "stable"}), 0);
  ASSERT_EQ(run({"--out", dir_.string(), "correlate", "--input", (dir_ / "h" / "platoon.csv").string(),
                 "--input", (dir_ / "a" / "platoon.csv").string()}),
            0)
      << err_.str();
  const auto text = slurp(dir_ / "correlation.csv");
  EXPECT_NE(text.find("mode,C1-C2,C1-C3,C1-C4,C1-C5"), std::string::npos);
  EXPECT_NE(text.find("\nHuman,"), std::string::npos);
  EXPECT_NE(text.find("\nACC,"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"--dt", "-1", "simulate", "--preset", "stable"}), 1);
  EXPECT_EQ(run({"--segments", "1,2", "simulate", "--preset", "stable"}), 1);
  EXPECT_EQ(run({"--timegap-ref", "leader", "analyze", "--preset", "stable"}), 1);
  EXPECT_EQ(run({"ingest", "--input", "x.csv"}), 1);
  EXPECT_EQ(run({"--out", dir_.string(), "assess", "--preset", "stable", "--mass", "C2"}), 1);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(Cli, MissingInputIsDataError) {
  EXPECT_EQ(run({"--out", dir_.string(), "analyze", "--input", (dir_ / "absent.csv").string()}), 2);
}

TEST_F(Cli, ConfigFileMergesUnderFlags) {
  const auto cfg = dir_ / "run.json";
  std::ofstream(cfg) << R"({"preset": "stable", "segments": "0.5,5,2", "timegap_ref": "preceding"})";
  ASSERT_EQ(run({"--config", cfg.string(), "--out", dir_.string(), "--segments", "0.4,5,2", "analyze"}), 0)
      << err_.str();
  const auto echo = read_json(dir_ / "metrics.json").at("config");
  EXPECT_EQ(echo.at("preset"), "stable");
  EXPECT_EQ(echo.at("timegap_ref"), "preceding");
  EXPECT_DOUBLE_EQ(echo.at("segments").at("accel_threshold").get<double>(), 0.4);
}
