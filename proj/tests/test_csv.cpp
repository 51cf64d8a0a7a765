#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "platoon/config.hpp"
#include "platoon/csv.hpp"

using namespace platoon;

namespace {

const std::filesystem::path kData = PLATOON_TEST_DATA;

ColumnMapping schema_file(const std::string& name) {
  return ColumnMapping::from_json(load_json(kData / name));
}

ColumnMapping simple_schema() {
  return ColumnMapping::from_json(nlohmann::json::parse(R"({
    "columns": [
      {"column": "t", "role": "time"},
      {"column": "va", "role": "speed", "vehicle": "A"},
      {"column": "vb", "role": "speed", "vehicle": "B"},
      {"column": "gap", "role": "ivs", "vehicle": "B"}
    ]})"));
}

}  // namespace

TEST(Ingest, ThreeVehicleFixture) {
  const auto ds = ingest_csv(kData / "three_vehicles.csv", schema_file("three_vehicles.schema.json"));
  ASSERT_EQ(ds.vehicles.size(), 3u);
  ASSERT_EQ(ds.ivs.size(), 2u);
  EXPECT_EQ(ds.vehicles[0].vehicle_id, "C1");
  EXPECT_EQ(ds.vehicles[2].vehicle_id, "C3");
  EXPECT_EQ(ds.vehicles[0].size(), 61u);
  EXPECT_EQ(ds.ivs[0].size(), 61u);
  EXPECT_EQ(ds.mode, DrivingMode::Human);
  EXPECT_EQ(ds.name, "fixture");
  EXPECT_EQ(ds.direction, "north");
  EXPECT_DOUBLE_EQ(ds.vehicles[1].v[10], 20.45);
  EXPECT_DOUBLE_EQ(ds.ivs[1][0], 28.0);
  EXPECT_FALSE(ds.vehicles[0].has_accel());
}

TEST(Ingest, MillisecondsAndKilometresPerHour) {
  const auto ds = ingest_csv(kData / "kmh.csv", schema_file("kmh.schema.json"));
  ASSERT_EQ(ds.vehicles.size(), 2u);
  EXPECT_NEAR(ds.vehicles[0].t[1], 0.1, 1e-12);
  EXPECT_NEAR(ds.vehicles[0].t.back(), 5.0, 1e-12);
  double vmax = 0.0;
  for (double v : ds.vehicles[0].v) vmax = std::max(vmax, v);
  // 75.6 km/h by hand is 21 m/s.
  EXPECT_NEAR(vmax, 21.0, 1e-9);
  EXPECT_NEAR(ds.vehicles[1].v[0], 20.0, 1e-12);
  EXPECT_NEAR(ds.vehicles[0].s[0], 50.0, 1e-9);
  EXPECT_EQ(ds.mode, DrivingMode::Acc);
}

TEST(Ingest, CorruptedCellNamesRowAndColumn) {
  try {
    ingest_csv(kData / "corrupted.csv", schema_file("three_vehicles.schema.json"));
    FAIL() << "expected DataError";
  } catch (const DataError& err) {
    ASSERT_TRUE(err.row().has_value());
    EXPECT_EQ(*err.row(), 4u);
    EXPECT_EQ(err.column(), "v2");
    EXPECT_NE(std::string(err.what()).find("row 4"), std::string::npos);
  }
}

TEST(Ingest, EmptyAndNanCellsAreInterpolated) {
  const auto ds = ingest_csv(kData / "gappy.csv", schema_file("three_vehicles.schema.json"));
  // v1 = 20 + 0.5 t is linear, so interpolation restores it.
  EXPECT_NEAR(ds.vehicles[0].v[4], 20.2, 1e-9);
  EXPECT_NEAR(ds.vehicles[0].v[5], 20.25, 1e-9);
  EXPECT_NEAR(ds.vehicles[1].v[7], 20.0 + 0.45 * 0.7, 1e-4);
}

TEST(Ingest, MissingColumn) {
  std::istringstream in("t,va\n0,1\n1,2\n");
  try {
    ingest_csv(in, simple_schema());
    FAIL();
  } catch (const DataError& err) {
    EXPECT_EQ(err.column(), "vb");
  }
}

TEST(Ingest, NonMonotoneTime) {
  std::istringstream in("t,va,vb,gap\n0,1,1,10\n1,1,1,10\n1,1,1,10\n");
  try {
    ingest_csv(in, simple_schema());
    FAIL();
  } catch (const DataError& err) {
    EXPECT_EQ(err.row(), std::optional<std::size_t>(3));
  }
}

TEST(Ingest, TooFewRows) {
  std::istringstream in("t,va,vb,gap\n0,1,1,10\n");
  EXPECT_THROW(ingest_csv(in, simple_schema()), DataError);
}

TEST(Ingest, SkipsCommentLines) {
  std::istringstream in("# header comment\nt,va,vb,gap\n0,1,1,10\n# mid comment\n1,2,2,11\n");
  const auto ds = ingest_csv(in, simple_schema());
  EXPECT_EQ(ds.vehicles[0].size(), 2u);
  EXPECT_EQ(ds.ivs[0][1], 11.0);
}

TEST(Schema, RejectsBadUnitsAndRoles) {
  EXPECT_THROW(ColumnMapping::from_json(nlohmann::json::parse(
                   R"({"columns":[{"column":"t","role":"time","unit":"km/h"}]})")),
               std::invalid_argument);
  EXPECT_THROW(ColumnMapping::from_json(nlohmann::json::parse(
                   R"({"columns":[{"column":"t","role":"velocity"}]})")),
               std::invalid_argument);
  EXPECT_THROW(ColumnMapping::from_json(nlohmann::json::parse(
                   R"({"columns":[{"column":"v","role":"speed"}]})")),
               std::invalid_argument);
  EXPECT_THROW(ColumnMapping::from_json(nlohmann::json::parse(R"({"cols":[]})")),
               std::invalid_argument);
}

TEST(Schema, JsonRoundTrip) {
  const auto schema = schema_file("kmh.schema.json");
  const auto again = ColumnMapping::from_json(schema.to_json());
  EXPECT_EQ(again.to_json(), schema.to_json());
}

TEST(Canonical, RoundTripPreservesEverything) {
  const auto raw = ingest_csv(kData / "three_vehicles.csv", schema_file("three_vehicles.schema.json"));
  const auto ds = prepare(raw);
  std::stringstream buffer;
  write_canonical(buffer, ds, {{"note", "test"}});
  const std::string text = buffer.str();
  EXPECT_EQ(text.rfind("# platoon: ", 0), 0u);
  EXPECT_NE(text.find("# config: {\"note\":\"test\"}"), std::string::npos);
  EXPECT_NE(text.find("t,C1_v,C1_a,C1_s,C1_theta,"), std::string::npos);
  EXPECT_NE(text.find("ivs_C1_C2,ivs_C2_C3"), std::string::npos);

  const auto back = read_canonical(buffer);
  ASSERT_EQ(back.vehicles.size(), 3u);
  EXPECT_EQ(back.mode, ds.mode);
  EXPECT_EQ(back.name, ds.name);
  EXPECT_EQ(back.direction, ds.direction);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.vehicles[i].vehicle_id, ds.vehicles[i].vehicle_id);
    EXPECT_EQ(back.vehicles[i].t, ds.vehicles[i].t);
    EXPECT_EQ(back.vehicles[i].v, ds.vehicles[i].v);
    EXPECT_EQ(back.vehicles[i].a, ds.vehicles[i].a);
    EXPECT_EQ(back.vehicles[i].s, ds.vehicles[i].s);
    EXPECT_EQ(back.vehicles[i].theta, ds.vehicles[i].theta);
  }
  EXPECT_EQ(back.ivs, ds.ivs);
}

TEST(Canonical, SerializationIsStable) {
  const auto ds =
      prepare(ingest_csv(kData / "three_vehicles.csv", schema_file("three_vehicles.schema.json")));
  std::stringstream first, second;
  write_canonical(first, ds);
  write_canonical(second, read_canonical(first));
  EXPECT_EQ(first.str(), second.str());
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(20.0), "20");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}
