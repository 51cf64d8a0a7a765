#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/trajectory.hpp"

namespace platoon {

enum class ColumnRole { Time, Speed, Accel, Position, Altitude, Grade, Ivs };

/// One mapped CSV column. For Ivs columns `vehicle` names the follower of
/// the pair; the leader is whichever vehicle precedes it in platoon order.
struct ColumnSpec {
  std::string column;
  ColumnRole role = ColumnRole::Speed;
  std::string vehicle;
  std::string unit;  // s|ms, m/s|km/h, m|km, m/s2, rad; empty means SI
};

/// Declares how a raw campaign CSV maps onto a platoon. Vehicle order is the
/// order of first appearance of each vehicle among the speed columns.
struct ColumnMapping {
  std::vector<ColumnSpec> columns;
  DrivingMode mode = DrivingMode::Human;
  std::string name;
  std::string direction;

  static ColumnMapping from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Reads a raw CSV (header row required). Empty cells in a mapped column are
/// filled by linear interpolation over time; every other unparsable cell is a
/// DataError naming its row and column.
PlatoonDataset ingest_csv(const std::filesystem::path& path, const ColumnMapping& schema);
PlatoonDataset ingest_csv(std::istream& in, const ColumnMapping& schema);

/// Writes `t, <id>_v, <id>_a, <id>_s, <id>_theta, ivs_<i>_<j>` in SI units.
/// `header` (resolved config) is embedded as a `# config:` comment line.
void write_canonical(std::ostream& out, const PlatoonDataset& dataset,
                     const nlohmann::json& header = nlohmann::json::object());
void write_canonical(const std::filesystem::path& path, const PlatoonDataset& dataset,
                     const nlohmann::json& header = nlohmann::json::object());

/// Parses a file produced by write_canonical, including its metadata line.
PlatoonDataset read_canonical(const std::filesystem::path& path);
PlatoonDataset read_canonical(std::istream& in);

/// Shortest round-trip decimal representation of x.
std::string format_number(double x);

}  // namespace platoon
