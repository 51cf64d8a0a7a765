#include "platoon/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace platoon {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ColumnRole parse_role(const std::string& text) {
  static const std::map<std::string, ColumnRole> roles = {
      {"time", ColumnRole::Time},         {"speed", ColumnRole::Speed},
      {"accel", ColumnRole::Accel},       {"acceleration", ColumnRole::Accel},
      {"position", ColumnRole::Position}, {"distance", ColumnRole::Position},
      {"altitude", ColumnRole::Altitude}, {"grade", ColumnRole::Grade},
      {"ivs", ColumnRole::Ivs}};
  auto it = roles.find(text);
  if (it == roles.end()) throw std::invalid_argument("unknown column role '" + text + "'");
  return it->second;
}

std::string role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::Time: return "time";
    case ColumnRole::Speed: return "speed";
    case ColumnRole::Accel: return "accel";
    case ColumnRole::Position: return "position";
    case ColumnRole::Altitude: return "altitude";
    case ColumnRole::Grade: return "grade";
    case ColumnRole::Ivs: return "ivs";
  }
  return "speed";
}

double unit_factor(ColumnRole role, const std::string& unit) {
  if (unit.empty()) return 1.0;
  switch (role) {
    case ColumnRole::Time:
      if (unit == "s") return 1.0;
      if (unit == "ms") return 1e-3;
      break;
    case ColumnRole::Speed:
      if (unit == "m/s") return 1.0;
      if (unit == "km/h") return 1.0 / 3.6;
      break;
    case ColumnRole::Accel:
      if (unit == "m/s2" || unit == "m/s^2") return 1.0;
      break;
    case ColumnRole::Grade:
      if (unit == "rad") return 1.0;
      break;
    case ColumnRole::Position:
    case ColumnRole::Altitude:
    case ColumnRole::Ivs:
      if (unit == "m") return 1.0;
      if (unit == "km") return 1e3;
      break;
  }
  throw std::invalid_argument("unit '" + unit + "' is not valid for a " + role_name(role) +
                              " column");
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\"");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto pos = rest.find(sep);
    out.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return kNaN;
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    if (cell == "nan" || cell == "NaN" || cell == "NA") return kNaN;
    return std::nullopt;
  }
  return value;
}

// Fills NaN gaps by linear interpolation in t, holding the nearest value at
// either end. Returns false when every value is missing.
bool fill_gaps(const std::vector<double>& t, std::vector<double>& y) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isnan(y[i])) {
      xs.push_back(t[i]);
      ys.push_back(y[i]);
    }
  }
  if (xs.empty()) return false;
  if (xs.size() == y.size()) return true;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::isnan(y[i])) y[i] = interpolate(xs, ys, t[i]);
  }
  return true;
}

struct VehicleColumns {
  std::string id;
  std::optional<std::size_t> speed, accel, position, altitude, grade, ivs;
};

bool is_comment(const std::string& line) {
  const auto first = line.find_first_not_of(" \t");
  return first != std::string::npos && line[first] == '#';
}

}  // namespace

ColumnMapping ColumnMapping::from_json(const json& j) {
  ColumnMapping mapping;
  if (!j.contains("columns") || !j.at("columns").is_array()) {
    throw std::invalid_argument("schema: 'columns' array is required");
  }
  for (const auto& c : j.at("columns")) {
    ColumnSpec spec;
    spec.column = c.at("column").get<std::string>();
    spec.role = parse_role(c.at("role").get<std::string>());
    spec.vehicle = c.value("vehicle", std::string{});
    spec.unit = c.value("unit", std::string{});
    unit_factor(spec.role, spec.unit);
    if (spec.role != ColumnRole::Time && spec.vehicle.empty()) {
      throw std::invalid_argument("schema: column '" + spec.column + "' needs a vehicle id");
    }
    mapping.columns.push_back(std::move(spec));
  }
  if (j.contains("mode")) mapping.mode = parse_driving_mode(j.at("mode").get<std::string>());
  mapping.name = j.value("name", std::string{});
  mapping.direction = j.value("direction", std::string{});
  return mapping;
}

json ColumnMapping::to_json() const {
  json cols = json::array();
  for (const auto& c : columns) {
    json entry = {{"column", c.column}, {"role", role_name(c.role)}};
    if (!c.vehicle.empty()) entry["vehicle"] = c.vehicle;
    if (!c.unit.empty()) entry["unit"] = c.unit;
    cols.push_back(std::move(entry));
  }
  return {{"columns", cols}, {"mode", to_string(mode)}, {"name", name}, {"direction", direction}};
}

PlatoonDataset ingest_csv(const std::filesystem::path& path, const ColumnMapping& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return ingest_csv(in, schema);
}

PlatoonDataset ingest_csv(std::istream& in, const ColumnMapping& schema) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty() || is_comment(line)) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw DataError("csv: missing header row");

  auto column_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv: missing mandatory column '" + name + "'", {}, name);
    return static_cast<std::size_t>(it - header.begin());
  };

  std::optional<std::size_t> time_col;
  std::vector<VehicleColumns> vehicles;
  std::vector<double> factors(header.size(), 1.0);
  auto vehicle_slot = [&](const std::string& id) -> VehicleColumns& {
    auto it = std::find_if(vehicles.begin(), vehicles.end(),
                           [&](const VehicleColumns& v) { return v.id == id; });
    if (it != vehicles.end()) return *it;
    vehicles.push_back({id, {}, {}, {}, {}, {}, {}});
    return vehicles.back();
  };

  // Speed columns first so platoon order follows them.
  for (const auto& spec : schema.columns) {
    if (spec.role == ColumnRole::Speed) vehicle_slot(spec.vehicle);
  }
  for (const auto& spec : schema.columns) {
    const std::size_t idx = column_index(spec.column);
    factors[idx] = unit_factor(spec.role, spec.unit);
    if (spec.role == ColumnRole::Time) {
      time_col = idx;
      continue;
    }
    auto it = std::find_if(vehicles.begin(), vehicles.end(),
                           [&](const VehicleColumns& v) { return v.id == spec.vehicle; });
    if (it == vehicles.end()) {
      throw DataError("csv: vehicle '" + spec.vehicle + "' has no speed column", {}, spec.column);
    }
    switch (spec.role) {
      case ColumnRole::Speed: it->speed = idx; break;
      case ColumnRole::Accel: it->accel = idx; break;
      case ColumnRole::Position: it->position = idx; break;
      case ColumnRole::Altitude: it->altitude = idx; break;
      case ColumnRole::Grade: it->grade = idx; break;
      case ColumnRole::Ivs: it->ivs = idx; break;
      case ColumnRole::Time: break;
    }
  }
  if (!time_col) throw DataError("csv: schema declares no time column");
  if (vehicles.empty()) throw DataError("csv: schema declares no speed column");

  std::vector<std::vector<double>> data(header.size());
  std::vector<bool> used(header.size(), false);
  used[*time_col] = true;
  for (const auto& v : vehicles) {
    for (auto idx : {v.speed, v.accel, v.position, v.altitude, v.grade, v.ivs}) {
      if (idx) used[*idx] = true;
    }
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || is_comment(line)) continue;
    ++row;
    const auto cells = split(line);
    if (cells.size() < header.size()) {
      throw DataError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(header.size()),
                      row);
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (!used[c]) continue;
      const auto value = parse_number(cells[c]);
      if (!value) {
        throw DataError("csv: unparsable value '" + cells[c] + "' at row " + std::to_string(row) +
                            ", column '" + header[c] + "'",
                        row, header[c]);
      }
      data[c].push_back(*value * factors[c]);
    }
    const auto& tcol = data[*time_col];
    if (std::isnan(tcol.back())) {
      throw DataError("csv: missing time at row " + std::to_string(row), row, header[*time_col]);
    }
    if (tcol.size() > 1 && !(tcol.back() > tcol[tcol.size() - 2])) {
      throw DataError("csv: time not strictly increasing at row " + std::to_string(row), row,
                      header[*time_col]);
    }
  }
  if (row < 2) throw DataError("csv: fewer than two data rows");

  const auto& t = data[*time_col];
  auto take = [&](std::optional<std::size_t> idx) -> std::vector<double> {
    if (!idx) return {};
    std::vector<double> y = data[*idx];
    if (!fill_gaps(t, y)) {
      throw DataError("csv: column '" + header[*idx] + "' has no values", {}, header[*idx]);
    }
    return y;
  };

  PlatoonDataset ds;
  ds.mode = schema.mode;
  ds.name = schema.name;
  ds.direction = schema.direction;
  for (const auto& cols : vehicles) {
    Trajectory traj;
    traj.vehicle_id = cols.id;
    traj.t = t;
    traj.v = take(cols.speed);
    traj.a = take(cols.accel);
    traj.s = take(cols.position);
    traj.h = take(cols.altitude);
    traj.theta = take(cols.grade);
    ds.vehicles.push_back(std::move(traj));
  }
  ds.ivs.resize(ds.pair_count());
  for (std::size_t k = 1; k < vehicles.size(); ++k) ds.ivs[k - 1] = take(vehicles[k].ivs);
  if (vehicles.front().ivs) {
    throw DataError("csv: leader '" + vehicles.front().id + "' cannot carry an ivs column", {},
                    header[*vehicles.front().ivs]);
  }
  ds.validate();
  return ds;
}

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

void write_canonical(std::ostream& out, const PlatoonDataset& dataset, const json& header) {
  dataset.validate();
  const json meta = {{"mode", to_string(dataset.mode)},
                     {"name", dataset.name},
                     {"direction", dataset.direction}};
  out << "# platoon: " << meta.dump() << '\n';
  out << "# config: " << header.dump() << '\n';

  std::vector<const std::vector<double>*> columns;
  std::vector<std::string> names;
  names.push_back("t");
  columns.push_back(&dataset.vehicles.front().t);
  for (const auto& traj : dataset.vehicles) {
    names.push_back(traj.vehicle_id + "_v");
    columns.push_back(&traj.v);
    if (traj.has_accel()) {
      names.push_back(traj.vehicle_id + "_a");
      columns.push_back(&traj.a);
    }
    if (traj.has_position()) {
      names.push_back(traj.vehicle_id + "_s");
      columns.push_back(&traj.s);
    }
    if (traj.has_grade()) {
      names.push_back(traj.vehicle_id + "_theta");
      columns.push_back(&traj.theta);
    }
  }
  for (std::size_t k = 0; k < dataset.ivs.size(); ++k) {
    if (dataset.ivs[k].empty()) continue;
    names.push_back("ivs_" + dataset.vehicles[k].vehicle_id + "_" +
                    dataset.vehicles[k + 1].vehicle_id);
    columns.push_back(&dataset.ivs[k]);
  }

  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  const std::size_t n = dataset.vehicles.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (c ? "," : "") << format_number((*columns[c])[i]);
    }
    out << '\n';
  }
}

void write_canonical(const std::filesystem::path& path, const PlatoonDataset& dataset,
                     const json& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_canonical(out, dataset, header);
}

PlatoonDataset read_canonical(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_canonical(in);
}

PlatoonDataset read_canonical(std::istream& in) {
  std::stringstream body;
  json meta = json::object();
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (is_comment(line)) {
      const std::string prefix = "# platoon: ";
      if (line.rfind(prefix, 0) == 0) meta = json::parse(line.substr(prefix.size()));
      continue;
    }
    if (trim(line).empty()) continue;
    header = split(line);
    body << line << '\n';
    break;
  }
  body << in.rdbuf();
  if (header.empty() || header.front() != "t") throw DataError("canonical csv: bad header");

  ColumnMapping schema;
  schema.columns.push_back({"t", ColumnRole::Time, {}, "s"});
  // Speed columns first: they fix the platoon order.
  for (const auto& name : header) {
    if (name.size() > 2 && name.ends_with("_v")) {
      schema.columns.push_back({name, ColumnRole::Speed, name.substr(0, name.size() - 2), {}});
    }
  }
  std::vector<std::string> order;
  for (const auto& c : schema.columns) {
    if (c.role == ColumnRole::Speed) order.push_back(c.vehicle);
  }
  for (const auto& name : header) {
    auto suffix = [&](const std::string& sfx, ColumnRole role) {
      if (name.size() > sfx.size() && name.ends_with(sfx)) {
        schema.columns.push_back({name, role, name.substr(0, name.size() - sfx.size()), {}});
        return true;
      }
      return false;
    };
    if (name.rfind("ivs_", 0) == 0) {
      // ivs_<leader>_<follower>: the follower is the id that completes the name.
      const auto it = std::find_if(order.begin(), order.end(), [&](const std::string& id) {
        return name.size() > id.size() + 5 && name.ends_with("_" + id);
      });
      if (it == order.end()) throw DataError("canonical csv: unknown pair in '" + name + "'");
      schema.columns.push_back({name, ColumnRole::Ivs, *it, {}});
      continue;
    }
    if (suffix("_a", ColumnRole::Accel) || suffix("_s", ColumnRole::Position)) continue;
    suffix("_theta", ColumnRole::Grade);
  }

  PlatoonDataset ds = ingest_csv(body, schema);
  if (meta.contains("mode")) ds.mode = parse_driving_mode(meta.at("mode").get<std::string>());
  ds.name = meta.value("name", std::string{});
  ds.direction = meta.value("direction", std::string{});
  ds.validate();
  return ds;
}

}  // namespace platoon
