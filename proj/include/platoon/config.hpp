#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "platoon/energy.hpp"
#include "platoon/sim.hpp"

namespace platoon {

/// Invalid configuration; `path()` is the JSON field path (e.g.
/// "followers[2].kp") of the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Vehicle parameters plus model coefficients; the content of a coefficients
/// file. Fields missing from the JSON keep the value already in `base`.
struct EnergyConfig {
  std::string version = "1";
  VehicleParams vehicle;
  ModelCoefficients coefficients;
};

EnergyConfig energy_config_from_json(const nlohmann::json& j, EnergyConfig base = {});
nlohmann::json to_json(const EnergyConfig& config);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);
nlohmann::json to_json(const FollowerModel& model);

nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace platoon
