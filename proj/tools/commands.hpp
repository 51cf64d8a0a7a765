#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "platoon/analysis.hpp"
#include "platoon/config.hpp"

namespace platoon::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kCollision = 3 };

/// Bad flag values or flag combinations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> input;
  std::vector<std::filesystem::path> inputs;  // correlate
  std::optional<std::filesystem::path> schema;
  std::optional<std::filesystem::path> scenario;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;  // resampling / output grid; kDefaultGridStep when unset
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> coeffs;
  SegmentationOptions segmentation;
  GapReference timegap_ref = GapReference::Follower;
  int accel_window = kDefaultAccelWindow;
  double vehicle_length = kDefaultVehicleLength;
  bool normalize = true;
  std::vector<std::pair<std::string, double>> masses;
  double time_bin = 0.1;
  double space_bin = 1.0;
  double v_bin = 1.0;
  double a_bin = 0.1;

  double grid_step() const { return dt.value_or(kDefaultGridStep); }
  nlohmann::json to_json() const;
};

/// "a_thr,min_dur,pad"
SegmentationOptions parse_segments(const std::string& text);

/// Coefficients from `path`, else the bundled defaults file, else the
/// compiled-in defaults.
EnergyConfig load_coefficients(const std::optional<std::filesystem::path>& path);
std::filesystem::path bundled_coefficients_path();

int cmd_ingest(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_assess(const RunConfig& cfg, std::ostream& log);
int cmd_analyze(const RunConfig& cfg, std::ostream& log);
int cmd_correlate(const RunConfig& cfg, std::ostream& log);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace platoon::cli
