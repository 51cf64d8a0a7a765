#include "platoon/config.hpp"

#include <fstream>

namespace platoon {

namespace {

using nlohmann::json;

void read_number(const json& j, const char* key, const std::string& path, double& out) {
  if (!j.contains(key)) return;
  const auto& value = j.at(key);
  if (!value.is_number()) throw ConfigError(path + "." + key, "expected a number");
  out = value.get<double>();
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j;
}

template <typename Fn>
void wrap_validate(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& err) {
    throw ConfigError(path, err.what());
  }
}

AccControllerParams acc_from_json(const json& j, const std::string& path) {
  AccControllerParams p;
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    if (name == "stable") {
      p = acc_preset(AccPreset::Stable);
    } else if (name == "unstable") {
      p = acc_preset(AccPreset::Unstable);
    } else {
      throw ConfigError(path + ".preset", "unknown ACC preset '" + name + "'");
    }
  }
  read_number(j, "headway", path, p.headway);
  read_number(j, "standstill", path, p.standstill);
  read_number(j, "kp", path, p.kp);
  read_number(j, "ki", path, p.ki);
  read_number(j, "kd", path, p.kd);
  read_number(j, "a_min", path, p.a_min);
  read_number(j, "a_max", path, p.a_max);
  read_number(j, "v_set", path, p.v_set);
  wrap_validate(path, [&] { p.validate(); });
  return p;
}

HumanModelParams human_from_json(const json& j, const std::string& path) {
  HumanModelParams p = human_preset();
  read_number(j, "desired_speed", path, p.desired_speed);
  read_number(j, "headway", path, p.headway);
  read_number(j, "min_gap", path, p.min_gap);
  read_number(j, "max_accel", path, p.max_accel);
  read_number(j, "comfortable_decel", path, p.comfortable_decel);
  read_number(j, "exponent", path, p.exponent);
  wrap_validate(path, [&] { p.validate(); });
  return p;
}

}  // namespace

EnergyConfig energy_config_from_json(const json& j, EnergyConfig base) {
  require_object(j, "coefficients");
  EnergyConfig cfg = std::move(base);
  if (j.contains("version")) {
    const auto& v = j.at("version");
    cfg.version = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (j.contains("vehicle")) {
    const auto& v = require_object(j.at("vehicle"), "vehicle");
    read_number(v, "mass", "vehicle", cfg.vehicle.mass);
    read_number(v, "f0", "vehicle", cfg.vehicle.f0);
    read_number(v, "f1", "vehicle", cfg.vehicle.f1);
    read_number(v, "f2", "vehicle", cfg.vehicle.f2);
    read_number(v, "length", "vehicle", cfg.vehicle.length);
    if (v.contains("g") && v.at("g").get<double>() != kGravity) {
      throw ConfigError("vehicle.g", "gravitational acceleration is fixed at 9.81");
    }
    wrap_validate("vehicle", [&] { cfg.vehicle.validate(); });
  }
  if (j.contains("vt_micro")) {
    const auto& vt = require_object(j.at("vt_micro"), "vt_micro");
    if (vt.contains("K")) {
      const auto& k = vt.at("K");
      if (!k.is_array() || k.size() != 4) throw ConfigError("vt_micro.K", "expected 4 rows");
      for (std::size_t i = 0; i < 4; ++i) {
        const std::string row_path = "vt_micro.K[" + std::to_string(i) + "]";
        if (!k[i].is_array() || k[i].size() != 4) throw ConfigError(row_path, "expected 4 entries");
        for (std::size_t c = 0; c < 4; ++c) {
          if (!k[i][c].is_number()) {
            throw ConfigError(row_path + "[" + std::to_string(c) + "]", "expected a number");
          }
          cfg.coefficients.vt_micro.k[i][c] = k[i][c].get<double>();
        }
      }
    }
  }
  if (j.contains("vsp")) {
    const auto& v = require_object(j.at("vsp"), "vsp");
    auto& p = cfg.coefficients.vsp;
    read_number(v, "f", "vsp", p.f);
    read_number(v, "alpha", "vsp", p.alpha);
    read_number(v, "beta", "vsp", p.beta);
    read_number(v, "gamma", "vsp", p.gamma);
    read_number(v, "delta", "vsp", p.delta);
    read_number(v, "epsilon", "vsp", p.epsilon);
    read_number(v, "rho", "vsp", p.rho);
    read_number(v, "lower", "vsp", p.lower);
    read_number(v, "upper", "vsp", p.upper);
    wrap_validate("vsp", [&] { p.validate(); });
  }
  if (j.contains("arrb")) {
    const auto& a = require_object(j.at("arrb"), "arrb");
    auto& p = cfg.coefficients.arrb;
    read_number(a, "beta1", "arrb", p.beta1);
    read_number(a, "beta2", "arrb", p.beta2);
    read_number(a, "beta3", "arrb", p.beta3);
    read_number(a, "beta4", "arrb", p.beta4);
    read_number(a, "gamma1", "arrb", p.gamma1);
    read_number(a, "gamma2", "arrb", p.gamma2);
  }
  return cfg;
}

json to_json(const EnergyConfig& cfg) {
  const auto& v = cfg.vehicle;
  const auto& vsp = cfg.coefficients.vsp;
  const auto& arrb = cfg.coefficients.arrb;
  json k = json::array();
  for (const auto& row : cfg.coefficients.vt_micro.k) k.push_back(row);
  return {
      {"version", cfg.version},
      {"vehicle",
       {{"mass", v.mass}, {"f0", v.f0}, {"f1", v.f1}, {"f2", v.f2}, {"g", v.g},
        {"length", v.length}}},
      {"vt_micro", {{"K", k}}},
      {"vsp",
       {{"f", vsp.f}, {"alpha", vsp.alpha}, {"beta", vsp.beta}, {"gamma", vsp.gamma},
        {"delta", vsp.delta}, {"epsilon", vsp.epsilon}, {"rho", vsp.rho}, {"lower", vsp.lower},
        {"upper", vsp.upper}}},
      {"arrb",
       {{"beta1", arrb.beta1}, {"beta2", arrb.beta2}, {"beta3", arrb.beta3},
        {"beta4", arrb.beta4}, {"gamma1", arrb.gamma1}, {"gamma2", arrb.gamma2}}},
  };
}

Scenario scenario_from_json(const json& j) {
  require_object(j, "scenario");
  Scenario sc;
  if (j.contains("preset")) {
    try {
      sc = preset_scenario(j.at("preset").get<std::string>());
    } catch (const std::invalid_argument& err) {
      throw ConfigError("preset", err.what());
    }
  } else {
    sc.leader = default_cycle();
  }
  if (j.contains("name")) sc.name = j.at("name").get<std::string>();
  read_number(j, "dt", "scenario", sc.dt);
  read_number(j, "output_dt", "scenario", sc.output_dt);
  read_number(j, "vehicle_length", "scenario", sc.vehicle_length);
  read_number(j, "accel_noise", "scenario", sc.accel_noise);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed", "expected an unsigned integer");
    sc.seed = j.at("seed").get<std::uint64_t>();
  }

  if (j.contains("leader")) {
    const auto& l = require_object(j.at("leader"), "leader");
    read_number(l, "base_speed", "leader", sc.leader.base_speed);
    read_number(l, "duration", "leader", sc.leader.duration);
    if (l.contains("events")) {
      if (!l.at("events").is_array()) throw ConfigError("leader.events", "expected an array");
      sc.leader.events.clear();
      for (std::size_t k = 0; k < l.at("events").size(); ++k) {
        const std::string path = "leader.events[" + std::to_string(k) + "]";
        const auto& e = require_object(l.at("events")[k], path);
        LeaderEvent ev;
        for (const char* key : {"t_start", "target_speed", "accel"}) {
          if (!e.contains(key)) throw ConfigError(path + "." + key, "missing");
        }
        read_number(e, "t_start", path, ev.t_start);
        read_number(e, "target_speed", path, ev.target_speed);
        read_number(e, "accel", path, ev.accel);
        sc.leader.events.push_back(ev);
      }
    }
    if (l.contains("grade")) {
      sc.leader.grade.clear();
      for (std::size_t k = 0; k < l.at("grade").size(); ++k) {
        const std::string path = "leader.grade[" + std::to_string(k) + "]";
        const auto& g = require_object(l.at("grade")[k], path);
        GradePoint gp;
        read_number(g, "s", path, gp.s);
        read_number(g, "theta", path, gp.theta);
        sc.leader.grade.push_back(gp);
      }
    }
  }
  read_number(j, "duration", "scenario", sc.leader.duration);

  if (j.contains("followers")) {
    const auto& fs = j.at("followers");
    if (!fs.is_array()) throw ConfigError("followers", "expected an array");
    sc.followers.clear();
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const std::string path = "followers[" + std::to_string(k) + "]";
      const auto& f = require_object(fs[k], path);
      const std::string type = f.value("type", std::string("acc"));
      if (type == "acc") {
        sc.followers.emplace_back(acc_from_json(f, path));
      } else if (type == "human") {
        sc.followers.emplace_back(human_from_json(f, path));
      } else {
        throw ConfigError(path + ".type", "expected 'acc' or 'human', got '" + type + "'");
      }
    }
  }
  wrap_validate("scenario", [&] { sc.validate(); });
  return sc;
}

json to_json(const FollowerModel& model) {
  if (const auto* acc = std::get_if<AccControllerParams>(&model)) {
    return {{"type", "acc"},        {"headway", acc->headway}, {"standstill", acc->standstill},
            {"kp", acc->kp},        {"ki", acc->ki},           {"kd", acc->kd},
            {"a_min", acc->a_min},  {"a_max", acc->a_max},     {"v_set", acc->v_set}};
  }
  const auto& h = std::get<HumanModelParams>(model);
  return {{"type", "human"},
          {"desired_speed", h.desired_speed},
          {"headway", h.headway},
          {"min_gap", h.min_gap},
          {"max_accel", h.max_accel},
          {"comfortable_decel", h.comfortable_decel},
          {"exponent", h.exponent}};
}

json to_json(const Scenario& sc) {
  json events = json::array();
  for (const auto& e : sc.leader.events) {
    events.push_back({{"t_start", e.t_start}, {"target_speed", e.target_speed}, {"accel", e.accel}});
  }
  json grade = json::array();
  for (const auto& g : sc.leader.grade) grade.push_back({{"s", g.s}, {"theta", g.theta}});
  json followers = json::array();
  for (const auto& f : sc.followers) followers.push_back(to_json(f));
  return {{"name", sc.name},
          {"dt", sc.dt},
          {"output_dt", sc.output_dt},
          {"vehicle_length", sc.vehicle_length},
          {"seed", sc.seed},
          {"accel_noise", sc.accel_noise},
          {"leader",
           {{"base_speed", sc.leader.base_speed},
            {"duration", sc.leader.duration},
            {"events", events},
            {"grade", grade}}},
          {"followers", followers}};
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ConfigError(path.string(), err.what());
  }
}

}  // namespace platoon
