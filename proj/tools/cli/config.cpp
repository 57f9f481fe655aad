#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "steer/error.hpp"

namespace steer::cli {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) throw InvalidInput("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!obj.at(key).is_number_unsigned()) {
      throw InvalidInput(where + "." + key + " must be a nonnegative integer");
    }
  }
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(where + "." + key + " has the wrong type");
  }
}

MeasurementSetting read_setting(const json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 3) {
    throw InvalidInput(where + " must be a Bloch vector [x, y, z]");
  }
  for (const auto& c : value) {
    if (!c.is_number()) throw InvalidInput(where + " must hold numbers");
  }
  return MeasurementSetting(value[0].get<double>(), value[1].get<double>(), value[2].get<double>());
}

json setting_json(const MeasurementSetting& s) {
  const auto b = s.bloch();
  return json::array({b.x(), b.y(), b.z()});
}

SourceConfig source_from_json(const json& obj) {
  reject_unknown(obj, {"alice_angle", "alpha", "t_h", "t_v", "indistinguishability"}, "source");
  SourceConfig c;
  read(obj, "alice_angle", c.alice_angle, "source");
  read(obj, "alpha", c.alpha, "source");
  read(obj, "t_h", c.t_h, "source");
  read(obj, "t_v", c.t_v, "source");
  read(obj, "indistinguishability", c.indistinguishability, "source");
  return c;
}

ScanConfig scan_from_json(const json& obj) {
  reject_unknown(obj,
                 {"thetas", "shots_per_setting", "seed", "conditioning", "generator", "readout"},
                 "scan");
  ScanConfig c;
  read(obj, "thetas", c.thetas, "scan");
  read(obj, "shots_per_setting", c.shots_per_setting, "scan");
  read(obj, "seed", c.seed, "scan");
  if (obj.contains("conditioning")) c.conditioning = read_setting(obj["conditioning"], "scan.conditioning");
  if (obj.contains("generator")) c.generator = read_setting(obj["generator"], "scan.generator");
  if (obj.contains("readout")) c.readout = read_setting(obj["readout"], "scan.readout");
  return c;
}

}  // namespace

std::vector<double> default_alpha_grid() {
  std::vector<double> grid(27);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = std::numbers::pi / 6.0 * i / 26.0;
  return grid;
}

void RunConfig::validate() const {
  source.validate();
  scan.validate();
  if (alpha_grid.empty()) throw InvalidInput("alpha_grid is empty");
  for (double a : alpha_grid) {
    if (!(a >= 0.0 && a < std::numbers::pi / 4.0)) {
      throw InvalidInput("alpha_grid values must lie in [0, pi/4)");
    }
  }
  for (const auto& e : emit) {
    if (!kEmitTargets.count(e)) throw InvalidInput("unknown emit target '" + e + "'");
  }
  if (output_dir.empty()) throw InvalidInput("output_dir is empty");
}

RunConfig config_from_json(const json& doc) {
  reject_unknown(doc,
                 {"source", "scan", "alpha_grid", "output_dir", "emit", "mc_runs", "noiseless"},
                 "config");
  RunConfig c;
  if (doc.contains("source")) c.source = source_from_json(doc["source"]);
  if (doc.contains("scan")) c.scan = scan_from_json(doc["scan"]);
  read(doc, "alpha_grid", c.alpha_grid, "config");
  std::string out = c.output_dir.string();
  read(doc, "output_dir", out, "config");
  c.output_dir = out;
  std::vector<std::string> emit(c.emit.begin(), c.emit.end());
  read(doc, "emit", emit, "config");
  c.emit = {emit.begin(), emit.end()};
  read(doc, "mc_runs", c.mc_runs, "config");
  read(doc, "noiseless", c.noiseless, "config");
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  return {
      {"source",
       {{"alice_angle", c.source.alice_angle},
        {"alpha", c.source.alpha},
        {"t_h", c.source.t_h},
        {"t_v", c.source.t_v},
        {"indistinguishability", c.source.indistinguishability}}},
      {"scan",
       {{"thetas", c.scan.thetas},
        {"shots_per_setting", c.scan.shots_per_setting},
        {"seed", c.scan.seed},
        {"conditioning", setting_json(c.scan.conditioning)},
        {"generator", setting_json(c.scan.generator)},
        {"readout", setting_json(c.scan.readout)}}},
      {"alpha_grid", c.alpha_grid},
      {"output_dir", c.output_dir.string()},
      {"emit", std::vector<std::string>(c.emit.begin(), c.emit.end())},
      {"mc_runs", c.mc_runs},
      {"noiseless", c.noiseless},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace steer::cli
