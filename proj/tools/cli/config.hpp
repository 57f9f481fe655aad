#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "steer/expsim.hpp"
#include "steer/source.hpp"

namespace steer::cli {

/// 27 points from 0 to pi/6 inclusive.
std::vector<double> default_alpha_grid();

inline const std::set<std::string> kEmitTargets{"fig3a", "fig3b", "fig4a", "fig4b", "report"};

struct RunConfig {
  SourceConfig source;
  ScanConfig scan;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::filesystem::path output_dir = "out";
  std::set<std::string> emit = kEmitTargets;
  std::size_t mc_runs = 100;
  /// Simulated columns come from exact probabilities instead of counts.
  bool noiseless = false;

  bool wants(const std::string& target) const { return emit.count(target) != 0; }

  /// Throws InvalidInput.
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

/// Throws InvalidInput when the file is missing or malformed.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace steer::cli
