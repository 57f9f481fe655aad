#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli/config.hpp"

namespace steer::cli {

/// Writes to a sibling temporary file and renames it into place.
/// Throws IoError naming the path.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes fig3a.csv, fig3b.csv and fig4b.csv (and sweep_report.json) as
/// requested by `emit`. Returns the written paths.
std::vector<std::filesystem::path> cmd_sweep(const RunConfig& config);

/// Writes fig4a.csv and fisher_scan.json for one alpha.
std::vector<std::filesystem::path> cmd_fisher_scan(const RunConfig& config, double alpha);

/// Ideal and simulated witness reports for one alpha; also written to
/// witness.json when `report` is emitted.
nlohmann::json cmd_witness(const RunConfig& config, double alpha);

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

using PrepareFn = std::function<PreparedState(const SourceConfig&)>;

/// Oracle equivalence, analytic fixed points and module invariants. The
/// state preparation under test is injectable.
std::vector<CheckResult> run_validation(const PrepareFn& prepare_fn = prepare,
                                        std::uint64_t seed = 2024);

/// Prints one line per check to `out`, failures again to `err`. Returns 0
/// when every check passes, 1 otherwise.
int cmd_validate(std::ostream& out, std::ostream& err, const PrepareFn& prepare_fn = prepare);

}  // namespace steer::cli
