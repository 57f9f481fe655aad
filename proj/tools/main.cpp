#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "steer/error.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::uint64_t> shots;
  bool noiseless = false;
  std::string out_dir;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool with_alpha) {
  cmd->add_option("--config", f.config_path, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "Base seed (overrides the config)");
  if (with_alpha) cmd->add_option("--alpha", f.alpha, "Waveplate parameter alpha in radians");
  cmd->add_option("--shots", f.shots, "Shots per setting; 0 means noiseless");
  cmd->add_flag("--noiseless", f.noiseless, "Use exact probabilities instead of counts");
  cmd->add_option("--out", f.out_dir, "Output directory");
}

steer::cli::RunConfig resolve(const Flags& f) {
  steer::cli::RunConfig c;
  if (!f.config_path.empty()) c = steer::cli::load_config(f.config_path);
  if (f.seed) c.scan.seed = *f.seed;
  if (f.shots) {
    if (*f.shots == 0) {
      c.noiseless = true;
    } else {
      c.scan.shots_per_setting = *f.shots;
    }
  }
  if (f.noiseless) c.noiseless = true;
  if (!f.out_dir.empty()) c.output_dir = f.out_dir;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-qubit steering witnesses and simulated phase-scan experiment"};
  app.require_subcommand(1);
  Flags flags;
  auto* sweep = app.add_subcommand("sweep", "Witness curves over the alpha grid");
  auto* scan = app.add_subcommand("fisher-scan", "Conditional Fisher information versus theta");
  auto* witness = app.add_subcommand("witness", "JSON witness report at one alpha");
  auto* validate = app.add_subcommand("validate", "Oracle and invariant checks");
  add_run_flags(sweep, flags, false);
  add_run_flags(scan, flags, true);
  add_run_flags(witness, flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (validate->parsed()) return steer::cli::cmd_validate(std::cout, std::cerr);
    const auto config = resolve(flags);
    const double alpha = flags.alpha.value_or(config.source.alpha);
    if (sweep->parsed()) {
      for (const auto& p : steer::cli::cmd_sweep(config)) std::cout << p.string() << "\n";
    } else if (scan->parsed()) {
      for (const auto& p : steer::cli::cmd_fisher_scan(config, alpha)) std::cout << p.string() << "\n";
    } else if (witness->parsed()) {
      std::cout << steer::cli::cmd_witness(config, alpha).dump(2) << "\n";
    }
    return 0;
  } catch (const steer::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const steer::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
