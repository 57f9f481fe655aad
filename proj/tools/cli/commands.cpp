#include "cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "steer/assemblage.hpp"
#include "steer/csv.hpp"
#include "steer/error.hpp"
#include "steer/random.hpp"
#include "steer/witnesses.hpp"

namespace steer::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) { return format_number(v); }

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  return dir;
}

SourceConfig at_alpha(SourceConfig source, double alpha) {
  source.alpha = alpha;
  return source;
}

json report_json(const WitnessReport& r) {
  return {{"name", std::string(to_string(r.name))},
          {"value", r.value},
          {"bound", r.bound},
          {"sigma_value", r.sigma_value},
          {"sigma_bound", r.sigma_bound},
          {"violated", r.violated}};
}

/// Simulated reports also carry the distance from the bound in combined
/// standard deviations; `significant` asks for a violation beyond 3 of them.
json simulated_json(const WitnessReport& r) {
  json j = report_json(r);
  const double sigma = std::hypot(r.sigma_value, r.sigma_bound);
  const double gap = r.name == WitnessKind::Reid ? r.bound - r.value : r.value - r.bound;
  const double z = sigma > 0.0 ? gap / sigma : (gap > kVerdictTolerance ? kInf : 0.0);
  j["z_score"] = std::isfinite(z) ? json(z) : json("inf");
  j["significant"] = r.violated && z > 3.0;
  return j;
}

json fit_json(const FitResult& f) {
  return {{"v", f.v},
          {"theta0", f.theta0},
          {"residual_rms", f.residual_rms},
          {"converged", f.converged},
          {"sigma_v", f.sigma_v},
          {"sigma_theta0", f.sigma_theta0},
          {"iterations", f.iterations},
          {"omega", f.omega},
          {"max_fisher", max_fisher(f)}};
}

json fisher_json(const ConditionalFisherEstimate& e) {
  json branches = json::array();
  for (std::size_t d = 0; d < 2; ++d) {
    json b = {{"outcome", outcome_value(static_cast<int>(d))}, {"weight", e.weight[d]}};
    b["fit"] = e.fits[d] ? fit_json(*e.fits[d]) : json(nullptr);
    branches.push_back(b);
  }
  return {{"value", e.value}, {"branches", branches}};
}

struct Witnesses {
  WitnessReport s, reid, yfg;
};

Witnesses ideal_witnesses(const DensityMatrix& rho, const ScanConfig& scan) {
  return {s_witness(rho), reid_check(rho), yfg_check(rho, scan.conditioning, scan.generator)};
}

/// Simulated reports; in noiseless mode the counts are replaced by exact
/// probabilities and the Fisher value comes from fitting exact fringes.
SimulatedWitnesses simulated_witnesses(const PreparedState& state, const RunConfig& config,
                                       const ScanConfig& scan) {
  if (!config.noiseless) return simulate_witnesses(state, scan, config.mc_runs);
  const auto ideal = ideal_witnesses(state.rho, scan);
  SimulatedWitnesses out{ideal.s, ideal.reid, ideal.yfg,
                         conditional_fisher_noiseless(state, scan), scan.seed};
  out.yfg.value = out.fisher.value;
  out.yfg.violated = violates(WitnessKind::Yfg, out.yfg.value, out.yfg.bound);
  return out;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("cannot write " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

std::vector<fs::path> cmd_sweep(const RunConfig& config) {
  config.validate();
  const fs::path dir = ensure_dir(config.output_dir);

  std::string fig3a = csv_line({"alpha_rad", "S", "S_sigma", "bound", "S_sim"});
  std::string fig3b = csv_line({"alpha_rad", "reid_product", "reid_product_sigma", "reid_bound",
                                "reid_bound_sigma", "reid_product_sim", "reid_bound_sim"});
  std::string fig4b = csv_line({"alpha_rad", "four_var_est", "four_var_est_sigma", "fisher_cond",
                                "fisher_cond_sigma", "four_var_est_sim", "fisher_cond_sim"});
  json rows = json::array();

  for (std::size_t i = 0; i < config.alpha_grid.size(); ++i) {
    const double alpha = config.alpha_grid[i];
    const auto state = prepare(at_alpha(config.source, alpha));
    ScanConfig scan = config.scan;
    scan.seed = derive_seed(config.scan.seed, i);
    const auto ideal = ideal_witnesses(state.rho, scan);
    const auto sim = simulated_witnesses(state, config, scan);

    const std::string a = num(alpha);
    fig3a += csv_line({a, num(ideal.s.value), num(sim.s.sigma_value), num(ideal.s.bound),
                       num(sim.s.value)});
    fig3b += csv_line({a, num(ideal.reid.value), num(sim.reid.sigma_value), num(ideal.reid.bound),
                       num(sim.reid.sigma_bound), num(sim.reid.value), num(sim.reid.bound)});
    fig4b += csv_line({a, num(ideal.yfg.bound), num(sim.yfg.sigma_bound), num(ideal.yfg.value),
                       num(sim.yfg.sigma_value), num(sim.yfg.bound), num(sim.yfg.value)});
    rows.push_back({{"alpha", alpha},
                    {"seed", scan.seed},
                    {"success_probability", state.success_probability},
                    {"ideal", {report_json(ideal.s), report_json(ideal.reid), report_json(ideal.yfg)}},
                    {"simulated", {simulated_json(sim.s), simulated_json(sim.reid), simulated_json(sim.yfg)}},
                    {"fisher", fisher_json(sim.fisher)}});
  }

  std::vector<fs::path> written;
  auto emit = [&](const std::string& target, const std::string& file, const std::string& body) {
    if (!config.wants(target)) return;
    write_atomic(dir / file, body);
    written.push_back(dir / file);
  };
  emit("fig3a", "fig3a.csv", fig3a);
  emit("fig3b", "fig3b.csv", fig3b);
  emit("fig4b", "fig4b.csv", fig4b);
  emit("report", "sweep_report.json",
       json{{"command", "sweep"}, {"config", to_json(config)}, {"rows", rows}}.dump(2) + "\n");
  return written;
}

std::vector<fs::path> cmd_fisher_scan(const RunConfig& config, double alpha) {
  config.validate();
  const fs::path dir = ensure_dir(config.output_dir);
  const auto source = at_alpha(config.source, alpha);
  source.validate();
  const auto state = prepare(source);
  const ScanConfig& scan = config.scan;
  const auto probs = scan_probabilities(state, scan);
  const std::uint64_t main_seed = derive_seed(scan.seed, 2);
  const std::uint64_t mc_seed = derive_seed(scan.seed, 3);

  std::array<std::optional<FitResult>, 2> fits;
  std::optional<ScanData> data;
  if (config.noiseless) {
    for (int d = 0; d < 2; ++d) {
      const auto k = static_cast<std::size_t>(d);
      if (!probs.degenerate[k]) fits[k] = fit_fringe(probs, d);
    }
  } else {
    data = sample_counts(probs, scan.shots_per_setting, main_seed);
    for (int d = 0; d < 2; ++d) {
      if (data->branch_total(d) > 0) fits[static_cast<std::size_t>(d)] = fit_fringe(*data, d);
    }
  }

  const std::size_t n = scan.thetas.size();
  std::array<std::vector<double>, 2> fisher, sigma;
  std::array<std::vector<bool>, 2> clamped;
  for (std::size_t d = 0; d < 2; ++d) {
    fisher[d].assign(n, kNaN);
    sigma[d].assign(n, kNaN);
    clamped[d].assign(n, false);
    if (!fits[d]) continue;
    if (!fits[d]->converged) throw Unfittable("fringe fit did not converge");
    for (std::size_t i = 0; i < n; ++i) {
      const auto pt = fisher_from_fit(*fits[d], scan.thetas[i]);
      fisher[d][i] = pt.value;
      clamped[d][i] = pt.clamped;
      sigma[d][i] = 0.0;
    }
  }

  std::size_t mc_failures = 0;
  if (!config.noiseless && config.mc_runs > 0) {
    const auto series = monte_carlo_series(
        [&](std::uint64_t s) {
          const auto sample = sample_counts(probs, scan.shots_per_setting, s);
          std::vector<double> values;
          for (int d = 0; d < 2; ++d) {
            if (!fits[static_cast<std::size_t>(d)]) continue;
            const auto fit = fit_fringe(sample, d);
            if (!fit.converged) throw Unfittable("fringe fit did not converge");
            for (double t : scan.thetas) values.push_back(fisher_from_fit(fit, t).value);
          }
          return values;
        },
        config.mc_runs, mc_seed);
    mc_failures = series.failures;
    std::size_t offset = 0;
    for (std::size_t d = 0; d < 2; ++d) {
      if (!fits[d]) continue;
      for (std::size_t i = 0; i < n; ++i) sigma[d][i] = series.sigma[offset + i];
      offset += n;
    }
  }

  std::string csv = csv_line({"theta_deg", "F_D", "F_D_sigma", "F_A", "F_A_sigma"});
  for (std::size_t i = 0; i < n; ++i) {
    csv += csv_line({num(scan.thetas[i] * 180.0 / std::numbers::pi), num(fisher[0][i]),
                     num(sigma[0][i]), num(fisher[1][i]), num(sigma[1][i])});
  }

  json branches = json::array();
  for (std::size_t d = 0; d < 2; ++d) {
    json b = {{"outcome", outcome_value(static_cast<int>(d))},
              {"probability", probs.alice_prob[d]},
              {"degenerate", probs.degenerate[d]}};
    b["fit"] = fits[d] ? fit_json(*fits[d]) : json(nullptr);
    json flags = json::array();
    for (std::size_t i = 0; i < n; ++i) flags.push_back(static_cast<bool>(clamped[d][i]));
    b["clamped"] = flags;
    branches.push_back(b);
  }
  const json report = {{"command", "fisher-scan"},
                       {"alpha", alpha},
                       {"config", to_json(config)},
                       {"success_probability", state.success_probability},
                       {"seeds", {{"base", scan.seed}, {"counts", main_seed}, {"monte_carlo", mc_seed}}},
                       {"monte_carlo_failures", mc_failures},
                       {"branches", branches}};

  std::vector<fs::path> written;
  if (config.wants("fig4a")) {
    write_atomic(dir / "fig4a.csv", csv);
    written.push_back(dir / "fig4a.csv");
  }
  if (config.wants("report")) {
    write_atomic(dir / "fisher_scan.json", report.dump(2) + "\n");
    written.push_back(dir / "fisher_scan.json");
    if (data) {
      write_atomic(dir / "scan_counts.csv", to_csv(*data));
      written.push_back(dir / "scan_counts.csv");
    }
  }
  return written;
}

json cmd_witness(const RunConfig& config, double alpha) {
  config.validate();
  const auto source = at_alpha(config.source, alpha);
  source.validate();
  const auto state = prepare(source);
  const auto ideal = ideal_witnesses(state.rho, config.scan);
  const auto sim = simulated_witnesses(state, config, config.scan);
  const std::uint64_t seed = config.scan.seed;

  json doc = {
      {"command", "witness"},
      {"alpha", alpha},
      {"config", to_json(config)},
      {"state",
       {{"success_probability", state.success_probability}, {"purity", state.rho.purity()}}},
      {"ideal", {report_json(ideal.s), report_json(ideal.reid), report_json(ideal.yfg)}},
      {"simulated", {simulated_json(sim.s), simulated_json(sim.reid), simulated_json(sim.yfg)}},
      {"fisher", fisher_json(sim.fisher)},
      {"seeds",
       {{"base", seed},
        {"correlators", derive_seed(seed, 1)},
        {"counts", derive_seed(seed, 2)},
        {"monte_carlo", derive_seed(seed, 3)}}},
  };
  if (config.wants("report")) {
    const fs::path dir = ensure_dir(config.output_dir);
    write_atomic(dir / "witness.json", doc.dump(2) + "\n");
  }
  return doc;
}

namespace {

DensityMatrix random_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = Complex(g(rng), g(rng));
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  return DensityMatrix(ComplexMatrix(0.5 * (rho + rho.adjoint())));
}

DensityMatrix random_pure(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return DensityMatrix(PureState::normalized(v));
}

MeasurementSetting random_setting(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return MeasurementSetting::from_direction(Eigen::Vector3d(g(rng), g(rng), g(rng)));
}

CheckResult check(std::string name, bool ok, const std::string& detail) {
  return {std::move(name), ok, detail};
}

std::string fmt(const char* label, double v) { return std::string(label) + "=" + num(v); }

}  // namespace

std::vector<CheckResult> run_validation(const PrepareFn& prepare_fn, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto guarded = [&](const std::string& name, const std::function<CheckResult()>& body) {
    try {
      out.push_back(body());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pi = std::numbers::pi;

  guarded("oracle-equivalence", [&] {
    double worst = 0.0, worst_p = 0.0;
    for (int i = 0; i < 100; ++i) {
      SourceConfig c;
      c.alice_angle = pi * u(rng);
      c.alpha = pi * (u(rng) - 0.5);
      c.t_h = 0.2 + 0.8 * u(rng);
      c.t_v = 0.05 + 0.95 * u(rng);
      c.indistinguishability = i < 50 ? 1.0 : 0.01 + 0.98 * u(rng);
      const auto a = prepare_fn(c), b = bosonic_oracle(c);
      worst = std::max(worst, trace_distance(a.rho, b.rho));
      worst_p = std::max(worst_p, std::abs(a.success_probability - b.success_probability));
    }
    return check("oracle-equivalence", worst < 1e-10 && worst_p < 1e-12,
                 fmt("max_trace_distance", worst) + " " + fmt("max_success_gap", worst_p));
  });

  guarded("maximal-correlation", [&] {
    SourceConfig c;
    c.alpha = pi / 6;
    const auto s = prepare_fn(c);
    const auto bell = PureState::normalized((ComplexVector(4) << 0.5, 0.5, 0.5, -0.5).finished());
    const double f = fidelity(s.rho, bell), sv = s_witness(s.rho).value;
    return check("maximal-correlation", f >= 1.0 - 1e-10 && std::abs(sv - std::sqrt(3.0)) < 1e-9,
                 fmt("fidelity", f) + " " + fmt("S", sv));
  });

  guarded("separable-endpoint", [&] {
    SourceConfig c;
    c.alpha = 0.0;
    const auto rho = prepare_fn(c).rho;
    const auto s = s_witness(rho), r = reid_check(rho), y = yfg_check(rho);
    const bool ok = std::abs(s.value - 1.0 / std::sqrt(3.0)) < 1e-9 &&
                    std::abs(r.value - 1.0) < 1e-9 && std::abs(r.bound - 1.0) < 1e-9 &&
                    std::abs(y.value - 4.0) < 1e-6 && std::abs(y.bound - 4.0) < 1e-6 &&
                    !s.violated && !r.violated && !y.violated;
    return check("separable-endpoint", ok,
                 fmt("S", s.value) + " " + fmt("reid", r.value) + " " + fmt("yfg", y.value));
  });

  guarded("yfg-maximal-violation", [&] {
    SourceConfig c;
    c.alpha = pi / 6;
    const auto s = prepare_fn(c);
    const double f = conditional_fisher_noiseless(s, ScanConfig{}).value;
    const double v = 4.0 * reid_lhs(s.rho).var_y;
    return check("yfg-maximal-violation", std::abs(f - 4.0) < 1e-9 && std::abs(v) < 1e-9,
                 fmt("fisher", f) + " " + fmt("four_var_est", v));
  });

  guarded("non-signaling", [&] {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const auto rho = random_state(4, rng);
      const auto a = condition(rho, random_setting(rng));
      worst = std::max(worst, trace_distance(a.average_state(), partial_trace(rho, Party::Bob)));
    }
    return check("non-signaling", worst < 1e-10, fmt("max_trace_distance", worst));
  });

  guarded("qfi-bounds", [&] {
    bool ok = true;
    for (int i = 0; i < 50; ++i) {
      const auto a = random_state(2, rng), b = random_state(2, rng);
      const auto g = random_setting(rng);
      const double w = u(rng);
      const DensityMatrix mix(ComplexMatrix(w * a.matrix() + (1.0 - w) * b.matrix()));
      ok = ok && qfi(a, g) <= 4.0 + 1e-9 &&
           qfi(mix, g) <= w * qfi(a, g) + (1.0 - w) * qfi(b, g) + 1e-9;
    }
    return check("qfi-bounds", ok, "range and convexity on 50 random pairs");
  });

  guarded("s-quantum-bound", [&] {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto rho = i % 2 ? random_state(4, rng) : random_pure(4, rng);
      worst = std::max(worst, s_witness(rho).value);
    }
    return check("s-quantum-bound", worst <= std::sqrt(3.0) + 1e-9, fmt("max_S", worst));
  });

  guarded("fringe-fit", [&] {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double v = u(rng), t0 = pi * (2.0 * u(rng) - 1.0);
      std::vector<FringeSample> samples;
      for (double t : default_thetas()) {
        samples.push_back({t, 0.5 * (1.0 + v * std::cos(2.0 * t + t0)), 1.0});
      }
      worst = std::max(worst, std::abs(fit_fringe(samples).v - v));
    }
    return check("fringe-fit", worst < 1e-9, fmt("max_visibility_error", worst));
  });

  guarded("fisher-definition", [&] {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      FitResult fit;
      fit.converged = true;
      fit.v = 0.05 + 0.9 * u(rng);
      fit.theta0 = pi * (2.0 * u(rng) - 1.0);
      const double t = pi * u(rng), h = 1e-5;
      const double dp = (fit.model(t + h) - fit.model(t - h)) / (2.0 * h);
      const double p = fit.model(t);
      const double fd = dp * dp / p + dp * dp / (1.0 - p);
      const double got = fisher_from_fit(fit, t).value;
      worst = std::max(worst, std::abs(got - fd) / std::max(got, 1e-3));
    }
    return check("fisher-definition", worst < 1e-6, fmt("max_relative_error", worst));
  });

  guarded("poisson-propagation", [&] {
    const auto perfect = poisson_propagate({100, 0, 0, 100});
    const auto flat = poisson_propagate({50, 50, 50, 50});
    const bool ok = perfect.value == 1.0 && perfect.sigma < 1e-9 &&
                    std::abs(flat.sigma - 1.0 / std::sqrt(200.0)) < 1e-12;
    return check("poisson-propagation", ok, fmt("flat_sigma", flat.sigma));
  });

  guarded("scan-csv-round-trip", [&] {
    SourceConfig c;
    c.alpha = 0.3;
    const auto data = sample_counts(scan_probabilities(prepare_fn(c), ScanConfig{}), 1000, seed);
    return check("scan-csv-round-trip", scan_data_from_csv(to_csv(data)).counts == data.counts, "");
  });

  return out;
}

int cmd_validate(std::ostream& out, std::ostream& err, const PrepareFn& prepare_fn) {
  const auto results = run_validation(prepare_fn);
  int failures = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << (r.detail.empty() ? "" : "  ") << r.detail
        << "\n";
    if (!r.passed) {
      ++failures;
      err << "check failed: " << r.name << " (" << r.detail << ")\n";
    }
  }
  out << results.size() - static_cast<std::size_t>(failures) << "/" << results.size()
      << " checks passed\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace steer::cli
