#include "steer/expsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "steer/assemblage.hpp"
#include "steer/csv.hpp"
#include "steer/error.hpp"
#include "steer/random.hpp"

namespace steer {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxFitIterations = 200;
constexpr double kProbabilityFloor = 1e-12;

void validate_thetas(const std::vector<double>& thetas) {
  std::set<double> distinct;
  for (double t : thetas) {
    if (!std::isfinite(t)) throw InvalidInput("scan angles must be finite");
    distinct.insert(t);
  }
  if (distinct.size() < 5) throw InvalidInput("a phase scan needs at least 5 distinct angles");
}

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

struct LmOutcome {
  Eigen::VectorXd x;
  Eigen::MatrixXd normal;  // J^T J at the solution
  bool converged = false;
  int iterations = 0;
};

bool is_singular(const Eigen::MatrixXd& normal) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal, Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  return !(hi > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * hi;
}

// Levenberg-Marquardt with Marquardt's diagonal scaling.
template <typename Residual, typename Jacobian>
LmOutcome levenberg_marquardt(Residual residual, Jacobian jacobian, Eigen::VectorXd x) {
  LmOutcome out;
  double lambda = 1e-3;
  Eigen::VectorXd r = residual(x);
  double cost = r.squaredNorm();
  for (out.iterations = 0; out.iterations < kMaxFitIterations; ++out.iterations) {
    const Eigen::MatrixXd j = jacobian(x);
    const Eigen::MatrixXd normal = j.transpose() * j;
    if (is_singular(normal)) {
      out.x = x;
      out.normal = normal;
      return out;
    }
    const Eigen::VectorXd g = j.transpose() * r;
    if (cost < 1e-30 || g.lpNorm<Eigen::Infinity>() < 1e-15) {
      out.converged = true;
      break;
    }
    bool stepped = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() *= (1.0 + lambda);
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd trial = x + step;
      const Eigen::VectorXd r_trial = residual(trial);
      const double c_trial = r_trial.squaredNorm();
      if (c_trial < cost) {
        const bool small = step.norm() <= 1e-13 * (x.norm() + 1e-13) ||
                           cost - c_trial <= 1e-15 * cost;
        x = trial, r = r_trial, cost = c_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        stepped = true;
        if (small) out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) out.converged = true;  // no descent direction left
    if (out.converged) break;
  }
  const Eigen::MatrixXd j = jacobian(x);
  out.normal = j.transpose() * j;
  out.x = x;
  return out;
}

FitResult fit_core(std::span<const FringeSample> s, double omega, bool weighted) {
  if (s.size() < 3) throw Unfittable("fringe fit needs at least 3 populated points");
  const auto n = static_cast<Eigen::Index>(s.size());
  for (const auto& p : s) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.p)) throw InvalidInput("invalid fringe sample");
  }

  // Model (1 + a cos(w t) - b sin(w t)) / 2 with a = v cos t0, b = v sin t0.
  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = s[static_cast<std::size_t>(i)];
      const double m = 0.5 * (1.0 + x(0) * std::cos(omega * p.theta) -
                              x(1) * std::sin(omega * p.theta));
      r(i) = (p.p - m) / p.sigma;
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd&) {
    Eigen::MatrixXd j(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = s[static_cast<std::size_t>(i)];
      j(i, 0) = -0.5 * std::cos(omega * p.theta) / p.sigma;
      j(i, 1) = 0.5 * std::sin(omega * p.theta) / p.sigma;
    }
    return j;
  };

  // First discrete Fourier component of the centred fringe.
  Eigen::VectorXd x0(2);
  x0.setZero();
  for (const auto& p : s) {
    x0(0) += (2.0 * p.p - 1.0) * std::cos(omega * p.theta);
    x0(1) -= (2.0 * p.p - 1.0) * std::sin(omega * p.theta);
  }
  x0 *= 2.0 / static_cast<double>(n);

  const LmOutcome lm = levenberg_marquardt(residual, jacobian, x0);
  FitResult fit;
  fit.omega = omega;
  fit.iterations = lm.iterations;
  fit.converged = lm.converged;
  double a = lm.x(0), b = lm.x(1);
  fit.v = std::hypot(a, b);
  fit.theta0 = std::atan2(b, a);

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  if (fit.converged) cov = lm.normal.inverse();

  if (fit.v > 1.0) {
    // Physical visibility is at most one: refit the phase on the boundary.
    auto res1 = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = s[static_cast<std::size_t>(i)];
        r(i) = (p.p - 0.5 * (1.0 + std::cos(omega * p.theta + x(0)))) / p.sigma;
      }
      return r;
    };
    auto jac1 = [&](const Eigen::VectorXd& x) {
      Eigen::MatrixXd j(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = s[static_cast<std::size_t>(i)];
        j(i, 0) = 0.5 * std::sin(omega * p.theta + x(0)) / p.sigma;
      }
      return j;
    };
    Eigen::VectorXd t0(1);
    t0(0) = fit.theta0;
    const LmOutcome edge = levenberg_marquardt(res1, jac1, t0);
    fit.v = 1.0;
    fit.theta0 = edge.x(0);
    fit.iterations += edge.iterations;
    fit.converged = fit.converged && edge.converged;
    a = std::cos(fit.theta0), b = std::sin(fit.theta0);
  }
  fit.theta0 = wrap_phase(fit.theta0);

  if (weighted && fit.converged) {
    if (fit.v > 0.0) {
      const Eigen::Vector2d gv(a / fit.v, b / fit.v);
      const Eigen::Vector2d gt(-b / (fit.v * fit.v), a / (fit.v * fit.v));
      fit.sigma_v = std::sqrt(std::max(0.0, gv.dot(cov * gv)));
      fit.sigma_theta0 = std::sqrt(std::max(0.0, gt.dot(cov * gt)));
    } else {
      fit.sigma_v = std::sqrt(std::max(0.0, 0.5 * cov.trace()));
      fit.sigma_theta0 = kPi;
    }
  }

  double ss = 0.0;
  for (const auto& p : s) {
    const double d = p.p - fit.model(p.theta);
    ss += d * d;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace

std::vector<double> default_thetas() {
  std::vector<double> t;
  for (int deg = 0; deg <= 48; deg += 4) t.push_back(deg * kPi / 180.0);
  return t;
}

void ScanConfig::validate() const {
  validate_thetas(thetas);
  if (shots_per_setting < 1) throw InvalidInput("shots_per_setting must be at least 1");
}

std::uint64_t ScanData::branch_total(int alice_index) const {
  std::uint64_t n = 0;
  for (const auto& c : counts) {
    n += c[static_cast<std::size_t>(alice_index)][0] + c[static_cast<std::size_t>(alice_index)][1];
  }
  return n;
}

std::uint64_t ScanData::total() const { return branch_total(0) + branch_total(1); }

double FitResult::model(double theta) const {
  return 0.5 * (1.0 + v * std::cos(omega * theta + theta0));
}

ScanProbabilities scan_probabilities(const DensityMatrix& rho, const ScanConfig& config) {
  validate_thetas(config.thetas);
  const Assemblage a = condition(rho, config.conditioning);
  const ComplexMatrix g = pauli(config.generator);
  const std::array<ComplexMatrix, 2> readout{projector(config.readout, 1),
                                             projector(config.readout, -1)};
  ScanProbabilities out;
  out.thetas = config.thetas;
  for (std::size_t d = 0; d < 2; ++d) {
    out.alice_prob[d] = a.branches[d].probability;
    out.degenerate[d] = a.branches[d].degenerate;
  }
  for (double theta : config.thetas) {
    OutcomeTable<double> row{};
    for (std::size_t d = 0; d < 2; ++d) {
      if (out.degenerate[d]) {
        row[d] = {0.5, 0.5};
        continue;
      }
      const DensityMatrix rotated = evolve(a.branches[d].state, g, theta);
      const double plus = std::clamp(expectation(rotated, readout[0]), 0.0, 1.0);
      row[d] = {plus, 1.0 - plus};
    }
    out.bob_given_alice.push_back(row);
  }
  return out;
}

ScanProbabilities scan_probabilities(const PreparedState& state, const ScanConfig& config) {
  return scan_probabilities(state.rho, config);
}

ScanData sample_counts(const ScanProbabilities& probabilities, std::uint64_t shots,
                       std::uint64_t seed) {
  if (shots < 1) throw InvalidInput("shots must be at least 1");
  auto rng = make_engine(seed);
  ScanData data;
  data.thetas = probabilities.thetas;
  const auto s = static_cast<double>(shots);
  for (const auto& row : probabilities.bob_given_alice) {
    OutcomeTable<std::uint64_t> c{};
    for (std::size_t d = 0; d < 2; ++d) {
      for (std::size_t b = 0; b < 2; ++b) {
        c[d][b] = poisson(rng, s * probabilities.alice_prob[d] * row[d][b]);
      }
    }
    data.counts.push_back(c);
  }
  return data;
}

FitResult fit_fringe(std::span<const FringeSample> samples, double omega) {
  return fit_core(samples, omega, true);
}

FitResult fit_fringe(const ScanData& data, int alice_index) {
  if (alice_index != 0 && alice_index != 1) throw InvalidInput("alice index must be 0 or 1");
  if (data.branch_total(alice_index) == 0) {
    throw Unfittable("no counts recorded for this Alice outcome");
  }
  std::vector<FringeSample> samples;
  const auto d = static_cast<std::size_t>(alice_index);
  for (std::size_t i = 0; i < data.thetas.size(); ++i) {
    const auto plus = static_cast<double>(data.counts[i][d][0]);
    const auto total = plus + static_cast<double>(data.counts[i][d][1]);
    if (total <= 0.0) continue;
    // Shrunk estimate for the error bar only, so that p = 0 or 1 keeps a finite weight.
    const double shrunk = (plus + 0.5) / (total + 1.0);
    samples.push_back({data.thetas[i], plus / total, std::sqrt(shrunk * (1.0 - shrunk) / total)});
  }
  return fit_core(samples, kFringeFrequency, true);
}

FitResult fit_fringe(const ScanProbabilities& probabilities, int alice_index) {
  if (alice_index != 0 && alice_index != 1) throw InvalidInput("alice index must be 0 or 1");
  std::vector<FringeSample> samples;
  const auto d = static_cast<std::size_t>(alice_index);
  for (std::size_t i = 0; i < probabilities.thetas.size(); ++i) {
    samples.push_back({probabilities.thetas[i], probabilities.bob_given_alice[i][d][0], 1.0});
  }
  return fit_core(samples, kFringeFrequency, false);
}

FisherPoint fisher_from_fit(const FitResult& fit, double theta) {
  if (!fit.converged) throw InvalidInput("Fisher information needs a converged fit");
  const double phi = fit.omega * theta + fit.theta0;
  const double c = std::cos(phi), s = std::sin(phi);
  double p = 0.5 * (1.0 + fit.v * c);
  double q = 0.5 * (1.0 - fit.v * c);
  const double dp = -0.5 * fit.omega * fit.v * s;
  if (p < kProbabilityFloor || q < kProbabilityFloor) {
    p = std::max(p, kProbabilityFloor);
    q = std::max(q, kProbabilityFloor);
    return {dp * dp / p + dp * dp / q, true};
  }
  // dp^2 / (p q) with 4 p q = sin^2 + (1 - v^2) cos^2, free of cancellation.
  const double w = fit.omega * fit.v;
  return {w * w * s * s / (s * s + (1.0 - fit.v * fit.v) * c * c), false};
}

double max_fisher(const FitResult& fit) { return fit.omega * fit.omega * fit.v * fit.v; }

ConditionalFisherEstimate conditional_fisher_from_data(const ScanData& data) {
  ConditionalFisherEstimate est{0.0, {}, {}};
  const auto total = static_cast<double>(data.total());
  if (!(total > 0.0)) throw Unfittable("scan recorded no counts");
  for (int d = 0; d < 2; ++d) {
    const auto n = static_cast<double>(data.branch_total(d));
    const auto idx = static_cast<std::size_t>(d);
    est.weight[idx] = n / total;
    if (n <= 0.0) continue;
    FitResult fit = fit_fringe(data, d);
    if (!fit.converged) throw Unfittable("fringe fit did not converge");
    est.value += est.weight[idx] * max_fisher(fit);
    est.fits[idx] = fit;
  }
  return est;
}

ConditionalFisherEstimate conditional_fisher_estimate(const PreparedState& state,
                                                      const ScanConfig& config) {
  config.validate();
  const auto probs = scan_probabilities(state, config);
  return conditional_fisher_from_data(sample_counts(probs, config.shots_per_setting, config.seed));
}

ConditionalFisherEstimate conditional_fisher_noiseless(const PreparedState& state,
                                                       const ScanConfig& config) {
  const auto probs = scan_probabilities(state, config);
  ConditionalFisherEstimate est{0.0, {}, {}};
  for (int d = 0; d < 2; ++d) {
    const auto idx = static_cast<std::size_t>(d);
    if (probs.degenerate[idx]) continue;
    est.weight[idx] = probs.alice_prob[idx];
    FitResult fit = fit_fringe(probs, d);
    if (!fit.converged) throw Unfittable("fringe fit did not converge");
    est.value += est.weight[idx] * max_fisher(fit);
    est.fits[idx] = fit;
  }
  return est;
}

CorrelatorEstimate poisson_propagate(const CorrelatorCounts& counts) {
  return poisson_propagate(counts, {1, -1, -1, 1});
}

CorrelatorEstimate poisson_propagate(const CorrelatorCounts& counts,
                                     const std::array<int, 4>& signs) {
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    total += static_cast<double>(counts[i]);
    weighted += signs[i] * static_cast<double>(counts[i]);
  }
  if (!(total > 0.0)) throw InvalidInput("correlator needs at least one count");
  const double e = weighted / total;
  // dE/dn_i = (s_i - E)/N and Var(n_i) = n_i.
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = (signs[i] - e) / total;
    var += d * d * static_cast<double>(counts[i]);
  }
  return {e, std::sqrt(var)};
}

CorrelatorCounts sample_correlator(const DensityMatrix& rho, const MeasurementSetting& alice,
                                   const MeasurementSetting& bob, std::uint64_t shots,
                                   std::mt19937_64& rng) {
  const JointTable p = joint_prob(rho, alice, bob);
  const auto s = static_cast<double>(shots);
  return {poisson(rng, s * p[0][0]), poisson(rng, s * p[0][1]), poisson(rng, s * p[1][0]),
          poisson(rng, s * p[1][1])};
}

MonteCarloSeries monte_carlo_series(
    const std::function<std::vector<double>(std::uint64_t)>& pipeline, std::size_t n_runs,
    std::uint64_t seed) {
  if (n_runs == 0) throw InvalidInput("Monte Carlo needs at least one run");
  std::vector<std::vector<double>> samples;
  MonteCarloSeries out;
  out.runs = n_runs;
  for (std::size_t run = 0; run < n_runs; ++run) {
    try {
      auto v = pipeline(seed ^ static_cast<std::uint64_t>(run));
      if (!samples.empty() && v.size() != samples.front().size()) {
        throw InvalidInput("Monte Carlo pipeline changed its output length");
      }
      if (std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        samples.push_back(std::move(v));
      } else {
        ++out.failures;
      }
    } catch (const InvalidInput&) {
      throw;
    } catch (const Error&) {
      ++out.failures;
    }
  }
  if (5 * out.failures > n_runs) {
    std::ostringstream os;
    os << out.failures << " of " << n_runs << " Monte Carlo runs failed";
    throw Error(os.str());
  }
  const std::size_t m = samples.front().size();
  out.mean.assign(m, 0.0);
  out.sigma.assign(m, 0.0);
  for (const auto& s : samples)
    for (std::size_t i = 0; i < m; ++i) out.mean[i] += s[i];
  for (auto& x : out.mean) x /= static_cast<double>(samples.size());
  out.degenerate = samples.size() < 2;
  if (!out.degenerate) {
    for (const auto& s : samples)
      for (std::size_t i = 0; i < m; ++i) out.sigma[i] += (s[i] - out.mean[i]) * (s[i] - out.mean[i]);
    for (auto& x : out.sigma) x = std::sqrt(x / static_cast<double>(samples.size() - 1));
  }
  return out;
}

MonteCarloResult monte_carlo_errors(const std::function<double(std::uint64_t)>& pipeline,
                                    std::size_t n_runs, std::uint64_t seed) {
  const auto series = monte_carlo_series(
      [&](std::uint64_t s) { return std::vector<double>{pipeline(s)}; }, n_runs, seed);
  return {series.mean[0], series.sigma[0], series.runs, series.failures, series.degenerate};
}

double phase_mle(std::uint64_t n_plus, std::uint64_t n_minus, const FitResult& fringe,
                 double reference) {
  const auto total = static_cast<double>(n_plus + n_minus);
  if (!(total > 0.0)) throw Unfittable("phase estimate needs at least one count");
  if (!(fringe.v > 0.0)) throw Unfittable("a flat fringe carries no phase information");
  // The binomial likelihood peaks where the model matches the observed
  // frequency, clamped to the fringe's reachable range.
  const double c = std::clamp((2.0 * static_cast<double>(n_plus) / total - 1.0) / fringe.v,
                              -1.0, 1.0);
  const double base = std::acos(c);
  const double period = 2.0 * kPi / fringe.omega;
  double best = 0.0, best_dist = INFINITY;
  for (double sign : {1.0, -1.0}) {
    double theta = (sign * base - fringe.theta0) / fringe.omega;
    theta += period * std::round((reference - theta) / period);
    if (std::abs(theta - reference) < best_dist) best = theta, best_dist = std::abs(theta - reference);
  }
  return best;
}

SimulatedWitnesses simulate_witnesses(const PreparedState& state, const ScanConfig& config,
                                      std::size_t mc_runs) {
  config.validate();
  const auto& rho = state.rho;
  const auto x = MeasurementSetting::x(), y = MeasurementSetting::y(), z = MeasurementSetting::z();
  const std::uint64_t shots = config.shots_per_setting;

  auto rng = make_engine(derive_seed(config.seed, 1));
  const auto xz = sample_correlator(rho, x, z, shots, rng);
  const auto zx = sample_correlator(rho, z, x, shots, rng);
  const auto yy = sample_correlator(rho, y, y, shots, rng);
  const auto e_xz = poisson_propagate(xz);
  const auto e_zx = poisson_propagate(zx);
  const auto e_yy = poisson_propagate(yy);
  const auto z_bob = poisson_propagate(xz, {1, -1, 1, -1});

  SimulatedWitnesses out{};
  out.seed = config.seed;

  const double sum = e_xz.value + e_zx.value + e_yy.value;
  const double s_value = std::abs(sum) / std::numbers::sqrt3;
  const double s_sigma = std::sqrt(e_xz.sigma * e_xz.sigma + e_zx.sigma * e_zx.sigma +
                                   e_yy.sigma * e_yy.sigma) / std::numbers::sqrt3;
  out.s = {WitnessKind::S, s_value, 1.0, s_sigma, 0.0, violates(WitnessKind::S, s_value, 1.0)};

  const double var_y = 1.0 - e_yy.value, var_x = 1.0 - e_zx.value;
  const double product = var_y * var_x;
  const double product_sigma = std::hypot(var_x * e_yy.sigma, var_y * e_zx.sigma);
  const double bound = z_bob.value * z_bob.value;
  const double bound_sigma = 2.0 * std::abs(z_bob.value) * z_bob.sigma;
  out.reid = {WitnessKind::Reid, product, bound, product_sigma, bound_sigma,
              violates(WitnessKind::Reid, product, bound)};

  ScanConfig scan = config;
  scan.seed = derive_seed(config.seed, 2);
  out.fisher = conditional_fisher_estimate(state, scan);
  double fisher_sigma = 0.0;
  if (mc_runs > 0) {
    const auto mc = monte_carlo_errors(
        [&](std::uint64_t s) {
          ScanConfig c = config;
          c.seed = s;
          return conditional_fisher_estimate(state, c).value;
        },
        mc_runs, derive_seed(config.seed, 3));
    fisher_sigma = mc.sigma;
  }
  const double four_var = 4.0 * var_y;
  out.yfg = {WitnessKind::Yfg, out.fisher.value, four_var, fisher_sigma, 4.0 * e_yy.sigma,
             violates(WitnessKind::Yfg, out.fisher.value, four_var)};
  return out;
}

std::string to_csv(const ScanData& data) {
  std::string out = csv_line({"theta_deg", "alice_outcome", "bob_outcome", "count"});
  for (std::size_t i = 0; i < data.thetas.size(); ++i) {
    const std::string deg = format_number(data.thetas[i] * 180.0 / kPi);
    for (int d = 0; d < 2; ++d) {
      for (int b = 0; b < 2; ++b) {
        out += csv_line({deg, std::to_string(outcome_value(d)), std::to_string(outcome_value(b)),
                         std::to_string(data.counts[i][static_cast<std::size_t>(d)]
                                                   [static_cast<std::size_t>(b)])});
      }
    }
  }
  return out;
}

ScanData scan_data_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "theta_deg,alice_outcome,bob_outcome,count") {
    throw InvalidInput("scan CSV must start with theta_deg,alice_outcome,bob_outcome,count");
  }
  ScanData data;
  std::vector<std::string> keys;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw InvalidInput("scan CSV row " + std::to_string(row) + " needs 4 fields");
    try {
      const int d = std::stoi(f[1]), b = std::stoi(f[2]);
      if ((d != 1 && d != -1) || (b != 1 && b != -1)) throw InvalidInput("outcome must be +-1");
      if (f[3].empty() || f[3][0] == '-') throw InvalidInput("count must be nonnegative");
      const auto count = std::stoull(f[3]);
      auto it = std::find(keys.begin(), keys.end(), f[0]);
      std::size_t idx = static_cast<std::size_t>(it - keys.begin());
      if (it == keys.end()) {
        keys.push_back(f[0]);
        data.thetas.push_back(std::stod(f[0]) * kPi / 180.0);
        data.counts.push_back({});
      }
      data.counts[idx][static_cast<std::size_t>(outcome_index(d))]
                  [static_cast<std::size_t>(outcome_index(b))] = count;
    } catch (const InvalidInput& e) {
      throw InvalidInput("scan CSV row " + std::to_string(row) + ": " + e.what());
    } catch (const std::exception&) {
      throw InvalidInput("scan CSV row " + std::to_string(row) + " is malformed");
    }
  }
  return data;
}

}  // namespace steer
