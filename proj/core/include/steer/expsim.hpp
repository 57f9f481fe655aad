#pragma once

// Simulated phase-scan experiment: Bob's conditional states are rotated by
// exp(i theta G), read out, counted with Poisson statistics and fitted with a
// cosine fringe whose Fisher information lower-bounds the conditional QFI.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "steer/qcore.hpp"
#include "steer/source.hpp"
#include "steer/witnesses.hpp"

namespace steer {

/// Fringe frequency of p(theta) under exp(i theta G) on a qubit.
inline constexpr double kFringeFrequency = 2.0;

/// 0 to 48 degrees in 4 degree steps, in radians.
std::vector<double> default_thetas();

struct ScanConfig {
  std::vector<double> thetas = default_thetas();
  std::uint64_t shots_per_setting = 1000;
  std::uint64_t seed = 0;
  MeasurementSetting conditioning = MeasurementSetting::x();
  MeasurementSetting generator = MeasurementSetting::y();
  MeasurementSetting readout = MeasurementSetting::z();

  /// At least 5 distinct thetas and at least one shot.
  void validate() const;
};

/// Count or probability tables are indexed [alice][bob] with outcome_index().
template <typename T>
using OutcomeTable = std::array<std::array<T, 2>, 2>;

struct ScanProbabilities {
  std::vector<double> thetas;
  std::array<double, 2> alice_prob{};
  std::array<bool, 2> degenerate{};
  /// p(b | d; theta) per theta.
  std::vector<OutcomeTable<double>> bob_given_alice;
};

struct ScanData {
  std::vector<double> thetas;
  std::vector<OutcomeTable<std::uint64_t>> counts;

  std::uint64_t branch_total(int alice_index) const;
  std::uint64_t total() const;
};

struct FitResult {
  double v = 0.0;
  double theta0 = 0.0;  // in (-pi, pi]
  double residual_rms = 0.0;
  bool converged = false;
  /// 1-sigma from the weighted normal equations; zero for unweighted fits.
  double sigma_v = 0.0;
  double sigma_theta0 = 0.0;
  int iterations = 0;
  double omega = kFringeFrequency;

  /// p(theta) = (1 + v cos(omega theta + theta0)) / 2.
  double model(double theta) const;
};

/// One point of a fringe: probability of the +1 readout and its 1-sigma.
struct FringeSample {
  double theta;
  double p;
  double sigma;
};

ScanProbabilities scan_probabilities(const DensityMatrix& rho, const ScanConfig& config);
ScanProbabilities scan_probabilities(const PreparedState& state, const ScanConfig& config);

/// Independent Poisson counts with mean shots p(d) p(b|d).
ScanData sample_counts(const ScanProbabilities& probabilities, std::uint64_t shots,
                       std::uint64_t seed);

/// Weighted damped least squares of the fringe (1 + v cos(omega theta + theta0))/2.
/// The fit runs on (v cos theta0, v sin theta0), is initialized from the first
/// discrete Fourier component and, when the unconstrained visibility exceeds
/// one, re-fits theta0 at v = 1. Throws Unfittable with fewer than 3 samples.
FitResult fit_fringe(std::span<const FringeSample> samples, double omega = kFringeFrequency);

/// Fit of p(+|d) from counts; weights from the Poisson sigma per point.
FitResult fit_fringe(const ScanData& data, int alice_index);

/// Noiseless fit of p(+|d) from exact probabilities (unit weights).
FitResult fit_fringe(const ScanProbabilities& probabilities, int alice_index);

struct FisherPoint {
  double value;
  bool clamped;  // p or 1 - p fell below 1e-12 and was clamped
};

/// Classical Fisher information (dp)^2/p + (dq)^2/q of the fitted fringe.
FisherPoint fisher_from_fit(const FitResult& fit, double theta);

/// Analytic maximum over theta: omega^2 v^2.
double max_fisher(const FitResult& fit);

struct ConditionalFisherEstimate {
  double value;
  std::array<double, 2> weight{};
  std::array<std::optional<FitResult>, 2> fits;
};

/// p(+) max F_+ + p(-) max F_- from sampled counts (seed from the config).
/// Branches with no counts carry no weight and are not fitted.
ConditionalFisherEstimate conditional_fisher_estimate(const PreparedState& state,
                                                      const ScanConfig& config);
ConditionalFisherEstimate conditional_fisher_from_data(const ScanData& data);

/// Same pipeline on exact probabilities.
ConditionalFisherEstimate conditional_fisher_noiseless(const PreparedState& state,
                                                       const ScanConfig& config);

struct CorrelatorEstimate {
  double value;
  double sigma;
};

/// Counts ordered n(+,+), n(+,-), n(-,+), n(-,-).
using CorrelatorCounts = std::array<std::uint64_t, 4>;

/// E = (n++ + n-- - n+- - n-+)/N with first-order Poisson propagation.
CorrelatorEstimate poisson_propagate(const CorrelatorCounts& counts);

/// Same propagation for an arbitrary +-1 weighting of the four channels;
/// e.g. {1, -1, 1, -1} gives Bob's marginal.
CorrelatorEstimate poisson_propagate(const CorrelatorCounts& counts,
                                     const std::array<int, 4>& signs);

CorrelatorCounts sample_correlator(const DensityMatrix& rho, const MeasurementSetting& alice,
                                   const MeasurementSetting& bob, std::uint64_t shots,
                                   std::mt19937_64& rng);

struct MonteCarloResult {
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  bool degenerate = false;  // fewer than two successful runs
};

struct MonteCarloSeries {
  std::vector<double> mean;
  std::vector<double> sigma;
  std::size_t runs = 0;
  std::size_t failures = 0;
  bool degenerate = false;
};

/// Re-runs `pipeline(seed ^ run)` n_runs times. Runs throwing steer::Error or
/// returning non-finite values are excluded and counted; more than 20%
/// failures throws Error.
MonteCarloResult monte_carlo_errors(const std::function<double(std::uint64_t)>& pipeline,
                                    std::size_t n_runs = 100, std::uint64_t seed = 0);

/// Element-wise variant for pipelines producing a fixed-length vector.
MonteCarloSeries monte_carlo_series(
    const std::function<std::vector<double>(std::uint64_t)>& pipeline, std::size_t n_runs,
    std::uint64_t seed);

/// Maximum-likelihood theta from binomial counts on a known fringe, taking
/// the solution closest to `reference`.
double phase_mle(std::uint64_t n_plus, std::uint64_t n_minus, const FitResult& fringe,
                 double reference);

/// Witnesses evaluated from finite counts, with their error bars.
struct SimulatedWitnesses {
  WitnessReport s;
  WitnessReport reid;
  WitnessReport yfg;
  ConditionalFisherEstimate fisher;
  std::uint64_t seed;
};

/// S and Reid from Poisson-counted correlators (shots per setting), YFG from
/// the fitted scan with Monte-Carlo error bars over `mc_runs` repetitions.
SimulatedWitnesses simulate_witnesses(const PreparedState& state, const ScanConfig& config,
                                      std::size_t mc_runs = 100);

/// CSV with header theta_deg,alice_outcome,bob_outcome,count.
std::string to_csv(const ScanData& data);
ScanData scan_data_from_csv(const std::string& text);

}  // namespace steer
