#pragma once

#include <array>
#include <functional>

#include "steer/qcore.hpp"

namespace steer {

inline constexpr double kDegenerateProbability = 1e-12;

/// Maps outcome +1 -> 0 and -1 -> 1; the order used by every 2-entry table.
constexpr int outcome_index(int outcome) { return outcome == 1 ? 0 : 1; }
constexpr int outcome_value(int index) { return index == 0 ? 1 : -1; }

/// One Alice outcome and the Bob state it heralds.
struct Branch {
  int outcome;          // +1 or -1
  double probability;   // p(k|K)
  DensityMatrix state;  // rho^B_{k|K}; I/2 placeholder when degenerate
  bool degenerate;      // p(k|K) < 1e-12
};

/// Alice-outcome-indexed ensemble of Bob states for one setting of Alice.
struct Assemblage {
  MeasurementSetting setting;
  std::array<Branch, 2> branches;  // outcome +1 first

  /// Sum_k p(k) rho_k.
  DensityMatrix average_state() const;
};

/// p(k, h) indexed [outcome_index(k)][outcome_index(h)].
using JointTable = std::array<std::array<double, 2>, 2>;

/// Bob's guess h_est(k) of his outcome from Alice's outcome.
struct EstimatorSpec {
  enum class Mode { ConditionalMean, LinearIdentity, Custom };
  Mode mode = Mode::ConditionalMean;
  /// Guess for k = +1 and k = -1; used only in Custom mode.
  std::array<double, 2> table{0.0, 0.0};

  static EstimatorSpec conditional_mean() { return {}; }
  static EstimatorSpec linear_identity() { return {Mode::LinearIdentity, {1.0, -1.0}}; }
  static EstimatorSpec custom(double plus, double minus) { return {Mode::Custom, {plus, minus}}; }
};

Assemblage condition(const DensityMatrix& rho, const MeasurementSetting& setting);

JointTable joint_prob(const DensityMatrix& rho, const MeasurementSetting& alice,
                      const MeasurementSetting& bob);

/// Mean squared deviation of Bob's outcome from the estimate built on Alice's.
double est_variance(const DensityMatrix& rho, const MeasurementSetting& alice,
                    const MeasurementSetting& bob,
                    const EstimatorSpec& est = EstimatorSpec::conditional_mean());

struct ReidVariances {
  double var_y;  // 1 - <Y_A Y_B>
  double var_x;  // 1 - <Z_A X_B>
};

/// Closed-form inference variances used by the Reid test.
ReidVariances reid_lhs(const DensityMatrix& rho);

/// Sum_k p(k|K) Var(H on rho_k).
double conditional_variance(const DensityMatrix& rho, const MeasurementSetting& alice,
                            const MeasurementSetting& bob);

/// Sum_k p(k|K) F_Q(rho_k, generator).
double conditional_qfi(const DensityMatrix& rho, const MeasurementSetting& alice,
                       const MeasurementSetting& generator);

struct SphereOptimum {
  double value;
  MeasurementSetting setting;
};

struct SphereSearchOptions {
  int grid_points = 1000;
  double simplex_edge = 0.1;
  double spread_tolerance = 1e-10;
  int max_iterations = 500;
};

/// Global minimum of f over unit Bloch vectors: Fibonacci-sphere grid, then
/// Nelder-Mead on (polar, azimuth) from the best grid point. Ties on the grid
/// go to the lowest index.
SphereOptimum minimize_on_sphere(const std::function<double(const MeasurementSetting&)>& f,
                                 const SphereSearchOptions& options = {});

/// N points spread quasi-uniformly on the sphere.
std::vector<Eigen::Vector3d> fibonacci_sphere(int n);

/// min over Alice settings of conditional_variance.
SphereOptimum optimize_variance(const DensityMatrix& rho, const MeasurementSetting& bob,
                                const SphereSearchOptions& options = {});

/// max over Alice settings of conditional_qfi.
SphereOptimum optimize_fisher(const DensityMatrix& rho, const MeasurementSetting& generator,
                              const SphereSearchOptions& options = {});

}  // namespace steer
