#pragma once

#include <string_view>

#include "steer/qcore.hpp"

namespace steer {

enum class WitnessKind { S, Reid, Yfg };

std::string_view to_string(WitnessKind kind);

/// Value of a steering test next to its non-steerable bound.
///
/// `violated` is the raw verdict: the value sits beyond the bound in the
/// steering direction (above it for S and YFG, below it for Reid) by more
/// than kVerdictTolerance. No significance threshold is applied.
struct WitnessReport {
  WitnessKind name;
  double value;
  double bound;
  double sigma_value = 0.0;
  double sigma_bound = 0.0;
  bool violated;
};

/// Absorbs rounding at exact equality (e.g. Reid at 0 = 0).
inline constexpr double kVerdictTolerance = 1e-10;

bool violates(WitnessKind kind, double value, double bound);

/// Quantum Fisher information of a qubit state for exp(i theta n.sigma):
/// 2 sum_{ij} (l_i - l_j)^2 / (l_i + l_j) |<i|G|j>|^2 over pairs with
/// l_i + l_j > 1e-12.
double qfi(const DensityMatrix& rho, const MeasurementSetting& generator);

/// (1/sqrt 3) |<X_A Z_B> + <Z_A X_B> + <Y_A Y_B>|, bound 1.
WitnessReport s_witness(const DensityMatrix& rho);

/// Product of the closed-form inference variances against <Z_B>^2 on Bob's
/// unconditioned reduced state.
WitnessReport reid_check(const DensityMatrix& rho);

enum class VarianceMode {
  /// 4 (1 - <G_A G_B>): the closed form the experiment measures.
  EstClosedForm,
  /// 4 Sum_k p(k|G_A) Var(G on rho_k).
  Conditional,
};

/// Conditional QFI at a single conditioning setting (a lower bound to the
/// optimized value) against four times the inference variance of the
/// generator.
WitnessReport yfg_check(const DensityMatrix& rho,
                        const MeasurementSetting& conditioning = MeasurementSetting::x(),
                        const MeasurementSetting& generator = MeasurementSetting::y(),
                        VarianceMode mode = VarianceMode::EstClosedForm);

}  // namespace steer
