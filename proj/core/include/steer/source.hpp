#pragma once

// Two-photon source: pre-biased input polarizations interfering on a
// partially polarizing beam splitter, post-selected on one photon per
// output arm.
//
// Alice's photon enters arm a and Bob's photon enters arm b. The output arm
// reached by transmission from a is Alice's station; the other is Bob's.

#include <numbers>

#include "steer/qcore.hpp"

namespace steer {

struct SourceConfig {
  /// Alice's input polarization angle: cos(a)|H> + sin(a)|V>.
  double alice_angle = std::numbers::pi / 3.0;
  /// Waveplate parameter; Bob's input is cos(2 alpha)|H> + sin(2 alpha)|V>.
  double alpha = std::numbers::pi / 6.0;
  /// Amplitude transmittivities (power transmittivity t^2).
  double t_h = 1.0;
  double t_v = 1.0 / std::numbers::sqrt3;
  /// Two-photon indistinguishability mu in [0, 1]: the squared overlap of
  /// the photons' internal wavepackets, i.e. the ideal HOM dip visibility.
  double indistinguishability = 1.0;

  void validate() const;
};

struct PreparedState {
  DensityMatrix rho;
  /// Probability that the pair leaves in different arms.
  double success_probability;
};

/// Post-selected amplitude map split by path: both photons transmitted, or
/// both reflected (which swaps the photons between stations).
struct PpbsBranches {
  ComplexMatrix transmitted;
  ComplexMatrix reflected;
};

PpbsBranches ppbs_branches(double t_h = 1.0, double t_v = 1.0 / std::numbers::sqrt3);

/// Coherent sum of both branches, acting on {|HH>,|HV>,|VH>,|VV>}.
/// For t_h = 1 this is diag(1, t_v, t_v, t_v^2 - r_v^2).
ComplexMatrix ppbs_map(double t_h = 1.0, double t_v = 1.0 / std::numbers::sqrt3);

/// Input product state |alice_angle> (x) |2 alpha>.
PureState input_state(const SourceConfig& config);

/// Post-selected output state. For mu < 1 the output is the
/// success-weighted mixture of the interfering and the distinguishable
/// contributions, which is exactly what tracing a partially overlapping
/// internal label produces.
PreparedState prepare(const SourceConfig& config);

/// Independent route to the same state: two photons in eight bosonic modes
/// (arm x polarization x internal label) pushed through the beam splitter
/// with creation-operator algebra, post-selected and traced over the label.
PreparedState bosonic_oracle(const SourceConfig& config);

}  // namespace steer
