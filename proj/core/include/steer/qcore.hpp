#pragma once

// Exact operator algebra for one and two polarization qubits.
//
// Basis convention, fixed everywhere in the project:
//   index 0 = |H>, index 1 = |V>
//   two-qubit states are ordered Alice (x) Bob, Alice being the slow index,
//   so |HV> has index 1 and |VH> has index 2.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>

namespace steer {

using Complex = std::complex<double>;
/// Square complex matrix of dimension 2 or 4.
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kPositivityTol = 1e-10;
inline constexpr double kNormTol = 1e-12;

enum class Party { Alice, Bob };

/// Projective qubit measurement along a unit Bloch vector.
///
/// The +1 outcome projects on the eigenvector of n.sigma with eigenvalue +1,
/// so X distinguishes D(+1)/A(-1), Y distinguishes R(+1)/L(-1) and Z
/// distinguishes H(+1)/V(-1).
class MeasurementSetting {
 public:
  /// Throws InvalidInput unless |bloch| = 1 within 1e-12.
  explicit MeasurementSetting(const Eigen::Vector3d& bloch);
  MeasurementSetting(double x, double y, double z)
      : MeasurementSetting(Eigen::Vector3d(x, y, z)) {}

  /// Normalizes the direction first; for optimizer parametrizations.
  static MeasurementSetting from_direction(const Eigen::Vector3d& direction);
  static MeasurementSetting from_angles(double polar, double azimuth);

  static MeasurementSetting x() { return {1.0, 0.0, 0.0}; }
  static MeasurementSetting y() { return {0.0, 1.0, 0.0}; }
  static MeasurementSetting z() { return {0.0, 0.0, 1.0}; }

  const Eigen::Vector3d& bloch() const { return bloch_; }
  double polar() const;
  double azimuth() const;

  bool operator==(const MeasurementSetting&) const = default;

 private:
  Eigen::Vector3d bloch_;
};

/// Normalized ket on one or two qubits.
class PureState {
 public:
  explicit PureState(ComplexVector amplitudes);

  /// Normalizes the vector; throws InvalidInput for a null vector.
  static PureState normalized(const ComplexVector& amplitudes);
  static PureState basis(std::size_t dim, std::size_t index);

  const ComplexVector& amplitudes() const { return amplitudes_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }

 private:
  ComplexVector amplitudes_;
};

/// Hermitian, positive, unit-trace operator on one or two qubits.
class DensityMatrix {
 public:
  /// Validates Hermiticity (1e-12), trace (1e-12) and positivity (-1e-10).
  explicit DensityMatrix(ComplexMatrix matrix);
  explicit DensityMatrix(const PureState& state);

  /// Hermitizes, clamps negative eigenvalues to zero and renormalizes.
  /// Used where rounding from projections can push eigenvalues below zero.
  static DensityMatrix projected(const ComplexMatrix& matrix);
  static DensityMatrix maximally_mixed(std::size_t dim);

  const ComplexMatrix& matrix() const { return matrix_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t qubits() const { return dim() == 2 ? 1 : 2; }

  /// Tr(rho^2).
  double purity() const;
  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues() const;

 private:
  ComplexMatrix matrix_;
};

ComplexMatrix identity(std::size_t dim);

/// n.sigma for the setting's Bloch vector.
ComplexMatrix pauli(const MeasurementSetting& setting);

/// Projector (I + k n.sigma)/2 on the eigenspace with outcome k = +1 or -1.
ComplexMatrix projector(const MeasurementSetting& setting, int outcome);

/// Kronecker product a (x) b of two 2x2 matrices (Alice (x) Bob).
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// Reduced state of the kept party.
DensityMatrix partial_trace(const DensityMatrix& rho, Party keep);

/// Tr(rho obs); throws InvalidInput when obs is not Hermitian or sizes differ.
double expectation(const DensityMatrix& rho, const ComplexMatrix& obs);

/// <obs^2> - <obs>^2, clamped at zero.
double variance(const DensityMatrix& rho, const ComplexMatrix& obs);

/// U rho U^dagger with U = exp(+i theta generator).
DensityMatrix evolve(const DensityMatrix& rho, const ComplexMatrix& generator,
                     double theta);

/// exp(+i theta generator) for a Hermitian generator.
ComplexMatrix unitary(const ComplexMatrix& generator, double theta);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// <psi|rho|psi>.
double fidelity(const DensityMatrix& rho, const PureState& target);

bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol);

}  // namespace steer
