#include "steer/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "steer/error.hpp"

namespace steer {
namespace {

constexpr Complex kI{0.0, 1.0};

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || (m.rows() != 2 && m.rows() != 4)) {
    std::ostringstream os;
    os << what << ": expected a 2x2 or 4x4 matrix, got " << m.rows() << "x" << m.cols();
    throw InvalidInput(os.str());
  }
}

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
  }
  return true;
}

}  // namespace

MeasurementSetting::MeasurementSetting(const Eigen::Vector3d& bloch) : bloch_(bloch) {
  if (!bloch.allFinite() || std::abs(bloch.norm() - 1.0) > kNormTol) {
    std::ostringstream os;
    os << "measurement setting needs a unit Bloch vector, got norm " << bloch.norm();
    throw InvalidInput(os.str());
  }
}

MeasurementSetting MeasurementSetting::from_direction(const Eigen::Vector3d& direction) {
  const double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("measurement direction is null");
  return MeasurementSetting(Eigen::Vector3d(direction / n));
}

MeasurementSetting MeasurementSetting::from_angles(double polar, double azimuth) {
  return from_direction({std::sin(polar) * std::cos(azimuth),
                         std::sin(polar) * std::sin(azimuth), std::cos(polar)});
}

double MeasurementSetting::polar() const {
  return std::acos(std::clamp(bloch_.z(), -1.0, 1.0));
}

double MeasurementSetting::azimuth() const { return std::atan2(bloch_.y(), bloch_.x()); }

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  const auto n = amplitudes_.size();
  if (n != 2 && n != 4) throw InvalidInput("pure state needs 2 or 4 amplitudes");
  if (std::abs(amplitudes_.squaredNorm() - 1.0) > kNormTol) {
    throw InvalidInput("pure state amplitudes are not normalized");
  }
}

PureState PureState::normalized(const ComplexVector& amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0)) throw InvalidInput("cannot normalize a null state vector");
  return PureState(amplitudes / n);
}

PureState PureState::basis(std::size_t dim, std::size_t index) {
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(v);
}

DensityMatrix::DensityMatrix(ComplexMatrix matrix) : matrix_(std::move(matrix)) {
  require_square(matrix_, "density matrix");
  if (!all_finite(matrix_)) throw InvalidInput("density matrix has non-finite entries");
  if (!is_hermitian(matrix_)) throw InvalidInput("density matrix is not Hermitian");
  if (std::abs(matrix_.trace() - Complex(1.0)) > kTraceTol) {
    std::ostringstream os;
    os << "density matrix trace " << matrix_.trace().real() << " differs from 1";
    throw InvalidInput(os.str());
  }
  if (eigenvalues()(0) < -kPositivityTol) throw InvalidInput("density matrix is not positive");
}

DensityMatrix::DensityMatrix(const PureState& state)
    : DensityMatrix(ComplexMatrix(state.amplitudes() * state.amplitudes().adjoint())) {}

DensityMatrix DensityMatrix::projected(const ComplexMatrix& matrix) {
  require_square(matrix, "density matrix");
  const ComplexMatrix herm = 0.5 * (matrix + matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm);
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  const double total = w.sum();
  if (!(total > 0.0)) throw InvalidInput("cannot project a null operator onto states");
  w /= total;
  ComplexMatrix out = es.eigenvectors() * w.cast<Complex>().asDiagonal() *
                      es.eigenvectors().adjoint();
  out = 0.5 * (out + out.adjoint());
  return DensityMatrix(out);
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  return DensityMatrix(identity(dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (matrix_ * matrix_).trace().real(); }

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

ComplexMatrix identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return ComplexMatrix::Identity(n, n);
}

ComplexMatrix pauli(const MeasurementSetting& setting) {
  const auto& n = setting.bloch();
  ComplexMatrix m(2, 2);
  m << n.z(), Complex(n.x(), -n.y()),
       Complex(n.x(), n.y()), -n.z();
  return m;
}

ComplexMatrix projector(const MeasurementSetting& setting, int outcome) {
  if (outcome != 1 && outcome != -1) throw InvalidInput("qubit outcome must be +1 or -1");
  return 0.5 * (identity(2) + static_cast<double>(outcome) * pauli(setting));
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != 2 || a.cols() != 2 || b.rows() != 2 || b.cols() != 2) {
    throw InvalidInput("tensor: both factors must be 2x2");
  }
  ComplexMatrix out(4, 4);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out.block(2 * i, 2 * j, 2, 2) = a(i, j) * b;
  }
  return out;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(tensor(a.matrix(), b.matrix()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, Party keep) {
  if (rho.dim() != 4) throw InvalidInput("partial_trace needs a two-qubit state");
  const auto& m = rho.matrix();
  ComplexMatrix out = ComplexMatrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int t = 0; t < 2; ++t) {
        out(i, j) += keep == Party::Alice ? m(2 * i + t, 2 * j + t) : m(2 * t + i, 2 * t + j);
      }
    }
  }
  return DensityMatrix::projected(out);
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double expectation(const DensityMatrix& rho, const ComplexMatrix& obs) {
  if (obs.rows() != static_cast<Eigen::Index>(rho.dim()) || obs.cols() != obs.rows()) {
    throw InvalidInput("observable dimension does not match the state");
  }
  if (!is_hermitian(obs)) throw InvalidInput("observable is not Hermitian");
  return (rho.matrix() * obs).trace().real();
}

double variance(const DensityMatrix& rho, const ComplexMatrix& obs) {
  const double mean = expectation(rho, obs);
  const double second = expectation(rho, obs * obs);
  return std::max(0.0, second - mean * mean);
}

ComplexMatrix unitary(const ComplexMatrix& generator, double theta) {
  require_square(generator, "generator");
  if (!is_hermitian(generator)) throw InvalidInput("generator is not Hermitian");
  const auto n = generator.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  // Pauli-axis generators square to the identity: exp(i t G) = cos t + i sin t G.
  if ((generator * generator - id).cwiseAbs().maxCoeff() < 1e-12) {
    return std::cos(theta) * id + kI * std::sin(theta) * generator;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(generator);
  ComplexVector phases(n);
  for (Eigen::Index i = 0; i < n; ++i) phases(i) = std::exp(kI * theta * es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

DensityMatrix evolve(const DensityMatrix& rho, const ComplexMatrix& generator, double theta) {
  if (generator.rows() != static_cast<Eigen::Index>(rho.dim())) {
    throw InvalidInput("generator dimension does not match the state");
  }
  const ComplexMatrix u = unitary(generator, theta);
  ComplexMatrix out = u * rho.matrix() * u.adjoint();
  out = 0.5 * (out + out.adjoint());
  return DensityMatrix(out);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidInput("trace distance between different dimensions");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.matrix() - b.matrix(),
                                                  Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double fidelity(const DensityMatrix& rho, const PureState& target) {
  if (rho.dim() != target.dim()) throw InvalidInput("fidelity between different dimensions");
  const auto& v = target.amplitudes();
  return (v.adjoint() * rho.matrix() * v)(0, 0).real();
}

}  // namespace steer
