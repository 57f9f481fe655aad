#pragma once

// Test-only reference computations. Each routine takes a route independent
// of the library code it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "steer/qcore.hpp"

namespace steer::oracle {

inline ComplexMatrix ket_bra(const ComplexVector& v) { return v * v.adjoint(); }

/// Uniform random unit Bloch vector via normalized Gaussians.
inline MeasurementSetting random_setting(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v;
  do {
    v = {n(rng), n(rng), n(rng)};
  } while (v.norm() < 1e-6);
  return MeasurementSetting(Eigen::Vector3d(v.normalized()));
}

inline PureState random_pure(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ComplexVector v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = {n(rng), n(rng)};
  return PureState::normalized(v);
}

/// Ginibre-distributed mixed state G G^dagger / Tr.
inline DensityMatrix random_mixed(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const auto d = static_cast<Eigen::Index>(dim);
  ComplexMatrix g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = {n(rng), n(rng)};
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(rho);
}

/// Tr_A or Tr_B by sandwiching with basis vectors of the traced party.
inline ComplexMatrix trace_out(const ComplexMatrix& rho, bool keep_alice) {
  ComplexMatrix out = ComplexMatrix::Zero(2, 2);
  for (int t = 0; t < 2; ++t) {
    // s = id (x) e_t  or  e_t (x) id
    ComplexMatrix s = ComplexMatrix::Zero(4, 2);
    for (int i = 0; i < 2; ++i) {
      if (keep_alice) {
        s(2 * i + t, i) = 1.0;
      } else {
        s(2 * t + i, i) = 1.0;
      }
    }
    out += s.adjoint() * rho * s;
  }
  return out;
}

/// exp(i theta G) by Taylor series to convergence.
inline ComplexMatrix expm_series(const ComplexMatrix& g, double theta) {
  const auto n = g.rows();
  ComplexMatrix term = ComplexMatrix::Identity(n, n);
  ComplexMatrix sum = term;
  const std::complex<double> it{0.0, theta};
  for (int k = 1; k < 60; ++k) {
    term = term * g * it / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

/// Principal square root of a positive semidefinite Hermitian matrix.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.cast<std::complex<double>>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double uhlmann_fidelity(const ComplexMatrix& a, const ComplexMatrix& b) {
  const ComplexMatrix sa = psd_sqrt(a);
  const double f = psd_sqrt(sa * b * sa).trace().real();
  return f * f;
}

/// QFI from the Bures metric: 8 (1 - sqrt F(rho, rho_dt)) / dt^2, symmetrized.
inline double qfi_from_fidelity(const ComplexMatrix& rho, const ComplexMatrix& generator,
                                double dt = 1e-4) {
  const ComplexMatrix up = expm_series(generator, dt);
  const ComplexMatrix down = expm_series(generator, -dt);
  const ComplexMatrix r1 = up * rho * up.adjoint();
  const ComplexMatrix r2 = down * rho * down.adjoint();
  const double f = 0.5 * (std::sqrt(uhlmann_fidelity(rho, r1)) + std::sqrt(uhlmann_fidelity(rho, r2)));
  return 8.0 * (1.0 - f) / (dt * dt);
}

/// Ideal source amplitudes written out by hand for t_H = 1, t_V^2 = 1/3 and
/// Alice's input at pi/3: (c_A c_B, c_A s_B t_V, s_A c_B t_V, -s_A s_B / 3).
inline ComplexVector ideal_source_ket(double alpha) {
  const double ca = 0.5, sa = std::sqrt(3.0) / 2.0;
  const double cb = std::cos(2.0 * alpha), sb = std::sin(2.0 * alpha);
  const double tv = 1.0 / std::sqrt(3.0);
  ComplexVector v(4);
  v << ca * cb, ca * sb * tv, sa * cb * tv, -sa * sb / 3.0;
  return v / v.norm();
}

/// <A (x) B> by enumerating eigen-outcomes of both Pauli observables on a ket.
inline double correlator_by_enumeration(const ComplexVector& psi, const Eigen::Vector3d& a,
                                        const Eigen::Vector3d& b, bool bob_only = false) {
  auto eigvec = [](const Eigen::Vector3d& n, int k) {
    // Eigenvector of n.sigma with eigenvalue k from the Bloch angles.
    const double polar = std::acos(std::clamp(n.z(), -1.0, 1.0));
    const double az = std::atan2(n.y(), n.x());
    ComplexVector v(2);
    if (k == 1) {
      v << std::cos(polar / 2), std::polar(std::sin(polar / 2), az);
    } else {
      v << std::sin(polar / 2), -std::polar(std::cos(polar / 2), az);
    }
    return v;
  };
  double e = 0.0;
  for (int k : {1, -1}) {
    for (int h : {1, -1}) {
      const ComplexVector va = eigvec(a, k), vb = eigvec(b, h);
      std::complex<double> amp = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) amp += std::conj(va(i) * vb(j)) * psi(2 * i + j);
      e += (bob_only ? h : k * h) * std::norm(amp);
    }
  }
  return e;
}

}  // namespace steer::oracle
