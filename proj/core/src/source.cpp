#include "steer/source.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "steer/error.hpp"

namespace steer {
namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kMinSuccess = 1e-15;

void check_transmittivity(double t, const char* name) {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << name << " = " << t << " is outside [0, 1]";
    throw InvalidInput(os.str());
  }
}

double reflectivity(double t) { return std::sqrt(std::max(0.0, 1.0 - t * t)); }

}  // namespace

void SourceConfig::validate() const {
  if (!std::isfinite(alice_angle) || !std::isfinite(alpha)) {
    throw InvalidInput("source angles must be finite");
  }
  check_transmittivity(t_h, "t_H");
  check_transmittivity(t_v, "t_V");
  if (!(indistinguishability >= 0.0 && indistinguishability <= 1.0)) {
    throw InvalidInput("indistinguishability must lie in [0, 1]");
  }
}

PpbsBranches ppbs_branches(double t_h, double t_v) {
  check_transmittivity(t_h, "t_H");
  check_transmittivity(t_v, "t_V");
  const std::array<double, 2> t{t_h, t_v};
  const std::array<double, 2> r{reflectivity(t_h), reflectivity(t_v)};
  PpbsBranches b{ComplexMatrix::Zero(4, 4), ComplexMatrix::Zero(4, 4)};
  for (int pa = 0; pa < 2; ++pa) {
    for (int pb = 0; pb < 2; ++pb) {
      const int in = 2 * pa + pb;
      b.transmitted(in, in) = t[pa] * t[pb];
      // Both reflected: Bob's input lands at Alice's station and vice versa.
      b.reflected(2 * pb + pa, in) = (kI * r[pa]) * (kI * r[pb]);
    }
  }
  return b;
}

ComplexMatrix ppbs_map(double t_h, double t_v) {
  const auto b = ppbs_branches(t_h, t_v);
  return b.transmitted + b.reflected;
}

PureState input_state(const SourceConfig& config) {
  ComplexVector alice(2), bob(2);
  alice << std::cos(config.alice_angle), std::sin(config.alice_angle);
  bob << std::cos(2.0 * config.alpha), std::sin(2.0 * config.alpha);
  ComplexVector v(4);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) v(2 * i + j) = alice(i) * bob(j);
  }
  return PureState::normalized(v);
}

PreparedState prepare(const SourceConfig& config) {
  config.validate();
  const auto branches = ppbs_branches(config.t_h, config.t_v);
  const ComplexVector in = input_state(config).amplitudes();
  const ComplexVector coherent = (branches.transmitted + branches.reflected) * in;
  const ComplexVector through = branches.transmitted * in;
  const ComplexVector swapped = branches.reflected * in;

  const double mu = config.indistinguishability;
  const ComplexMatrix unnormalized =
      mu * coherent * coherent.adjoint() +
      (1.0 - mu) * (through * through.adjoint() + swapped * swapped.adjoint());
  const double success = unnormalized.trace().real();
  if (!(success > kMinSuccess)) {
    throw InvalidInput("post-selection probability vanishes for this source configuration");
  }
  ComplexMatrix rho = unnormalized / success;
  rho = 0.5 * (rho + rho.adjoint());
  return {DensityMatrix(rho), success};
}

PreparedState bosonic_oracle(const SourceConfig& config) {
  config.validate();
  // Mode index: arm * 4 + polarization * 2 + label. Arm 0 is a (input) and
  // c (output, Alice); arm 1 is b and d (Bob).
  constexpr int kModes = 8;
  auto mode = [](int arm, int pol, int label) { return arm * 4 + pol * 2 + label; };
  auto arm_of = [](int m) { return m / 4; };
  auto pol_of = [](int m) { return (m / 2) % 2; };
  auto label_of = [](int m) { return m % 2; };

  // Single-photon beam splitter: in-mode -> out-modes, symmetric convention.
  const std::array<double, 2> t{config.t_h, config.t_v};
  const std::array<double, 2> r{reflectivity(config.t_h), reflectivity(config.t_v)};
  Eigen::Matrix<Complex, kModes, kModes> bs = Eigen::Matrix<Complex, kModes, kModes>::Zero();
  for (int arm = 0; arm < 2; ++arm) {
    for (int pol = 0; pol < 2; ++pol) {
      for (int label = 0; label < 2; ++label) {
        const int in = mode(arm, pol, label);
        bs(mode(arm, pol, label), in) = t[pol];
        bs(mode(1 - arm, pol, label), in) = kI * r[pol];
      }
    }
  }

  // Creation-operator polynomials of each input photon.
  std::array<Complex, kModes> photon_a{}, photon_b{};
  const double ca = std::cos(config.alice_angle), sa = std::sin(config.alice_angle);
  const double cb = std::cos(2.0 * config.alpha), sb = std::sin(2.0 * config.alpha);
  const double overlap = std::sqrt(config.indistinguishability);
  const double orthogonal = std::sqrt(1.0 - config.indistinguishability);
  photon_a[mode(0, 0, 0)] = ca;
  photon_a[mode(0, 1, 0)] = sa;
  photon_b[mode(1, 0, 0)] = cb * overlap;
  photon_b[mode(1, 1, 0)] = sb * overlap;
  photon_b[mode(1, 0, 1)] = cb * orthogonal;
  photon_b[mode(1, 1, 1)] = sb * orthogonal;

  // Output polynomial coefficient of c_m^dag c_n^dag (operators commute).
  Eigen::Matrix<Complex, kModes, kModes> amp = Eigen::Matrix<Complex, kModes, kModes>::Zero();
  for (int ia = 0; ia < kModes; ++ia) {
    if (photon_a[ia] == Complex(0.0)) continue;
    for (int ib = 0; ib < kModes; ++ib) {
      if (photon_b[ib] == Complex(0.0)) continue;
      for (int oa = 0; oa < kModes; ++oa) {
        for (int ob = 0; ob < kModes; ++ob) {
          amp(oa, ob) += photon_a[ia] * photon_b[ib] * bs(oa, ia) * bs(ob, ib);
        }
      }
    }
  }

  // Keep one photon per output arm; |1_m 1_n> with m != n has unit norm.
  // post(pol_c, label_c, pol_d, label_d)
  std::array<std::array<std::array<std::array<Complex, 2>, 2>, 2>, 2> post{};
  for (int m = 0; m < kModes; ++m) {
    for (int n = 0; n < kModes; ++n) {
      if (arm_of(m) == arm_of(n)) continue;
      const int c = arm_of(m) == 0 ? m : n;
      const int d = arm_of(m) == 0 ? n : m;
      post[pol_of(c)][label_of(c)][pol_of(d)][label_of(d)] += amp(m, n);
    }
  }

  ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
  for (int pc = 0; pc < 2; ++pc)
    for (int pd = 0; pd < 2; ++pd)
      for (int qc = 0; qc < 2; ++qc)
        for (int qd = 0; qd < 2; ++qd)
          for (int lc = 0; lc < 2; ++lc)
            for (int ld = 0; ld < 2; ++ld)
              rho(2 * pc + pd, 2 * qc + qd) +=
                  post[pc][lc][pd][ld] * std::conj(post[qc][lc][qd][ld]);

  const double success = rho.trace().real();
  if (!(success > kMinSuccess)) {
    throw InvalidInput("post-selection probability vanishes for this source configuration");
  }
  rho /= success;
  rho = 0.5 * (rho + rho.adjoint());
  return {DensityMatrix(rho), success};
}

}  // namespace steer
