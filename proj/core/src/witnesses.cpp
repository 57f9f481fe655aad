#include "steer/witnesses.hpp"

#include <cmath>
#include <numbers>

#include "steer/assemblage.hpp"
#include "steer/error.hpp"

namespace steer {

std::string_view to_string(WitnessKind kind) {
  switch (kind) {
    case WitnessKind::S:
      return "S";
    case WitnessKind::Reid:
      return "Reid";
    case WitnessKind::Yfg:
      return "YFG";
  }
  return "?";
}

bool violates(WitnessKind kind, double value, double bound) {
  if (kind == WitnessKind::Reid) return value < bound - kVerdictTolerance;
  return value > bound + kVerdictTolerance;
}

double qfi(const DensityMatrix& rho, const MeasurementSetting& generator) {
  if (rho.dim() != 2) throw InvalidInput("qfi expects a single-qubit state");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  const ComplexMatrix g = es.eigenvectors().adjoint() * pauli(generator) * es.eigenvectors();
  double f = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      const double sum = lambda(i) + lambda(j);
      if (sum <= 1e-12) continue;
      const double diff = lambda(i) - lambda(j);
      f += diff * diff / sum * std::norm(g(i, j));
    }
  }
  return 2.0 * f;
}

WitnessReport s_witness(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw InvalidInput("S witness expects a two-qubit state");
  const auto x = pauli(MeasurementSetting::x());
  const auto y = pauli(MeasurementSetting::y());
  const auto z = pauli(MeasurementSetting::z());
  const double sum = expectation(rho, tensor(x, z)) + expectation(rho, tensor(z, x)) +
                     expectation(rho, tensor(y, y));
  const double value = std::abs(sum) / std::numbers::sqrt3;
  return {WitnessKind::S, value, 1.0, 0.0, 0.0, violates(WitnessKind::S, value, 1.0)};
}

WitnessReport reid_check(const DensityMatrix& rho) {
  const auto v = reid_lhs(rho);
  const double z_bob = expectation(partial_trace(rho, Party::Bob), pauli(MeasurementSetting::z()));
  const double value = v.var_y * v.var_x;
  const double bound = z_bob * z_bob;
  return {WitnessKind::Reid, value, bound, 0.0, 0.0, violates(WitnessKind::Reid, value, bound)};
}

WitnessReport yfg_check(const DensityMatrix& rho, const MeasurementSetting& conditioning,
                        const MeasurementSetting& generator, VarianceMode mode) {
  if (rho.dim() != 4) throw InvalidInput("YFG check expects a two-qubit state");
  const double value = conditional_qfi(rho, conditioning, generator);
  double bound = 0.0;
  if (mode == VarianceMode::EstClosedForm) {
    const auto g = pauli(generator);
    bound = 4.0 * (1.0 - expectation(rho, tensor(g, g)));
  } else {
    bound = 4.0 * conditional_variance(rho, generator, generator);
  }
  return {WitnessKind::Yfg, value, bound, 0.0, 0.0, violates(WitnessKind::Yfg, value, bound)};
}

}  // namespace steer
