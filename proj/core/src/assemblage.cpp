#include "steer/assemblage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "steer/error.hpp"
#include "steer/witnesses.hpp"

namespace steer {
namespace {

void require_two_qubits(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw InvalidInput("expected a two-qubit state");
}

// Nelder-Mead over (polar, azimuth); the parametrization is periodic so no
// bounds are needed.
SphereOptimum nelder_mead(const std::function<double(const MeasurementSetting&)>& f,
                          const MeasurementSetting& start, const SphereSearchOptions& opt) {
  using Point = Eigen::Vector2d;
  auto eval = [&](const Point& p) { return f(MeasurementSetting::from_angles(p(0), p(1))); };

  std::array<Point, 3> x{Point(start.polar(), start.azimuth()), Point(), Point()};
  x[1] = x[0] + Point(opt.simplex_edge, 0.0);
  x[2] = x[0] + Point(0.0, opt.simplex_edge);
  std::array<double, 3> fx{eval(x[0]), eval(x[1]), eval(x[2])};

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const int best = order[0], mid = order[1], worst = order[2];
    if (fx[worst] - fx[best] < opt.spread_tolerance) break;

    const Point centroid = 0.5 * (x[best] + x[mid]);
    const Point reflected = centroid + (centroid - x[worst]);
    const double fr = eval(reflected);
    if (fr < fx[best]) {
      const Point expanded = centroid + 2.0 * (centroid - x[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        x[worst] = expanded, fx[worst] = fe;
      } else {
        x[worst] = reflected, fx[worst] = fr;
      }
      continue;
    }
    if (fr < fx[mid]) {
      x[worst] = reflected, fx[worst] = fr;
      continue;
    }
    const bool outside = fr < fx[worst];
    const Point contracted = outside ? centroid + 0.5 * (reflected - centroid)
                                     : centroid + 0.5 * (x[worst] - centroid);
    const double fc = eval(contracted);
    if (fc < std::min(fr, fx[worst])) {
      x[worst] = contracted, fx[worst] = fc;
      continue;
    }
    for (int i : {mid, worst}) {
      x[i] = x[best] + 0.5 * (x[i] - x[best]);
      fx[i] = eval(x[i]);
    }
  }
  const auto it = std::min_element(fx.begin(), fx.end());
  const auto& p = x[static_cast<std::size_t>(it - fx.begin())];
  return {*it, MeasurementSetting::from_angles(p(0), p(1))};
}

}  // namespace

DensityMatrix Assemblage::average_state() const {
  ComplexMatrix sum = ComplexMatrix::Zero(2, 2);
  for (const auto& b : branches) {
    if (!b.degenerate) sum += b.probability * b.state.matrix();
  }
  return DensityMatrix::projected(sum);
}

Assemblage condition(const DensityMatrix& rho, const MeasurementSetting& setting) {
  require_two_qubits(rho);
  const ComplexMatrix id = identity(2);
  std::array<Branch, 2> branches{
      Branch{1, 0.0, DensityMatrix::maximally_mixed(2), true},
      Branch{-1, 0.0, DensityMatrix::maximally_mixed(2), true}};
  for (int idx = 0; idx < 2; ++idx) {
    const int k = outcome_value(idx);
    const ComplexMatrix p = tensor(projector(setting, k), id);
    const ComplexMatrix post = p * rho.matrix() * p;
    const double prob = std::max(0.0, post.trace().real());
    auto& b = branches[static_cast<std::size_t>(idx)];
    b.probability = prob;
    if (prob < kDegenerateProbability) continue;
    ComplexMatrix bob = ComplexMatrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int t = 0; t < 2; ++t) bob(i, j) += post(2 * t + i, 2 * t + j);
    b.state = DensityMatrix::projected(bob / prob);
    b.degenerate = false;
  }
  const double total = branches[0].probability + branches[1].probability;
  for (auto& b : branches) b.probability /= total;
  return {setting, branches};
}

JointTable joint_prob(const DensityMatrix& rho, const MeasurementSetting& alice,
                      const MeasurementSetting& bob) {
  require_two_qubits(rho);
  JointTable table{};
  double total = 0.0;
  for (int ik = 0; ik < 2; ++ik) {
    for (int ih = 0; ih < 2; ++ih) {
      const ComplexMatrix p =
          tensor(projector(alice, outcome_value(ik)), projector(bob, outcome_value(ih)));
      const double v = std::max(0.0, (rho.matrix() * p).trace().real());
      table[ik][ih] = v;
      total += v;
    }
  }
  for (auto& row : table)
    for (auto& v : row) v /= total;
  return table;
}

double est_variance(const DensityMatrix& rho, const MeasurementSetting& alice,
                    const MeasurementSetting& bob, const EstimatorSpec& est) {
  const JointTable p = joint_prob(rho, alice, bob);
  double sum = 0.0;
  for (int ik = 0; ik < 2; ++ik) {
    const double pk = p[ik][0] + p[ik][1];
    if (pk < kDegenerateProbability) continue;
    double guess = 0.0;
    switch (est.mode) {
      case EstimatorSpec::Mode::ConditionalMean:
        guess = (p[ik][0] - p[ik][1]) / pk;
        break;
      case EstimatorSpec::Mode::LinearIdentity:
        guess = outcome_value(ik);
        break;
      case EstimatorSpec::Mode::Custom:
        guess = est.table[static_cast<std::size_t>(ik)];
        break;
    }
    for (int ih = 0; ih < 2; ++ih) {
      const double dev = guess - outcome_value(ih);
      sum += p[ik][ih] * dev * dev;
    }
  }
  return sum;
}

ReidVariances reid_lhs(const DensityMatrix& rho) {
  require_two_qubits(rho);
  const auto x = pauli(MeasurementSetting::x());
  const auto y = pauli(MeasurementSetting::y());
  const auto z = pauli(MeasurementSetting::z());
  return {1.0 - expectation(rho, tensor(y, y)), 1.0 - expectation(rho, tensor(z, x))};
}

double conditional_variance(const DensityMatrix& rho, const MeasurementSetting& alice,
                            const MeasurementSetting& bob) {
  const Assemblage a = condition(rho, alice);
  const ComplexMatrix h = pauli(bob);
  double sum = 0.0;
  for (const auto& b : a.branches) {
    if (!b.degenerate) sum += b.probability * variance(b.state, h);
  }
  return sum;
}

double conditional_qfi(const DensityMatrix& rho, const MeasurementSetting& alice,
                       const MeasurementSetting& generator) {
  const Assemblage a = condition(rho, alice);
  double sum = 0.0;
  for (const auto& b : a.branches) {
    if (!b.degenerate) sum += b.probability * qfi(b.state, generator);
  }
  return sum;
}

std::vector<Eigen::Vector3d> fibonacci_sphere(int n) {
  if (n <= 0) throw InvalidInput("sphere grid needs at least one point");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

SphereOptimum minimize_on_sphere(const std::function<double(const MeasurementSetting&)>& f,
                                 const SphereSearchOptions& options) {
  const auto grid = fibonacci_sphere(options.grid_points);
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = f(MeasurementSetting::from_direction(grid[i]));
  }
  // min_element returns the first minimum: ties go to the lowest index.
  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  SphereOptimum coarse{values[best], MeasurementSetting::from_direction(grid[best])};
  SphereOptimum refined = nelder_mead(f, coarse.setting, options);
  return refined.value < coarse.value ? refined : coarse;
}

SphereOptimum optimize_variance(const DensityMatrix& rho, const MeasurementSetting& bob,
                                const SphereSearchOptions& options) {
  require_two_qubits(rho);
  return minimize_on_sphere(
      [&](const MeasurementSetting& k) { return conditional_variance(rho, k, bob); }, options);
}

SphereOptimum optimize_fisher(const DensityMatrix& rho, const MeasurementSetting& generator,
                              const SphereSearchOptions& options) {
  require_two_qubits(rho);
  auto best = minimize_on_sphere(
      [&](const MeasurementSetting& k) { return -conditional_qfi(rho, k, generator); }, options);
  best.value = -best.value;
  return best;
}

}  // namespace steer
