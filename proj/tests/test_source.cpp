#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "steer/error.hpp"
#include "steer/source.hpp"

namespace steer {
namespace {

const double kPi = std::numbers::pi;

PureState bell() {
  return PureState::normalized((ComplexVector(4) << 0.5, 0.5, 0.5, -0.5).finished());
}

SourceConfig random_config(std::mt19937_64& rng, bool ideal_interference) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SourceConfig c;
  c.alice_angle = kPi * u(rng);
  c.alpha = kPi * (u(rng) - 0.5);
  c.t_h = 0.2 + 0.8 * u(rng);
  c.t_v = 0.05 + 0.95 * u(rng);
  c.indistinguishability = ideal_interference ? 1.0 : 0.01 + 0.98 * u(rng);
  return c;
}

TEST(PpbsMap, DefaultsGiveControlledSignGate) {
  const ComplexMatrix m = ppbs_map();
  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected.diagonal() << 1.0, 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), -1.0 / 3.0;
  EXPECT_LT((m - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PpbsMap, FullyTransmissiveIsIdentity) {
  EXPECT_LT((ppbs_map(1.0, 1.0) - identity(4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PpbsMap, OpaqueVerticalKeepsOnlyDoublyReflectedPath) {
  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected.diagonal() << 1.0, 0.0, 0.0, -1.0;
  EXPECT_LT((ppbs_map(1.0, 0.0) - expected).cwiseAbs().maxCoeff(), 1e-15);
  // Oracle: |D> (x) |D> through the same optics.
  SourceConfig c;
  c.alice_angle = kPi / 4;
  c.alpha = kPi / 8;
  c.t_v = 0.0;
  const auto oracle = bosonic_oracle(c);
  const auto analytic = prepare(c);
  EXPECT_LT(trace_distance(oracle.rho, analytic.rho), 1e-12);
  EXPECT_NEAR(oracle.success_probability, 0.5, 1e-12);
}

TEST(PpbsMap, RejectsTransmittivityOutsideUnitInterval) {
  EXPECT_THROW(ppbs_map(1.2, 0.5), InvalidInput);
  EXPECT_THROW(ppbs_map(1.0, -0.1), InvalidInput);
}

TEST(Prepare, MaximalCorrelationAtTwoAlphaPiOverThree) {
  SourceConfig c;
  c.alpha = kPi / 6;
  const auto s = prepare(c);
  EXPECT_GE(fidelity(s.rho, bell()), 1.0 - 1e-12);
  EXPECT_NEAR(s.success_probability, 0.25, 1e-12);
  const auto b = bosonic_oracle(c);
  EXPECT_NEAR(b.success_probability, 0.25, 1e-12);
  EXPECT_LT(trace_distance(partial_trace(s.rho, Party::Alice), DensityMatrix::maximally_mixed(2)),
            1e-12);
  EXPECT_LT(trace_distance(partial_trace(s.rho, Party::Bob), DensityMatrix::maximally_mixed(2)),
            1e-12);
}

TEST(Prepare, AlphaZeroGivesDiagonalTimesHorizontal) {
  SourceConfig c;
  c.alpha = 0.0;
  const auto s = prepare(c);
  const double r = 1.0 / std::sqrt(2.0);
  const auto dh = PureState((ComplexVector(4) << r, 0.0, r, 0.0).finished());
  EXPECT_GE(fidelity(s.rho, dh), 1.0 - 1e-12);
}

TEST(Prepare, DistinguishablePhotonsGiveMixedState) {
  SourceConfig c;
  c.indistinguishability = 0.0;
  const auto s = prepare(c);
  EXPECT_LT(s.rho.purity(), 1.0 - 1e-3);
  EXPECT_LT(trace_distance(s.rho, bosonic_oracle(c).rho), 1e-10);
}

TEST(Prepare, RejectsInvalidConfig) {
  SourceConfig c;
  c.indistinguishability = 1.5;
  EXPECT_THROW(prepare(c), InvalidInput);
  c = {};
  c.t_v = 2.0;
  EXPECT_THROW(bosonic_oracle(c), InvalidInput);
  c = {};
  c.alpha = std::numeric_limits<double>::infinity();
  EXPECT_THROW(prepare(c), InvalidInput);
}

TEST(BosonicOracle, FullyTransmissiveOpticsReturnInputProduct) {
  SourceConfig c;
  c.t_h = c.t_v = 1.0;
  c.alpha = 0.37;
  const auto out = bosonic_oracle(c);
  EXPECT_GE(fidelity(out.rho, input_state(c)), 1.0 - 1e-12);
  EXPECT_NEAR(out.success_probability, 1.0, 1e-12);
}

TEST(BosonicOracle, AgreesWithPrepareOnRandomConfigs) {
  std::mt19937_64 rng(2024);
  for (bool ideal : {true, false}) {
    for (int i = 0; i < 50; ++i) {
      const auto c = random_config(rng, ideal);
      const auto a = prepare(c), b = bosonic_oracle(c);
      EXPECT_LT(trace_distance(a.rho, b.rho), 1e-10) << "mu=" << c.indistinguishability;
      EXPECT_NEAR(a.success_probability, b.success_probability, 1e-12);
    }
  }
}

TEST(Prepare, PureExactlyAtFullIndistinguishability) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(prepare(random_config(rng, true)).rho.purity(), 1.0, 1e-12);
  }
}

TEST(Prepare, PurityBelowOneAndRisingTowardFullOverlap) {
  // The distinguishable limit is a two-term mixture, so purity has an interior
  // minimum near mu = 1/2 and rises again toward mu = 0.
  SourceConfig c;
  double previous = 0.0;
  for (int i = 0; i <= 20; ++i) {
    c.indistinguishability = i / 20.0;
    const double purity = prepare(c).rho.purity();
    if (i < 20) EXPECT_LT(purity, 1.0 - 1e-3);
    if (i > 10) EXPECT_GT(purity, previous);
    previous = purity;
  }
  c.indistinguishability = 0.5;
  EXPECT_NEAR(prepare(c).rho.purity(), 0.5, 1e-12);
  c.indistinguishability = 0.0;
  EXPECT_NEAR(prepare(c).rho.purity(), 0.625, 1e-12);
}

TEST(Prepare, SuccessProbabilityInRangeAndContinuous) {
  SourceConfig c;
  for (int i = 0; i <= 200; ++i) {
    c.alpha = -kPi / 2 + kPi * i / 200.0;
    const double p = prepare(c).success_probability;
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
    SourceConfig nudged = c;
    nudged.alpha += 1e-7;
    EXPECT_LT(std::abs(prepare(nudged).success_probability - p), 1e-6);
  }
}

}  // namespace
}  // namespace steer
