#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "steer/assemblage.hpp"
#include "steer/error.hpp"
#include "steer/expsim.hpp"
#include "steer/random.hpp"
#include "steer/source.hpp"

namespace steer {
namespace {

const double kPi = std::numbers::pi;

PreparedState source_state(double alpha, double mu = 1.0) {
  SourceConfig c;
  c.alpha = alpha;
  c.indistinguishability = mu;
  return prepare(c);
}

PreparedState mixed4() { return {DensityMatrix::maximally_mixed(4), 1.0}; }

/// Exact fringe table for a single populated branch.
ScanProbabilities synthetic_fringe(double v, double theta0, const std::vector<double>& thetas) {
  ScanProbabilities p;
  p.thetas = thetas;
  p.alice_prob = {1.0, 0.0};
  p.degenerate = {false, true};
  for (double t : thetas) {
    const double plus = 0.5 * (1.0 + v * std::cos(2.0 * t + theta0));
    p.bob_given_alice.push_back({{{plus, 1.0 - plus}, {0.5, 0.5}}});
  }
  return p;
}

TEST(ScanConfig, DefaultsAndValidation) {
  ScanConfig c;
  ASSERT_EQ(c.thetas.size(), 13u);
  EXPECT_NEAR(c.thetas.back(), 48.0 * kPi / 180.0, 1e-15);
  EXPECT_NO_THROW(c.validate());
  c.shots_per_setting = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.thetas = {0.0, 0.1, 0.1, 0.2, 0.3};
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(ScanProbabilities, Examples) {
  ScanConfig c;
  c.thetas = {0.0, kPi / 4, 0.1, 0.2, 0.3};
  const auto bell = scan_probabilities(source_state(kPi / 6), c);
  EXPECT_NEAR(bell.bob_given_alice[0][0][0], 1.0, 1e-12);
  EXPECT_NEAR(bell.bob_given_alice[0][0][1], 0.0, 1e-12);
  EXPECT_NEAR(bell.bob_given_alice[1][0][0], 0.5, 1e-12);
  for (std::size_t i = 0; i < c.thetas.size(); ++i) {
    const double t = c.thetas[i];
    EXPECT_NEAR(bell.bob_given_alice[i][0][0], std::cos(t) * std::cos(t), 1e-12);
  }
  const auto flat = scan_probabilities(mixed4(), c);
  for (const auto& row : flat.bob_given_alice)
    for (const auto& d : row) EXPECT_NEAR(d[0], 0.5, 1e-12);
}

TEST(ScanProbabilities, DegenerateBranchFlaggedAtOneHalf) {
  const auto p = scan_probabilities(source_state(0.0), ScanConfig{});
  EXPECT_FALSE(p.degenerate[0]);
  EXPECT_TRUE(p.degenerate[1]);
  for (const auto& row : p.bob_given_alice) EXPECT_EQ(row[1][0], 0.5);
}

TEST(SampleCounts, DeterministicPerSeed) {
  const auto p = scan_probabilities(source_state(0.3), ScanConfig{});
  const auto a = sample_counts(p, 1000, 42), b = sample_counts(p, 1000, 42);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_NE(a.counts, sample_counts(p, 1000, 43).counts);
  EXPECT_THROW(sample_counts(p, 0, 1), InvalidInput);
}

TEST(SampleCounts, ConcentratesWithinFiveSigma) {
  const auto p = synthetic_fringe(0.0, 0.0, default_thetas());
  const std::uint64_t shots = 1000000;
  const double tol = 5.0 * std::sqrt(0.25 / shots);
  int inside = 0, trials = 0;
  for (std::uint64_t seed = 0; trials < 1000; ++seed) {
    const auto data = sample_counts(p, shots, seed);
    for (const auto& c : data.counts) {
      if (trials >= 1000) break;
      const double f = static_cast<double>(c[0][0]) / static_cast<double>(c[0][0] + c[0][1]);
      inside += std::abs(f - 0.5) < tol;
      ++trials;
    }
  }
  EXPECT_GE(inside, 990);
}

TEST(SampleCounts, MarginalMeansMatchProbabilities) {
  const auto p = scan_probabilities(source_state(0.42, 0.8), ScanConfig{});
  const std::uint64_t shots = 1000000;
  const auto data = sample_counts(p, shots, 7);
  for (std::size_t i = 0; i < data.thetas.size(); ++i) {
    for (std::size_t d = 0; d < 2; ++d) {
      for (std::size_t b = 0; b < 2; ++b) {
        const double mean = shots * p.alice_prob[d] * p.bob_given_alice[i][d][b];
        EXPECT_LT(std::abs(static_cast<double>(data.counts[i][d][b]) - mean),
                  5.0 * std::sqrt(mean) + 1e-9);
      }
    }
  }
}

TEST(FitFringe, NoiselessBellFringe) {
  const auto fit = fit_fringe(scan_probabilities(source_state(kPi / 6), ScanConfig{}), 0);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.v, 1.0, 1e-9);
  EXPECT_LT(fit.residual_rms, 1e-9);
}

TEST(FitFringe, DistinguishablePhotonsReduceVisibility) {
  const auto fit = fit_fringe(scan_probabilities(source_state(kPi / 6, 0.0), ScanConfig{}), 0);
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.v, 1.0 - 1e-3);
  EXPECT_LT(fit.residual_rms, 1e-9);
}

TEST(FitFringe, RecoversVisibilityAndPhaseExactly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double v = u(rng), t0 = kPi * (2.0 * u(rng) - 1.0);
    const auto fit = fit_fringe(synthetic_fringe(v, t0, default_thetas()), 0);
    EXPECT_NEAR(fit.v, v, 1e-9);
    if (v > 1e-3) EXPECT_NEAR(std::remainder(fit.theta0 - t0, 2 * kPi), 0.0, 1e-8);
    EXPECT_GT(fit.theta0, -kPi);
    EXPECT_LE(fit.theta0, kPi);
  }
}

TEST(FitFringe, SyntheticRoundTripWithinThreeSigma) {
  const auto p = synthetic_fringe(0.9, 0.3, default_thetas());
  const int n = 200;
  int inside = 0;
  double pull2 = 0.0;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    const auto fit = fit_fringe(sample_counts(p, 1000000, seed), 0);
    ASSERT_TRUE(fit.converged);
    ASSERT_GT(fit.sigma_v, 0.0);
    const double pull = (fit.v - 0.9) / fit.sigma_v;
    inside += std::abs(pull) < 3.0;
    pull2 += pull * pull;
  }
  EXPECT_GE(inside, 196);
  EXPECT_NEAR(std::sqrt(pull2 / n), 1.0, 0.15);
}

TEST(FitFringe, VisibilityStaysPhysicalUnderNoise) {
  const auto p = synthetic_fringe(1.0, 0.0, default_thetas());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto fit = fit_fringe(sample_counts(p, 500, seed), 0);
    EXPECT_TRUE(fit.converged);
    EXPECT_GE(fit.v, 0.0);
    EXPECT_LE(fit.v, 1.0);
  }
}

TEST(FitFringe, UnfittableBranches) {
  const auto data = sample_counts(synthetic_fringe(0.5, 0.0, default_thetas()), 100, 1);
  EXPECT_THROW(fit_fringe(data, 1), Unfittable);
  const std::vector<FringeSample> two{{0.0, 0.5, 0.1}, {0.1, 0.5, 0.1}};
  EXPECT_THROW(fit_fringe(two), Unfittable);
}

TEST(FisherFromFit, Examples) {
  FitResult fit;
  fit.converged = true;
  fit.v = 1.0;
  for (double t : {0.1, 0.3, 0.7, 1.2}) EXPECT_NEAR(fisher_from_fit(fit, t).value, 4.0, 1e-9);
  fit.v = 0.0;
  EXPECT_NEAR(fisher_from_fit(fit, 0.4).value, 0.0, 1e-15);
  fit.v = 0.8;
  fit.theta0 = 0.2;
  const double quadrature = (kPi / 2 - fit.theta0) / 2.0;
  EXPECT_NEAR(fisher_from_fit(fit, quadrature).value, 2.56, 1e-12);
  EXPECT_NEAR(max_fisher(fit), 2.56, 1e-12);
}

TEST(FisherFromFit, MatchesFiniteDifferenceOfDefinition) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    FitResult fit;
    fit.converged = true;
    fit.v = 0.05 + 0.9 * u(rng);
    fit.theta0 = kPi * (2 * u(rng) - 1);
    const double t = kPi * u(rng);
    const double h = 1e-5;
    const double dp = (fit.model(t + h) - fit.model(t - h)) / (2 * h);
    const double p = fit.model(t), q = 1.0 - p;
    const double fd = dp * dp / p + dp * dp / q;
    const double got = fisher_from_fit(fit, t).value;
    EXPECT_NEAR(got, fd, 1e-6 * std::max(got, 1e-3));
  }
}

TEST(FisherFromFit, ClampsAtFringeExtremesAndNeedsConvergence) {
  FitResult fit;
  fit.converged = true;
  fit.v = 1.0;
  const auto pt = fisher_from_fit(fit, 0.0);
  EXPECT_TRUE(pt.clamped);
  EXPECT_TRUE(std::isfinite(pt.value));
  fit.converged = false;
  EXPECT_THROW(fisher_from_fit(fit, 0.3), InvalidInput);
}

TEST(ConditionalFisher, Examples) {
  EXPECT_NEAR(conditional_fisher_noiseless(source_state(kPi / 6), ScanConfig{}).value, 4.0, 1e-9);
  EXPECT_NEAR(conditional_fisher_noiseless(mixed4(), ScanConfig{}).value, 0.0, 1e-9);

  const auto state = source_state(0.42);
  ScanConfig c;
  c.seed = 11;
  const auto est = conditional_fisher_estimate(state, c);
  const double four_var = 4.0 * reid_lhs(state.rho).var_y;
  EXPECT_GT(est.value, 0.0);
  EXPECT_LE(est.value, 4.0);
  EXPECT_GT(est.value, four_var);
  EXPECT_NEAR(est.weight[0] + est.weight[1], 1.0, 1e-12);
}

TEST(ConditionalFisher, DegenerateBranchCarriesNoWeight) {
  const auto est = conditional_fisher_estimate(source_state(0.0), ScanConfig{});
  EXPECT_EQ(est.weight[1], 0.0);
  EXPECT_FALSE(est.fits[1].has_value());
  EXPECT_GT(est.value, 3.5);
}

TEST(ConditionalFisher, FitNeverBeatsBranchQfi) {
  ScanConfig c;
  c.shots_per_setting = 100000;
  for (double mu : {1.0, 0.8, 0.5}) {
    for (double alpha : {0.1, 0.3, 0.42, 0.5}) {
      const auto state = source_state(alpha, mu);
      const auto a = condition(state.rho, c.conditioning);
      c.seed = static_cast<std::uint64_t>(alpha * 1000 + mu * 10);
      const auto est = conditional_fisher_estimate(state, c);
      for (std::size_t d = 0; d < 2; ++d) {
        if (!est.fits[d]) continue;
        const auto& fit = *est.fits[d];
        const double sigma = 8.0 * fit.v * fit.sigma_v;
        EXPECT_LE(max_fisher(fit), qfi(a.branches[d].state, c.generator) + 3.0 * sigma);
      }
    }
  }
}

TEST(PoissonPropagate, Examples) {
  const auto perfect = poisson_propagate({100, 0, 0, 100});
  EXPECT_EQ(perfect.value, 1.0);
  EXPECT_LT(perfect.sigma, 1e-9);
  const auto flat = poisson_propagate({50, 50, 50, 50});
  EXPECT_NEAR(flat.value, 0.0, 1e-15);
  EXPECT_NEAR(flat.sigma, 1.0 / std::sqrt(200.0), 1e-15);
  const auto single = poisson_propagate({1, 0, 0, 0});
  EXPECT_EQ(single.value, 1.0);
  EXPECT_THROW(poisson_propagate({0, 0, 0, 0}), InvalidInput);
}

TEST(PoissonPropagate, MatchesBootstrap) {
  std::mt19937_64 rng(12);
  const CorrelatorCounts base{50, 50, 50, 50};
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    CorrelatorCounts c;
    for (std::size_t j = 0; j < 4; ++j) c[j] = poisson(rng, static_cast<double>(base[j]));
    const double e = poisson_propagate(c).value;
    s += e, s2 += e * e;
  }
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, poisson_propagate(base).sigma, 0.02 * poisson_propagate(base).sigma);
}

TEST(PoissonPropagate, BobMarginal) {
  const auto z = poisson_propagate({30, 10, 20, 40}, {1, -1, 1, -1});
  EXPECT_NEAR(z.value, 0.0, 1e-15);
  EXPECT_NEAR(z.sigma, std::sqrt(100.0) / 100.0, 1e-15);
}

TEST(MonteCarlo, SingleRunIsDegenerate) {
  const auto r = monte_carlo_errors([](std::uint64_t s) { return static_cast<double>(s); }, 1, 5);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.sigma, 0.0);
  EXPECT_EQ(r.mean, 5.0);
}

TEST(MonteCarlo, UsesSeedXorRunIndex) {
  std::vector<std::uint64_t> seen;
  monte_carlo_errors([&](std::uint64_t s) { seen.push_back(s); return 0.0; }, 4, 8);
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{8, 9, 10, 11}));
}

TEST(MonteCarlo, FailuresAreCountedThenFatal) {
  auto fail_every = [](std::uint64_t k) {
    return [k](std::uint64_t s) -> double {
      if (s % k == 0) throw Unfittable("synthetic failure");
      return 1.0;
    };
  };
  const auto ok = monte_carlo_errors(fail_every(10), 100, 0);
  EXPECT_EQ(ok.failures, 10u);
  EXPECT_THROW(monte_carlo_errors(fail_every(3), 100, 0), Error);
}

TEST(MonteCarlo, SigmaShrinksWithShots) {
  const auto state = source_state(kPi / 6, 0.8);
  auto sigma_at = [&](std::uint64_t shots) {
    return monte_carlo_errors(
               [&](std::uint64_t s) {
                 ScanConfig c;
                 c.shots_per_setting = shots;
                 c.seed = s;
                 return conditional_fisher_estimate(state, c).value;
               },
               100, 77)
        .sigma;
  };
  const double ratio = sigma_at(1000) / sigma_at(2000);
  EXPECT_NEAR(ratio, std::sqrt(2.0), 0.25 * std::sqrt(2.0));
}

TEST(MonteCarlo, HighShotLimitIsTight) {
  const auto state = source_state(kPi / 6);
  const auto r = monte_carlo_errors(
      [&](std::uint64_t s) {
        ScanConfig c;
        c.shots_per_setting = 10000000;
        c.seed = s;
        return conditional_fisher_estimate(state, c).value;
      },
      100, 3);
  EXPECT_LT(r.sigma, 0.02);
  EXPECT_NEAR(r.mean, 4.0, 0.02);
}

TEST(PhaseMle, InvertsFringe) {
  FitResult fringe;
  fringe.v = 0.9;
  fringe.theta0 = 0.3;
  fringe.converged = true;
  const double truth = 0.5;
  const double p = fringe.model(truth);
  const auto plus = static_cast<std::uint64_t>(std::llround(p * 1e8));
  const double got = phase_mle(plus, 100000000 - plus, fringe, 0.45);
  EXPECT_NEAR(got, truth, 1e-6);
}

TEST(ScanCsv, RoundTripsCountsAndAngles) {
  const auto p = scan_probabilities(source_state(0.25, 0.9), ScanConfig{});
  const auto data = sample_counts(p, 5000, 3);
  const std::string csv = to_csv(data);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "theta_deg,alice_outcome,bob_outcome,count");
  const auto back = scan_data_from_csv(csv);
  EXPECT_EQ(back.counts, data.counts);
  ASSERT_EQ(back.thetas.size(), data.thetas.size());
  for (std::size_t i = 0; i < data.thetas.size(); ++i) EXPECT_NEAR(back.thetas[i], data.thetas[i], 1e-9);
  EXPECT_EQ(to_csv(back), csv);
}

TEST(ScanCsv, RejectsMalformedInput) {
  EXPECT_THROW(scan_data_from_csv("theta,a,b,c\n"), InvalidInput);
  EXPECT_THROW(scan_data_from_csv("theta_deg,alice_outcome,bob_outcome,count\n0,2,1,5\n"),
               InvalidInput);
  EXPECT_THROW(scan_data_from_csv("theta_deg,alice_outcome,bob_outcome,count\n0,1,1,-5\n"),
               InvalidInput);
}

}  // namespace
}  // namespace steer
