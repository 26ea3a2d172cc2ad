#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "generators.hpp"
#include "ttlnet/map.hpp"
#include "ttlnet/map_metrics.hpp"
#include "ttlnet/ttl_io.hpp"

namespace ttlnet {
namespace {

// Dyadic literals keep every composed sum exact in binary floating point.
constexpr double a = 0.5, b = 0.25, l1 = 1.0, l2 = 2.0;
constexpr double mu1 = 1.5, mu2 = 0.75, nu1 = 2.5, nu2 = 1.25;

MarkovArrivalProcess mmpp() {
  return {RateMatrix::from_dense({{-a - l1, a}, {b, -b - l2}}), RateMatrix::from_dense({{l1, 0}, {0, l2}})};
}

PhaseTypeDistribution chain(double r1, double r2) {
  return PhaseTypeDistribution::hypoexponential(std::vector<double>{r1, r2});
}

std::vector<std::size_t> iota(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

bool active_rows_confined(const CacheOutput& out) {
  for (auto s : out.in_states) {
    if (!out.map.d1().row(s).empty()) {
      return false;
    }
  }
  return true;
}

TEST(OutputSigma, PoissonExponential) {
  const double lambda = 1.5, mu = 0.5;
  const auto out = output_sigma(MarkovArrivalProcess::poisson(lambda), PhaseTypeDistribution::exponential(mu));
  EXPECT_EQ(out.map.d0(), RateMatrix::from_dense({{-lambda, 0}, {mu, -mu}}));
  EXPECT_EQ(out.map.d1(), RateMatrix::from_dense({{0, lambda}, {0, 0}}));
  EXPECT_EQ(out.out_states, std::vector<std::size_t>{0});
  EXPECT_EQ(out.in_states, std::vector<std::size_t>{1});
}

TEST(OutputSigma, IteratedLineOfTwoCaches) {
  const double lambda = 1.5, mu = 0.5, nu = 2.25;
  const auto first = output_sigma(MarkovArrivalProcess::poisson(lambda), PhaseTypeDistribution::exponential(mu));
  const auto second = output_sigma(first.map, PhaseTypeDistribution::exponential(nu));
  EXPECT_EQ(second.map.d0(), RateMatrix::from_dense({{-lambda, 0, 0, 0},
                                                     {mu, -mu, 0, 0},
                                                     {nu, 0, -lambda - nu, lambda},
                                                     {0, nu, mu, -mu - nu}}));
  EXPECT_EQ(second.map.d1(), RateMatrix(4, 4, {{0, 3, lambda}}));
  EXPECT_EQ(second.out_states, iota(0, 2));
  EXPECT_EQ(second.in_states, iota(2, 4));
}

TEST(OutputSigma, MmppWithTwoPhaseTtl) {
  const auto out = output_sigma(mmpp(), chain(mu1, mu2));
  EXPECT_EQ(out.map.states(), 6u);
  EXPECT_EQ(out.map.d0(), RateMatrix::from_dense({{-a - l1, a, 0, 0, 0, 0},
                                                  {b, -b - l2, 0, 0, 0, 0},
                                                  {0, 0, -a - mu1, a, mu1, 0},
                                                  {0, 0, b, -b - mu1, 0, mu1},
                                                  {mu2, 0, 0, 0, -a - mu2, a},
                                                  {0, mu2, 0, 0, b, -b - mu2}}));
  EXPECT_EQ(out.map.d1(), RateMatrix(6, 6, {{0, 2, l1}, {1, 3, l2}}));
  EXPECT_EQ(out.out_states, iota(0, 2));
  EXPECT_EQ(out.in_states, iota(2, 6));
  EXPECT_TRUE(active_rows_confined(out));
}

TEST(OutputR, PoissonExponentialMatchesSigma) {
  const auto m = MarkovArrivalProcess::poisson(0.75);
  const auto t = PhaseTypeDistribution::exponential(1.25);
  const auto r = output_r(m, t);
  const auto s = output_sigma(m, t);
  EXPECT_EQ(r.map.d0(), s.map.d0());
  EXPECT_EQ(r.map.d1(), s.map.d1());
}

TEST(OutputR, MmppWithTwoPhaseTtlHasResetArcs) {
  const auto out = output_r(mmpp(), chain(nu1, nu2));
  EXPECT_EQ(out.map.states(), 6u);
  EXPECT_EQ(out.map.d0(), RateMatrix::from_dense({{-a - l1, a, 0, 0, 0, 0},
                                                  {b, -b - l2, 0, 0, 0, 0},
                                                  {0, 0, -a - nu1, a, nu1, 0},
                                                  {0, 0, b, -b - nu1, 0, nu1},
                                                  {nu2, 0, l1, 0, -a - l1 - nu2, a},
                                                  {0, nu2, 0, l2, b, -b - l2 - nu2}}));
  EXPECT_EQ(out.map.d1(), RateMatrix(6, 6, {{0, 2, l1}, {1, 3, l2}}));
  EXPECT_TRUE(active_rows_confined(out));
}

TEST(OutputR, MissProbabilityHalf) {
  const auto in = MarkovArrivalProcess::poisson(1.0);
  const auto out = output_r(in, PhaseTypeDistribution::exponential(1.0));
  EXPECT_NEAR(metrics_from_maps(in, out).miss_probability, 0.5, 1e-15);
}

TEST(OutputMin, PoissonExponentialsCollapseToSigma) {
  const auto m = MarkovArrivalProcess::poisson(1.5);
  const auto out = output_min(m, PhaseTypeDistribution::exponential(0.5), PhaseTypeDistribution::exponential(2.0));
  const auto ref = output_sigma(m, PhaseTypeDistribution::exponential(2.5));
  EXPECT_EQ(out.map.d0(), ref.map.d0());
  EXPECT_EQ(out.map.d1(), ref.map.d1());
}

TEST(OutputMin, HitProbabilityThird) {
  const auto in = MarkovArrivalProcess::poisson(1.0);
  const auto e = PhaseTypeDistribution::exponential(1.0);
  EXPECT_NEAR(metrics_from_maps(in, output_min(in, e, e)).hit_probability, 1.0 / 3.0, 1e-15);
}

TEST(OutputMin, MmppWithTwoTwoPhaseTtls) {
  const auto out = output_min(mmpp(), chain(mu1, mu2), chain(nu1, nu2));
  ASSERT_EQ(out.map.states(), 10u);
  // Layers: OUT, (s1,r1), (s1,r2), (s2,r1), (s2,r2), each holding the two MMPP states.
  // A hit moves the R phase back to r1 and keeps the Sigma phase.
  EXPECT_EQ(out.map.d0(),
            RateMatrix::from_dense({
                {-a - l1, a, 0, 0, 0, 0, 0, 0, 0, 0},
                {b, -b - l2, 0, 0, 0, 0, 0, 0, 0, 0},
                {0, 0, -a - mu1 - nu1, a, nu1, 0, mu1, 0, 0, 0},
                {0, 0, b, -b - mu1 - nu1, 0, nu1, 0, mu1, 0, 0},
                {nu2, 0, l1, 0, -a - l1 - mu1 - nu2, a, 0, 0, mu1, 0},
                {0, nu2, 0, l2, b, -b - l2 - mu1 - nu2, 0, 0, 0, mu1},
                {mu2, 0, 0, 0, 0, 0, -a - mu2 - nu1, a, nu1, 0},
                {0, mu2, 0, 0, 0, 0, b, -b - mu2 - nu1, 0, nu1},
                {mu2 + nu2, 0, 0, 0, 0, 0, l1, 0, -a - l1 - mu2 - nu2, a},
                {0, mu2 + nu2, 0, 0, 0, 0, 0, l2, b, -b - l2 - mu2 - nu2},
            }));
  EXPECT_EQ(out.map.d1(), RateMatrix(10, 10, {{0, 2, l1}, {1, 3, l2}}));
  EXPECT_EQ(out.out_states, iota(0, 2));
  EXPECT_EQ(out.in_states, iota(2, 10));
  EXPECT_TRUE(active_rows_confined(out));
}

TEST(OutputMin, StateLabelsNameLayers) {
  const auto out = output_sigma(mmpp(), chain(mu1, mu2));
  ASSERT_TRUE(out.map.state_labels().has_value());
  const auto& labels = *out.map.state_labels();
  EXPECT_EQ(labels.size(), 6u);
  EXPECT_EQ(labels.front().rfind("out", 0), 0u);
  EXPECT_EQ(labels.back().rfind("in", 0), 0u);
}

TEST(Hypoexponential, MissProcessMoments) {
  for (double lambda : {0.5, 1.0, 3.0}) {
    for (double mu : {0.25, 1.0, 2.0}) {
      const auto in = MarkovArrivalProcess::poisson(lambda);
      const auto t = PhaseTypeDistribution::exponential(mu);
      const double mean = 1.0 / lambda + 1.0 / mu;
      const double second = 2.0 / (lambda * lambda) + 2.0 / (lambda * mu) + 2.0 / (mu * mu);
      for (const auto& out : {output_sigma(in, t), output_r(in, t)}) {
        const auto mom = inter_event_moments(out.map);
        EXPECT_NEAR(mom.mean, mean, 1e-9 * mean);
        EXPECT_NEAR(mom.second_moment, second, 1e-9 * second);
      }
    }
  }
}

// Invariants over randomized inputs.

TEST(TtlIoProperties, ValidityContractionConfinementDimension) {
  Rng rng(300);
  for (int c = 0; c < 150; ++c) {
    const auto m = testing::random_arrivals(rng, 3);
    const auto t = testing::random_ttl(rng, 3);
    const auto t2 = testing::random_ttl(rng, 2);
    const double rate = fundamental_rate(m);
    const std::size_t n = m.states();
    const CacheOutput outs[] = {output_sigma(m, t), output_r(m, t), output_min(m, t, t2)};
    const std::size_t dims[] = {n * (t.order() + 1), n * (t.order() + 1), n * (t.order() * t2.order() + 1)};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& out = outs[k];
      EXPECT_EQ(out.map.states(), dims[k]);
      EXPECT_EQ(out.out_states, iota(0, n));
      EXPECT_EQ(out.in_states.size() + out.out_states.size(), dims[k]);
      const auto report = validate_map(out.map);
      EXPECT_TRUE(report.ok()) << report.summary();
      EXPECT_TRUE(active_rows_confined(out));
      EXPECT_LT(fundamental_rate(out.map), rate);
    }
  }
}

TEST(TtlIoProperties, ExponentialTtlCollapse) {
  Rng rng(301);
  for (int c = 0; c < 100; ++c) {
    const auto m = testing::random_arrivals(rng, 4);
    const auto t = PhaseTypeDistribution::exponential(testing::uniform(rng, 0.1, 5.0));
    const auto r = output_r(m, t);
    const auto s = output_sigma(m, t);
    EXPECT_EQ(r.map.d0(), s.map.d0());
    EXPECT_EQ(r.map.d1(), s.map.d1());
  }
}

}  // namespace
}  // namespace ttlnet
