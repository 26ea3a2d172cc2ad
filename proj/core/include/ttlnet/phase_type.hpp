#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "ttlnet/rate_matrix.hpp"

namespace ttlnet {

/// Random stream used by every sampling routine. Callers own and seed it.
using Rng = std::mt19937_64;

/// Phase-type distribution: time to absorption of a finite CTMC.
///
/// Stored as the m x m subintensity S over the transient phases plus the
/// initial vector pi. The full generator places the absorbing state first:
///
///     P = [[0, 0], [S0, S]],   S0 = -S * 1.
///
/// Construction validates the subintensity and that absorption is reachable.
class PhaseTypeDistribution {
 public:
  PhaseTypeDistribution(RateMatrix s, ProbabilityVector pi);

  static PhaseTypeDistribution exponential(double rate);
  /// Erlang with `stages` identical stages of the given rate.
  static PhaseTypeDistribution erlang(std::size_t stages, double rate);
  /// Hypoexponential chain 1 -> 2 -> ... -> k -> absorb, stage i at rates[i].
  static PhaseTypeDistribution hypoexponential(std::span<const double> rates);

  std::size_t order() const noexcept { return s_.rows(); }
  const RateMatrix& subintensity() const noexcept { return s_; }
  const ProbabilityVector& initial() const noexcept { return pi_; }
  std::span<const double> exit_rates() const noexcept { return exit_rates_; }

  /// (m+1) x (m+1) generator with the absorbing state at index 0.
  RateMatrix generator() const;

  double mean() const;
  double second_moment() const;

 private:
  RateMatrix s_;
  ProbabilityVector pi_;
  std::vector<double> exit_rates_;
};

/// min(t1, t2) as a PH of order m*q. The first argument indexes the outer
/// phase, the second the inner one; swapping them permutes the state order.
PhaseTypeDistribution ph_min(const PhaseTypeDistribution& t1, const PhaseTypeDistribution& t2);

/// -pi * S^{-1} * 1.
double ph_mean(const PhaseTypeDistribution& t);

/// Draws absorption times by simulating the embedded jump chain. Not shareable
/// across threads; give each thread its own sampler and stream.
class PhaseTypeSampler {
 public:
  explicit PhaseTypeSampler(const PhaseTypeDistribution& t);

  double operator()(Rng& rng);

 private:
  struct Phase {
    double exit_rate = 0.0;
    std::vector<std::size_t> targets;  // phase index, or order() for absorption
    std::discrete_distribution<std::size_t> choose;
  };
  std::size_t order_ = 0;
  std::vector<Phase> phases_;
  std::discrete_distribution<std::size_t> start_;
};

double sample_ph(const PhaseTypeDistribution& t, Rng& rng);

}  // namespace ttlnet
