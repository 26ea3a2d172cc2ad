#include "ttlnet/phase_type.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ttlnet/errors.hpp"

namespace ttlnet {

PhaseTypeDistribution::PhaseTypeDistribution(RateMatrix s, ProbabilityVector pi)
    : s_(std::move(s)), pi_(std::move(pi)) {
  if (!s_.is_square() || s_.rows() == 0) {
    throw ValidationError("PH subintensity must be square and non-empty");
  }
  if (pi_.size() != s_.rows()) {
    throw DimensionError("PH initial vector has length " + std::to_string(pi_.size()) +
                         ", subintensity has order " + std::to_string(s_.rows()));
  }
  const std::size_t m = s_.rows();
  for (std::size_t i = 0; i < m; ++i) {
    if (!(s_(i, i) < 0.0)) {
      throw ValidationError("PH subintensity diagonal entry " + std::to_string(i) +
                            " must be negative");
    }
  }
  for (const auto& e : s_.entries()) {
    if (e.row != e.col && e.value < 0.0) {
      throw ValidationError("PH subintensity has negative off-diagonal rate at (" +
                            std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
  }
  exit_rates_ = s_.row_sums();
  bool any_exit = false;
  for (std::size_t i = 0; i < m; ++i) {
    double& x = exit_rates_[i];
    x = -x;
    const double tol = 1e-12 * std::max(1.0, std::abs(s_(i, i)));
    if (x < -tol) {
      throw ValidationError("PH subintensity row " + std::to_string(i) + " sums to a positive value");
    }
    if (x < tol) {
      x = 0.0;
    }
    any_exit = any_exit || x > 0.0;
  }
  if (!any_exit) {
    throw ValidationError("PH distribution has no exit transition; absorption is unreachable");
  }
  // Every phase must be able to reach absorption, otherwise S is singular.
  std::vector<char> absorbing(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    absorbing[i] = exit_rates_[i] > 0.0;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& e : s_.entries()) {
      if (e.row != e.col && e.value > 0.0 && absorbing[e.col] && !absorbing[e.row]) {
        absorbing[e.row] = 1;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!absorbing[i]) {
      throw ValidationError("PH phase " + std::to_string(i) + " cannot reach absorption");
    }
  }
}

PhaseTypeDistribution PhaseTypeDistribution::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ValidationError("exponential rate must be positive and finite");
  }
  return {RateMatrix::from_dense({{-rate}}), ProbabilityVector{1.0}};
}

PhaseTypeDistribution PhaseTypeDistribution::erlang(std::size_t stages, double rate) {
  if (stages == 0) {
    throw ValidationError("Erlang needs at least one stage");
  }
  const std::vector<double> rates(stages, rate);
  return hypoexponential(rates);
}

PhaseTypeDistribution PhaseTypeDistribution::hypoexponential(std::span<const double> rates) {
  if (rates.empty()) {
    throw ValidationError("hypoexponential needs at least one stage");
  }
  const std::size_t k = rates.size();
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(rates[i] > 0.0) || !std::isfinite(rates[i])) {
      throw ValidationError("stage rate must be positive and finite");
    }
    entries.push_back({i, i, -rates[i]});
    if (i + 1 < k) {
      entries.push_back({i, i + 1, rates[i]});
    }
  }
  return {RateMatrix(k, k, std::move(entries)), ProbabilityVector::unit(k, 0)};
}

RateMatrix PhaseTypeDistribution::generator() const {
  const std::size_t m = order();
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < m; ++i) {
    entries.push_back({i + 1, 0, exit_rates_[i]});
  }
  append_block(entries, s_, 1, 1);
  return {m + 1, m + 1, std::move(entries)};
}

double PhaseTypeDistribution::mean() const { return ph_mean(*this); }

double PhaseTypeDistribution::second_moment() const {
  // E[T^2] = 2 pi (-S)^{-2} 1
  const std::vector<double> ones(order(), 1.0);
  const RateMatrix neg = s_.scaled(-1.0);
  const auto x = solve(neg, ones);
  const auto y = solve(neg, x);
  return 2.0 * std::inner_product(pi_.begin(), pi_.end(), y.begin(), 0.0);
}

PhaseTypeDistribution ph_min(const PhaseTypeDistribution& t1, const PhaseTypeDistribution& t2) {
  auto s = kron_sum(t1.subintensity(), t2.subintensity());
  auto pi = kron_vector(t1.initial().values(), t2.initial().values());
  return {std::move(s), ProbabilityVector(std::move(pi))};
}

double ph_mean(const PhaseTypeDistribution& t) {
  const std::vector<double> ones(t.order(), 1.0);
  const auto x = solve(t.subintensity(), ones);
  return -std::inner_product(t.initial().begin(), t.initial().end(), x.begin(), 0.0);
}

PhaseTypeSampler::PhaseTypeSampler(const PhaseTypeDistribution& t) : order_(t.order()) {
  phases_.resize(order_);
  const auto& s = t.subintensity();
  for (std::size_t i = 0; i < order_; ++i) {
    auto& phase = phases_[i];
    std::vector<double> weights;
    for (const auto& e : s.row(i)) {
      if (e.col == i) {
        phase.exit_rate = -e.value;
      } else if (e.value > 0.0) {
        phase.targets.push_back(e.col);
        weights.push_back(e.value);
      }
    }
    if (t.exit_rates()[i] > 0.0) {
      phase.targets.push_back(order_);
      weights.push_back(t.exit_rates()[i]);
    }
    phase.choose = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }
  start_ = std::discrete_distribution<std::size_t>(t.initial().begin(), t.initial().end());
}

double PhaseTypeSampler::operator()(Rng& rng) {
  std::size_t state = start_(rng);
  double elapsed = 0.0;
  while (state != order_) {
    auto& phase = phases_[state];
    elapsed += std::exponential_distribution<double>(phase.exit_rate)(rng);
    state = phase.targets[phase.choose(rng)];
  }
  return elapsed;
}

double sample_ph(const PhaseTypeDistribution& t, Rng& rng) {
  PhaseTypeSampler sampler(t);
  return sampler(rng);
}

}  // namespace ttlnet
